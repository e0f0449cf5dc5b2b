#include "fwq/wgraph.hpp"

#include <string>

namespace fwq {

namespace {

void check_roots(int l, const std::vector<int>& roots) {
  if (l < 1) fail(Err::ConfigInvalid, "state count must be positive");
  if (roots.empty()) fail(Err::ConfigInvalid, "root set must be nonempty");
  std::vector<char> seen(l, 0);
  for (int r : roots) {
    if (r < 0 || r >= l) fail(Err::ConfigInvalid, "root index out of range");
    if (seen[r]) fail(Err::ConfigInvalid, "duplicate root index");
    seen[r] = 1;
  }
}

}  // namespace

bool valid_wgraph(int l, const std::vector<int>& roots, const ArrowMap& g) {
  if (static_cast<int>(g.size()) != l) return false;
  std::vector<char> is_root(l, 0);
  for (int r : roots) {
    if (r < 0 || r >= l) return false;
    is_root[r] = 1;
  }
  for (int i = 0; i < l; ++i) {
    if (is_root[i]) {
      if (g[i] != -1) return false;
      continue;
    }
    if (g[i] < 0 || g[i] >= l || g[i] == i) return false;
    // Every path must reach a root within l steps, else it loops.
    int u = i;
    for (int steps = 0; steps < l; ++steps) {
      if (is_root[u]) break;
      u = g[u];
    }
    if (!is_root[u]) return false;
  }
  return true;
}

void for_each_wgraph(int l, const std::vector<int>& roots,
                     const std::function<void(const ArrowMap&)>& fn) {
  check_roots(l, roots);
  if (l > kEnumerationCap)
    fail(Err::TooLarge, "enumeration capped at " + std::to_string(kEnumerationCap) +
                            " states, got " + std::to_string(l));
  std::vector<char> is_root(l, 0);
  for (int r : roots) is_root[r] = 1;
  std::vector<int> free_nodes;
  for (int i = 0; i < l; ++i)
    if (!is_root[i]) free_nodes.push_back(i);

  ArrowMap g(l, -1);
  // Depth-first over arrow choices; a partial assignment is pruned as soon
  // as the newest arrow closes a loop among already-assigned nodes.
  std::function<void(std::size_t)> rec = [&](std::size_t d) {
    if (d == free_nodes.size()) {
      fn(g);
      return;
    }
    int i = free_nodes[d];
    for (int j = 0; j < l; ++j) {
      if (j == i) continue;
      g[i] = j;
      int u = j;
      while (u != -1 && u != i && !is_root[u]) u = g[u];
      if (u != i) rec(d + 1);
    }
    g[i] = -1;
  };
  rec(0);
}

std::vector<ArrowMap> enumerate_wgraphs(int l, const std::vector<int>& roots) {
  std::vector<ArrowMap> all;
  for_each_wgraph(l, roots, [&](const ArrowMap& g) { all.push_back(g); });
  return all;
}

unsigned long long wgraph_count_formula(int l, int k) {
  if (l < 1 || k < 1 || k > l) fail(Err::ConfigInvalid, "need 1 <= k <= l");
  unsigned long long n = static_cast<unsigned long long>(k);
  for (int e = 0; e < l - k - 1; ++e) n *= static_cast<unsigned long long>(l);
  if (k == l) return 1;  // empty arrow map
  return n;
}

}  // namespace fwq
