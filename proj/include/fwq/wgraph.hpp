#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <vector>

#include "fwq/error.hpp"

namespace fwq {

// An arrow map over states 0..l-1: arrows[i] = target of i's unique outgoing
// arrow for i outside the root set, -1 at roots. Valid maps are exactly the
// functional graphs whose every path leads into the root set (no cycles).
using ArrowMap = std::vector<int>;
template <class T>
using Mat = std::vector<std::vector<T>>;
using AllowMask = std::vector<std::vector<char>>;

inline constexpr int kEnumerationCap = 9;

bool valid_wgraph(int l, const std::vector<int>& roots, const ArrowMap& g);

// Streams every valid arrow map for the given root set, in lexicographic
// order of the arrow vector. Throws TooLarge beyond the enumeration cap.
void for_each_wgraph(int l, const std::vector<int>& roots,
                     const std::function<void(const ArrowMap&)>& fn);

std::vector<ArrowMap> enumerate_wgraphs(int l, const std::vector<int>& roots);

// Rooted-forest count: k * l^(l-k-1) maps exist for |roots| = k.
unsigned long long wgraph_count_formula(int l, int k);

template <class T>
struct GraphMin {
  T weight{};
  std::vector<ArrowMap> argmins;  // lexicographically sorted
  std::size_t count_enumerated = 0;
};

namespace detail {

template <class T>
bool weights_agree(const T& a, const T& b) {
  if constexpr (std::is_floating_point_v<T>) {
    double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) <= 1e-9 * scale;
  } else {
    return a == b;
  }
}

template <class T>
struct Edge {
  int u, v;  // reversed orientation: arrow (to -> from) of the original map
  T w;
};

// Chu-Liu/Edmonds minimum arborescence (weight only) on a dense edge list,
// root 0; every other node needs exactly one incoming edge. Returns false
// when no arborescence exists.
template <class T>
bool chu_liu_weight(int n, std::vector<Edge<T>> edges, T& out) {
  T res{};
  int root = 0;
  std::vector<T> in_w(n);
  std::vector<char> has_in(n);
  std::vector<int> pre(n), id(n), vis(n);
  while (true) {
    std::fill(has_in.begin(), has_in.end(), 0);
    for (const auto& e : edges) {
      if (e.u == e.v) continue;
      if (!has_in[e.v] || e.w < in_w[e.v]) {
        in_w[e.v] = e.w;
        pre[e.v] = e.u;
        has_in[e.v] = 1;
      }
    }
    for (int v = 0; v < n; ++v)
      if (v != root && !has_in[v]) return false;
    int groups = 0;
    std::fill(id.begin(), id.end(), -1);
    std::fill(vis.begin(), vis.end(), -1);
    in_w[root] = T{};
    for (int v0 = 0; v0 < n; ++v0) {
      if (v0 != root) res += in_w[v0];
      int v = v0;
      while (vis[v] != v0 && id[v] == -1 && v != root) {
        vis[v] = v0;
        v = pre[v];
      }
      if (v != root && id[v] == -1) {
        id[v] = groups;
        for (int u = pre[v]; u != v; u = pre[u]) id[u] = groups;
        ++groups;
      }
    }
    if (groups == 0) break;
    for (int v = 0; v < n; ++v)
      if (id[v] == -1) id[v] = groups++;
    for (auto& e : edges) {
      int old_v = e.v;
      e.u = id[e.u];
      e.v = id[e.v];
      if (e.u != e.v) e.w -= in_w[old_v];
    }
    n = groups;
    root = id[root];
  }
  out = res;
  return true;
}

template <class T>
std::vector<Edge<T>> reversed_edges(const Mat<T>& V, const std::vector<int>& roots,
                                    const AllowMask* allowed,
                                    const std::vector<int>* forced = nullptr) {
  int l = static_cast<int>(V.size());
  std::vector<char> is_root(l, 0);
  for (int r : roots) is_root[r] = 1;
  // Relabel: merged root -> 0, non-roots -> 1.. in index order.
  std::vector<int> label(l, 0);
  int next = 1;
  for (int i = 0; i < l; ++i)
    if (!is_root[i]) label[i] = next++;
  std::vector<Edge<T>> edges;
  for (int i = 0; i < l; ++i) {
    if (is_root[i]) continue;
    for (int j = 0; j < l; ++j) {
      if (j == i) continue;
      if (allowed && !(*allowed)[i][j]) continue;
      if (forced && (*forced)[i] != -1 && (*forced)[i] != j) continue;
      if constexpr (std::is_floating_point_v<T>) {
        if (std::isinf(V[i][j])) continue;
      }
      edges.push_back({label[j], label[i], V[i][j]});
    }
  }
  return edges;
}

}  // namespace detail

// Minimum total weight of an arrow map into the root set, computed by the
// contraction algorithm (roots merged into one super-root). Throws
// Infeasible when no valid map has finite, allowed arrows.
template <class T>
T min_arborescence_weight(const Mat<T>& V, const std::vector<int>& roots,
                          const AllowMask* allowed = nullptr) {
  int l = static_cast<int>(V.size());
  int n = l - static_cast<int>(roots.size()) + 1;
  auto edges = detail::reversed_edges(V, roots, allowed);
  T w{};
  if (!detail::chu_liu_weight(n, std::move(edges), w))
    fail(Err::Infeasible, "no arrow map into the root set has finite weight");
  return w;
}

// Lexicographically smallest optimal arrow map, recovered by forcing arrows
// one node at a time and re-solving.
template <class T>
ArrowMap min_arborescence_argmin(const Mat<T>& V, const std::vector<int>& roots,
                                 const AllowMask* allowed = nullptr) {
  int l = static_cast<int>(V.size());
  std::vector<char> is_root(l, 0);
  for (int r : roots) is_root[r] = 1;
  int n = l - static_cast<int>(roots.size()) + 1;
  T best = min_arborescence_weight(V, roots, allowed);
  std::vector<int> forced(l, -1);
  for (int i = 0; i < l; ++i) {
    if (is_root[i]) continue;
    bool fixed = false;
    for (int j = 0; j < l && !fixed; ++j) {
      if (j == i) continue;
      if (allowed && !(*allowed)[i][j]) continue;
      if constexpr (std::is_floating_point_v<T>) {
        if (std::isinf(V[i][j])) continue;
      }
      forced[i] = j;
      auto edges = detail::reversed_edges(V, roots, allowed, &forced);
      T w{};
      if (detail::chu_liu_weight(n, std::move(edges), w) && detail::weights_agree(w, best))
        fixed = true;
    }
    if (!fixed) fail(Err::Infeasible, "argmin recovery failed");  // unreachable for consistent inputs
  }
  ArrowMap g(l, -1);
  for (int i = 0; i < l; ++i)
    if (!is_root[i]) g[i] = forced[i];
  return g;
}

// Minimum-weight arrow map into the root set. Within the enumeration cap the
// full graph family is enumerated (weight, all argmins, count) and the
// contraction algorithm is run as an independent cross-check; beyond the cap
// only the contraction path runs and a single argmin is recovered.
template <class T>
GraphMin<T> min_wgraph_weight(const Mat<T>& V, const std::vector<int>& roots,
                              const AllowMask* allowed = nullptr) {
  int l = static_cast<int>(V.size());
  GraphMin<T> out;
  if (l <= kEnumerationCap) {
    bool any = false;
    for_each_wgraph(l, roots, [&](const ArrowMap& g) {
      ++out.count_enumerated;
      T w{};
      for (int i = 0; i < l; ++i) {
        if (g[i] < 0) continue;
        if (allowed && !(*allowed)[i][g[i]]) return;
        if constexpr (std::is_floating_point_v<T>) {
          if (std::isinf(V[i][g[i]])) return;
        }
        w += V[i][g[i]];
      }
      if (!any || w < out.weight) {
        any = true;
        out.weight = w;
        out.argmins.clear();
        out.argmins.push_back(g);
      } else if (detail::weights_agree(w, out.weight)) {
        out.argmins.push_back(g);
      }
    });
    if (!any) fail(Err::Infeasible, "no arrow map into the root set has finite weight");
    std::sort(out.argmins.begin(), out.argmins.end());
    T cross = min_arborescence_weight(V, roots, allowed);
    if (!detail::weights_agree(cross, out.weight))
      throw std::logic_error("enumeration and contraction minima disagree");
    return out;
  }
  out.weight = min_arborescence_weight(V, roots, allowed);
  out.argmins.push_back(min_arborescence_argmin(V, roots, allowed));
  out.count_enumerated = 0;
  return out;
}

}  // namespace fwq
