#include "fwq/chain.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "fwq/error.hpp"
#include "fwq/wgraph.hpp"

namespace fwq {

namespace {

int side(const RMat& P) {
  int l = static_cast<int>(P.size());
  if (l == 0) fail(Err::ConfigInvalid, "empty transition matrix");
  for (const auto& row : P)
    if (static_cast<int>(row.size()) != l)
      fail(Err::ConfigInvalid, "transition matrix must be square");
  return l;
}

void check_state(int l, int s, const char* what) {
  if (s < 0 || s >= l) fail(Err::ConfigInvalid, std::string(what) + " index out of range");
}

std::vector<int> reach_set(const RMat& P, int start, bool forward) {
  int l = static_cast<int>(P.size());
  std::vector<char> seen(l, 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v = 0; v < l; ++v) {
      const Rat& p = forward ? P[u][v] : P[v][u];
      if (p > 0 && !seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  std::vector<int> out;
  for (int v = 0; v < l; ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

}  // namespace

void validate_stochastic(const RMat& P) {
  int l = side(P);
  for (int i = 0; i < l; ++i) {
    Rat s = 0;
    for (int j = 0; j < l; ++j) {
      if (P[i][j] < 0) fail(Err::ConfigInvalid, "negative transition probability");
      s += P[i][j];
    }
    if (s != 1)
      fail(Err::ConfigInvalid, "row " + std::to_string(i) + " sums to " + rat_to_string(s));
  }
}

bool chain_irreducible(const RMat& P) {
  int l = side(P);
  return static_cast<int>(reach_set(P, 0, true).size()) == l &&
         static_cast<int>(reach_set(P, 0, false).size()) == l;
}

RVec solve_linear(RMat A, RVec b) {
  int n = static_cast<int>(A.size());
  if (static_cast<int>(b.size()) != n) fail(Err::ConfigInvalid, "system size mismatch");
  for (const auto& row : A)
    if (static_cast<int>(row.size()) != n) fail(Err::ConfigInvalid, "system matrix not square");
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int r = c; r < n; ++r)
      if (A[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) fail(Err::Infeasible, "singular linear system");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < n; ++r) {
      if (A[r][c] == 0) continue;
      Rat f = A[r][c] / A[c][c];
      for (int k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  RVec x(n);
  for (int r = n - 1; r >= 0; --r) {
    Rat s = b[r];
    for (int k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
    x[r] = s / A[r][r];
  }
  return x;
}

RMat fundamental_matrix(const RMat& Q) {
  int n = static_cast<int>(Q.size());
  RMat A(n, RVec(n)), M(n, RVec(n, 0));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(Q[i].size()) != n) fail(Err::ConfigInvalid, "block not square");
    M[i][i] = 1;
    for (int j = 0; j < n; ++j) A[i][j] = (i == j ? Rat(1) : Rat(0)) - Q[i][j];
  }
  // Gauss-Jordan on [A | I].
  for (int c = 0; c < n; ++c) {
    int piv = -1;
    for (int r = c; r < n; ++r)
      if (A[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) fail(Err::Infeasible, "transient block is singular");
    std::swap(A[c], A[piv]);
    std::swap(M[c], M[piv]);
    Rat d = A[c][c];
    for (int k = 0; k < n; ++k) {
      A[c][k] /= d;
      M[c][k] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c || A[r][c] == 0) continue;
      Rat f = A[r][c];
      for (int k = 0; k < n; ++k) {
        A[r][k] -= f * A[c][k];
        M[r][k] -= f * M[c][k];
      }
    }
  }
  return M;
}

RVec stationary_solve(const RMat& P) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  if (!chain_irreducible(P)) fail(Err::Reducible, "chain is not irreducible");
  RMat A(l, RVec(l));
  RVec b(l, 0);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j) A[i][j] = P[j][i] - (i == j ? Rat(1) : Rat(0));
  for (int j = 0; j < l; ++j) A[l - 1][j] = 1;
  b[l - 1] = 1;
  return solve_linear(std::move(A), std::move(b));
}

Rat tree_sum(const RMat& P, const std::vector<int>& roots) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  Rat total = 0;
  for_each_wgraph(l, roots, [&](const ArrowMap& g) {
    Rat pi = 1;
    for (int i = 0; i < l; ++i)
      if (g[i] >= 0) pi *= P[i][g[i]];
    total += pi;
  });
  return total;
}

RVec stationary_from_graphs(const RMat& P) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  if (!chain_irreducible(P)) fail(Err::Reducible, "chain is not irreducible");
  RVec lam(l);
  Rat total = 0;
  for (int i = 0; i < l; ++i) {
    lam[i] = tree_sum(P, {i});
    total += lam[i];
  }
  if (total == 0) fail(Err::Reducible, "all arrow-map sums vanish");
  for (auto& v : lam) v /= total;
  return lam;
}

RVec stationary_distribution(const RMat& P) {
  RVec a = stationary_solve(P);
  RVec b = stationary_from_graphs(P);
  if (a != b) throw std::logic_error("stationary routes disagree");
  return a;
}

RVec hitting_times(const RMat& P, int target) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  check_state(l, target, "target");
  if (!chain_irreducible(P)) fail(Err::Reducible, "chain is not irreducible");
  std::vector<int> idx;  // states other than target
  for (int i = 0; i < l; ++i)
    if (i != target) idx.push_back(i);
  int n = static_cast<int>(idx.size());
  RMat A(n, RVec(n));
  RVec b(n, 1);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      A[r][c] = (r == c ? Rat(1) : Rat(0)) - P[idx[r]][idx[c]];
  RVec h = n > 0 ? solve_linear(std::move(A), std::move(b)) : RVec{};
  RVec full(l, 0);
  for (int r = 0; r < n; ++r) full[idx[r]] = h[r];
  return full;
}

Rat mean_hitting(const RMat& P, int from, int target) {
  int l = side(P);
  check_state(l, from, "source");
  return hitting_times(P, target)[from];
}

VisitPair expected_visits(const RMat& P, int j) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  check_state(l, j, "state");
  if (l < 2 || P[0][0] == 1) fail(Err::Reducible, "state 0 is absorbing, visit law undefined");
  if (!chain_irreducible(P)) fail(Err::Reducible, "chain is not irreducible");
  Rat leave0 = 1 - P[0][0];

  if (j == 0) {
    Rat run = 1 / leave0;
    // Independent route: cycle length times stationary mass at 0.
    RVec lam = stationary_solve(P);
    RVec h0 = hitting_times(P, 0);
    Rat cycle_len = run;
    for (int y = 1; y < l; ++y) cycle_len += P[0][y] / leave0 * h0[y];
    if (lam[0] * cycle_len != run) throw std::logic_error("visit identity failed at state 0");
    return {run, run};
  }

  // Fundamental-matrix route on the block without state 0.
  RMat Q(l - 1, RVec(l - 1));
  for (int r = 1; r < l; ++r)
    for (int c = 1; c < l; ++c) Q[r - 1][c - 1] = P[r][c];
  RMat M = fundamental_matrix(Q);
  Rat E0_direct = 0;
  for (int y = 1; y < l; ++y) E0_direct += P[0][y] / leave0 * M[y - 1][j - 1];
  Rat Ej_direct = M[j - 1][j - 1];

  // Arrow-map-ratio route.
  Rat S0 = tree_sum(P, {0});
  Rat Sj = tree_sum(P, {j});
  Rat S0j = tree_sum(P, {0, j});
  if (S0 == 0) fail(Err::Reducible, "no arrow map into state 0 has positive weight");
  Rat E0_tree = Sj / (leave0 * S0);
  Rat Ej_tree = S0j / S0;
  if (E0_tree != E0_direct || Ej_tree != Ej_direct)
    throw std::logic_error("visit-count routes disagree");

  // Commute-time identity as a third invariant.
  RVec lam = stationary_from_graphs(P);
  Rat commute = mean_hitting(P, j, 0) + mean_hitting(P, 0, j);
  if (lam[j] * commute != Ej_direct) throw std::logic_error("commute identity failed");
  return {E0_direct, Ej_direct};
}

Rat taboo_first_step(const RMat& P, int i, int j) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  check_state(l, i, "source");
  check_state(l, j, "target");
  if (i == j) fail(Err::ConfigInvalid, "taboo states must differ");
  if (!chain_irreducible(P)) fail(Err::Reducible, "chain is not irreducible");
  std::vector<int> idx;
  for (int x = 0; x < l; ++x)
    if (x != i && x != j) idx.push_back(x);
  int n = static_cast<int>(idx.size());
  RVec h;
  if (n > 0) {
    RMat A(n, RVec(n));
    RVec c(n);
    for (int r = 0; r < n; ++r) {
      c[r] = P[idx[r]][j];
      for (int s = 0; s < n; ++s)
        A[r][s] = (r == s ? Rat(1) : Rat(0)) - P[idx[r]][idx[s]];
    }
    h = solve_linear(std::move(A), std::move(c));
  }
  Rat out = P[i][j];
  for (int r = 0; r < n; ++r) out += P[i][idx[r]] * h[r];
  return out;
}

Rat taboo_tree(const RMat& P, int i, int j) {
  validate_stochastic(P);
  int l = static_cast<int>(P.size());
  check_state(l, i, "source");
  check_state(l, j, "target");
  if (i == j) fail(Err::ConfigInvalid, "taboo states must differ");
  RVec lam = stationary_from_graphs(P);
  Rat commute = mean_hitting(P, j, i) + mean_hitting(P, i, j);
  return 1 / (lam[i] * commute);
}

Rat taboo_probability(const RMat& P, int i, int j) {
  Rat a = taboo_first_step(P, i, j);
  Rat b = taboo_tree(P, i, j);
  if (a != b) throw std::logic_error("taboo routes disagree");
  return a;
}

VisitBoundReport visit_bound_check(const RMat& P, const Refinement& ref, const Rat& a) {
  validate_stochastic(P);
  validate_stochastic(ref.Pt);
  int l = static_cast<int>(P.size());
  int L = static_cast<int>(ref.Pt.size());
  if (static_cast<int>(ref.block.size()) != L)
    fail(Err::ConfigInvalid, "block labels must cover every refined state");
  std::vector<std::vector<int>> members(l);
  for (int x = 0; x < L; ++x) {
    if (ref.block[x] < 0 || ref.block[x] >= l)
      fail(Err::ConfigInvalid, "block label out of range");
    members[ref.block[x]].push_back(x);
  }
  for (int b = 0; b < l; ++b)
    if (members[b].empty())
      fail(Err::ConfigInvalid, "coarse state " + std::to_string(b) + " has no refined states");
  if (a < 1) fail(Err::ConfigInvalid, "band ratio must be at least 1");
  if (!chain_irreducible(P) || !chain_irreducible(ref.Pt))
    fail(Err::Reducible, "both chains must be irreducible");
  if (l < 2 || P[0][0] == 1) fail(Err::Reducible, "coarse state 0 is absorbing");

  // Band: every refined row's mass into a foreign block stays within a of
  // the coarse entry.
  RMat block_mass(L, RVec(l, 0));
  for (int x = 0; x < L; ++x)
    for (int y = 0; y < L; ++y) block_mass[x][ref.block[y]] += ref.Pt[x][y];
  for (int x = 0; x < L; ++x) {
    int b = ref.block[x];
    for (int j = 0; j < l; ++j) {
      if (j == b) continue;
      if (block_mass[x][j] * a < P[b][j] || block_mass[x][j] > a * P[b][j])
        fail(Err::BandViolated, "refined state " + std::to_string(x) + " mass into block " +
                                    std::to_string(j) + " is " + rat_to_string(block_mass[x][j]) +
                                    ", coarse entry " + rat_to_string(P[b][j]));
    }
  }

  // Phase-extended transient block: phase 0 tracks the opening run in block
  // 0, phase 1 the excursion; re-entering block 0 in phase 1 absorbs.
  const std::vector<int>& in0 = members[0];
  std::vector<int> out0;
  for (int x = 0; x < L; ++x)
    if (ref.block[x] != 0) out0.push_back(x);
  int n0 = static_cast<int>(in0.size());
  int nE = static_cast<int>(out0.size());
  std::vector<int> pos0(L, -1), posE(L, -1);
  for (int k = 0; k < n0; ++k) pos0[in0[k]] = k;
  for (int k = 0; k < nE; ++k) posE[out0[k]] = k;
  int n = n0 + nE;
  RMat Q(n, RVec(n, 0));
  for (int k = 0; k < n0; ++k) {
    int x = in0[k];
    for (int y = 0; y < L; ++y) {
      if (ref.Pt[x][y] == 0) continue;
      if (ref.block[y] == 0)
        Q[k][pos0[y]] = ref.Pt[x][y];
      else
        Q[k][n0 + posE[y]] = ref.Pt[x][y];
    }
  }
  for (int k = 0; k < nE; ++k) {
    int z = out0[k];
    for (int y = 0; y < L; ++y) {
      if (ref.Pt[z][y] == 0 || ref.block[y] == 0) continue;
      Q[n0 + k][n0 + posE[y]] = ref.Pt[z][y];
    }
  }
  RMat M = fundamental_matrix(Q);

  VisitBoundReport rep;
  rep.E_visits.assign(n0, RVec(l, 0));
  for (int k = 0; k < n0; ++k) {
    for (int y = 0; y < n0; ++y) rep.E_visits[k][0] += M[k][y];
    for (int e = 0; e < nE; ++e) rep.E_visits[k][ref.block[out0[e]]] += M[k][n0 + e];
  }

  Rat denom0 = 1 - P[0][0];
  Rat S0 = tree_sum(P, {0});
  unsigned long long expo = 1;
  for (int e = 0; e < l - 1; ++e) expo *= 4;
  Rat C = rat_pow(a, expo);
  rep.rhs1.assign(l, 0);
  rep.rhs2.assign(l, 0);
  rep.majorant.assign(l, 0);
  rep.rhs1[0] = a / denom0;
  rep.rhs2[0] = rep.rhs1[0];
  // block_mass[x][0] counts all of x's mass into block 0, staying included.
  Rat maxstay = 0;
  for (int x : in0) maxstay = rat_max(maxstay, block_mass[x][0]);
  rep.majorant[0] = 1 / (1 - maxstay);

  for (int j = 1; j < l; ++j) {
    rep.rhs1[j] = C * tree_sum(P, {j}) / (denom0 * S0);
    rep.rhs2[j] = C * tree_sum(P, {0, j}) / S0;
    // Worst-case refined probability of revisiting block j before block 0.
    std::vector<int> mid;  // refined states outside blocks 0 and j
    std::vector<int> posM(L, -1);
    for (int x = 0; x < L; ++x)
      if (ref.block[x] != 0 && ref.block[x] != j) {
        posM[x] = static_cast<int>(mid.size());
        mid.push_back(x);
      }
    int m = static_cast<int>(mid.size());
    RVec g;
    if (m > 0) {
      RMat A(m, RVec(m));
      RVec c(m, 0);
      for (int r = 0; r < m; ++r) {
        for (int s = 0; s < m; ++s)
          A[r][s] = (r == s ? Rat(1) : Rat(0)) - ref.Pt[mid[r]][mid[s]];
        for (int y = 0; y < L; ++y)
          if (ref.block[y] == j) c[r] += ref.Pt[mid[r]][y];
      }
      g = solve_linear(std::move(A), std::move(c));
    }
    Rat qstar = 0;
    for (int z : members[j]) {
      Rat q = 0;
      for (int y = 0; y < L; ++y) {
        if (ref.Pt[z][y] == 0) continue;
        if (ref.block[y] == j)
          q += ref.Pt[z][y];
        else if (ref.block[y] != 0)
          q += ref.Pt[z][y] * g[posM[y]];
      }
      qstar = rat_max(qstar, q);
    }
    if (qstar >= 1) throw std::logic_error("excursion return probability reached 1");
    rep.majorant[j] = 1 / (1 - qstar);
  }

  bool first = true;
  for (int k = 0; k < n0; ++k)
    for (int j = 0; j < l; ++j) {
      Rat margin = rep.rhs1[j] - rep.E_visits[k][j];
      if (first || margin < rep.min_margin_visits) rep.min_margin_visits = margin;
      first = false;
    }
  first = true;
  for (int j = 0; j < l; ++j) {
    Rat margin = rep.rhs2[j] - rep.majorant[j];
    if (first || margin < rep.min_margin_tail) rep.min_margin_tail = margin;
    first = false;
  }
  rep.ok = rep.min_margin_visits >= 0 && rep.min_margin_tail >= 0;
  return rep;
}

}  // namespace fwq
