#pragma once

#include <vector>

#include "fwq/rational.hpp"

namespace fwq {

// All routines here are exact over the rationals. Row-stochastic matrices
// are indexed 0..l-1; state 0 plays the role of the distinguished state.

void validate_stochastic(const RMat& P);
bool chain_irreducible(const RMat& P);

// Solves A x = b by fraction-free-pivoting Gaussian elimination.
RVec solve_linear(RMat A, RVec b);

// (I - Q)^{-1} for a substochastic transient block Q.
RMat fundamental_matrix(const RMat& Q);

// Stationary row vector, two independent routes. Both require irreducibility.
RVec stationary_solve(const RMat& P);  // linear system
RVec stationary_from_graphs(const RMat& P);   // arrow-map sums per root
RVec stationary_distribution(const RMat& P);  // computes both, returns on exact agreement

// Sum over all arrow maps into `roots` of the product of arrow probabilities.
Rat tree_sum(const RMat& P, const std::vector<int>& roots);

// Expected steps to first reach `target` (0 at the target itself).
RVec hitting_times(const RMat& P, int target);
Rat mean_hitting(const RMat& P, int from, int target);

// Visit counts over one cycle at state 0: the chain starts at 0, runs
// through its initial 0-block and the following excursion, and the cycle
// ends on re-entry to 0. E0Nj = expected visits to j per cycle; EjNj =
// expected visits to j before reaching 0, started at j.
struct VisitPair {
  Rat E0Nj;
  Rat EjNj;
};
// Arrow-map-ratio form and fundamental-matrix form are both evaluated and
// must agree exactly.
VisitPair expected_visits(const RMat& P, int j);

// P_i(hit j before returning to i), two routes with exact agreement.
Rat taboo_first_step(const RMat& P, int i, int j);
Rat taboo_tree(const RMat& P, int i, int j);
Rat taboo_probability(const RMat& P, int i, int j);

// A refined chain over blocks: block[x] gives the coarse state of refined
// state x. Every coarse state must own at least one refined state.
struct Refinement {
  RMat Pt;
  std::vector<int> block;
};

// Per-cycle visit bounds for a refined chain within band ratio a of the
// coarse chain. Throws BandViolated if some off-block row mass leaves
// [p_bj / a, a * p_bj]. The returned report carries the exact per-start
// expected visit counts, the coarse-chain bounds scaled by a^(4^(l-1)),
// and the geometric tail majorants, with their worst margins.
struct VisitBoundReport {
  bool ok = false;
  Rat min_margin_visits;              // min over x, j of rhs1[j] - E_visits[x][j]
  Rat min_margin_tail;                // min over j >= 1 of rhs2[j] - majorant[j]
  std::vector<RVec> E_visits;         // [start in block 0][coarse j]
  RVec rhs1;                          // per coarse j
  RVec majorant;                      // per coarse j (j = 0: block-0 run bound)
  RVec rhs2;                          // per coarse j
};
VisitBoundReport visit_bound_check(const RMat& P, const Refinement& ref, const Rat& a);

}  // namespace fwq
