#pragma once

#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "wgraph.hpp"

namespace fwq {

enum class Regime { SingleCycle, Multicycle };
enum class RateSource { Computed, Supplied };

inline const char* regime_name(Regime r) {
  return r == Regime::SingleCycle ? "single-cycle" : "multicycle";
}

// Inputs for the decay-rate formulas. State 0 is the reference equilibrium
// (the unique deepest well); all vectors are indexed by state. Either V is
// given (and W, W_pair, h1 are derived from it) or the derived quantities are
// supplied directly for instances where V itself is not available.
template <class T>
struct RateInputs {
  Mat<T> V;                 // pairwise transition costs; empty when bypassed
  std::vector<T> infA_fV;   // per-state inf over the target set of f + V(state, .)
  std::vector<T> infA_2fV;  // per-state inf over the target set of 2f + V(state, .)
  T c{};                    // horizon exponent: T grows like e^{c/eps}
  std::optional<std::vector<T>> W;       // minimum one-root graph weights
  std::optional<std::vector<T>> W_pair;  // roots {0, j}; entry 0 is ignored
  std::optional<T> h1;                   // escape cost of state 0
  int f_sign = 0;  // +1 declares f >= 0 on the target set, enabling sanity bands
};

template <class T>
struct RateReport {
  std::vector<T> h;  // per-state escape costs; empty when V was not supplied
  T h1{};
  T w{};
  std::vector<T> W;
  std::vector<T> W_pair;  // entry 0 mirrors W[0]
  Regime regime{};
  std::vector<T> R1, R2, R3;
  T bias_rate{};
  T variance_rate{};
  int argmin_j = -1;           // state attaining the variance minimum
  int argmin_superscript = 0;  // which R family attains it (1, 2 or 3)
  RateSource source_W = RateSource::Computed;
  RateSource source_h1 = RateSource::Computed;
};

// Row minima of V off the diagonal: the cheapest escape from each state.
template <class T>
std::vector<T> compute_h(const Mat<T>& V) {
  int l = static_cast<int>(V.size());
  if (l < 2) fail(Err::ConfigInvalid, "need at least two states for escape costs");
  std::vector<T> h(l);
  for (int k = 0; k < l; ++k) {
    bool first = true;
    for (int j = 0; j < l; ++j) {
      if (j == k) continue;
      if (first || V[k][j] < h[k]) h[k] = V[k][j];
      first = false;
    }
  }
  return h;
}

// w = W(state 0) - min over j != 0 of W({0, j}).
template <class T>
T compute_w(const Mat<T>& V) {
  int l = static_cast<int>(V.size());
  if (l < 2) fail(Err::ConfigInvalid, "need at least two states");
  T w0 = min_wgraph_weight<T>(V, {0}).weight;
  bool first = true;
  T best{};
  for (int j = 1; j < l; ++j) {
    T wj = min_wgraph_weight<T>(V, {0, j}).weight;
    if (first || wj < best) best = wj;
    first = false;
  }
  return w0 - best;
}

template <class T>
Regime regime(const T& h1, const T& w) {
  return h1 > w ? Regime::SingleCycle : Regime::Multicycle;
}

namespace detail {

// Shared resolution step: fill W, W_pair, h1, w from V or from the supplied
// values, validate shapes, and record provenance.
template <class T>
struct Resolved {
  int l = 0;
  std::vector<T> h;
  T h1{};
  T w{};
  std::vector<T> W;
  std::vector<T> W_pair;
  Regime reg{};
  RateSource source_W = RateSource::Computed;
  RateSource source_h1 = RateSource::Computed;
};

template <class T>
Resolved<T> resolve(const RateInputs<T>& in) {
  Resolved<T> r;
  r.l = static_cast<int>(in.infA_fV.size());
  if (r.l < 2) fail(Err::ConfigInvalid, "need at least two states");
  if (in.infA_2fV.size() != in.infA_fV.size())
    fail(Err::ConfigInvalid, "infimum vectors must have equal length");
  if (in.f_sign > 0) {
    for (int j = 0; j < r.l; ++j) {
      if (in.infA_2fV[j] < in.infA_fV[j] || T(2) * in.infA_fV[j] < in.infA_2fV[j])
        fail(Err::ConfigInvalid,
             "infimum vectors violate the nonnegative-f band at state " + std::to_string(j));
    }
  }

  bool have_V = !in.V.empty();
  if (have_V) {
    if (static_cast<int>(in.V.size()) != r.l)
      fail(Err::ConfigInvalid, "cost matrix size does not match the infimum vectors");
    for (const auto& row : in.V) {
      if (static_cast<int>(row.size()) != r.l) fail(Err::ConfigInvalid, "cost matrix is not square");
      for (const T& v : row)
        if (v < T(0)) fail(Err::ConfigInvalid, "transition costs must be nonnegative");
    }
    r.h = compute_h(in.V);
  }

  if (in.W) {
    if (static_cast<int>(in.W->size()) != r.l)
      fail(Err::ConfigInvalid, "supplied W vector has the wrong length");
    r.W = *in.W;
    r.source_W = RateSource::Supplied;
  } else if (have_V) {
    r.W.resize(r.l);
    for (int j = 0; j < r.l; ++j) r.W[j] = min_wgraph_weight<T>(in.V, {j}).weight;
  } else {
    fail(Err::ConfigInvalid, "need either a cost matrix or supplied W values");
  }

  if (in.W_pair) {
    if (static_cast<int>(in.W_pair->size()) != r.l)
      fail(Err::ConfigInvalid, "supplied W_pair vector has the wrong length");
    r.W_pair = *in.W_pair;
    r.W_pair[0] = r.W[0];
  } else if (have_V) {
    r.W_pair.resize(r.l);
    r.W_pair[0] = r.W[0];
    for (int j = 1; j < r.l; ++j) r.W_pair[j] = min_wgraph_weight<T>(in.V, {0, j}).weight;
  } else {
    fail(Err::ConfigInvalid, "need either a cost matrix or supplied W_pair values");
  }

  if (in.h1) {
    r.h1 = *in.h1;
    r.source_h1 = RateSource::Supplied;
  } else if (have_V) {
    r.h1 = r.h[0];
  } else {
    fail(Err::ConfigInvalid, "need either a cost matrix or a supplied escape cost");
  }

  // State 0 must be the unique deepest well or every formula below shifts.
  for (int j = 1; j < r.l; ++j) {
    if (r.W[j] == r.W[0])
      fail(Err::NonUniqueDeepest, "states 0 and " + std::to_string(j) + " tie in W");
    if (r.W[j] < r.W[0]) fail(Err::ConfigInvalid, "state 0 is not the deepest well");
  }

  bool first = true;
  T best{};
  for (int j = 1; j < r.l; ++j) {
    if (first || r.W_pair[j] < best) best = r.W_pair[j];
    first = false;
  }
  r.w = r.W[0] - best;
  r.reg = regime(r.h1, r.w);
  return r;
}

template <class T>
T max_of(const T& a, const T& b) {
  return a > b ? a : b;
}

}  // namespace detail

// The m-parameterized third family: 2 inf[f+V] + 2 W(state) - 2 W(0) - (m + h1).
template <class T>
std::vector<T> multicycle_rates(const RateInputs<T>& in, const T& m) {
  auto r = detail::resolve(in);
  std::vector<T> R3(r.l);
  for (int j = 0; j < r.l; ++j)
    R3[j] = T(2) * in.infA_fV[j] + T(2) * r.W[j] - T(2) * r.W[0] - (m + r.h1);
  return R3;
}

template <class T>
RateReport<T> variance_decay_rates(const RateInputs<T>& in) {
  auto r = detail::resolve(in);
  T floor = detail::max_of(r.h1, r.w);
  if (!(in.c > floor))
    fail(Err::HorizonTooSmall, "horizon exponent must exceed max(h1, w)");

  RateReport<T> out;
  out.h = r.h;
  out.h1 = r.h1;
  out.w = r.w;
  out.W = r.W;
  out.W_pair = r.W_pair;
  out.regime = r.reg;
  out.source_W = r.source_W;
  out.source_h1 = r.source_h1;

  out.R1.resize(r.l);
  out.R2.resize(r.l);
  out.R3.resize(r.l);
  for (int j = 0; j < r.l; ++j) {
    out.R1[j] = in.infA_2fV[j] + r.W[j] - r.W[0];
    if (j == 0)
      out.R2[j] = T(2) * in.infA_fV[0] - r.h1;
    else
      out.R2[j] = T(2) * in.infA_fV[j] + r.W[j] - T(2) * r.W[0] + r.W_pair[j];
    // At the regime boundary the third family is evaluated with m + h1 = w.
    out.R3[j] = T(2) * in.infA_fV[j] + T(2) * r.W[j] - T(2) * r.W[0] - r.w;
  }

  bool multicycle = r.reg == Regime::Multicycle;
  bool first = true;
  for (int j = 0; j < r.l; ++j) {
    int kinds = multicycle ? 3 : 2;
    for (int k = 1; k <= kinds; ++k) {
      const T& v = k == 1 ? out.R1[j] : (k == 2 ? out.R2[j] : out.R3[j]);
      if (first || v < out.variance_rate) {
        out.variance_rate = v;
        out.argmin_j = j;
        out.argmin_superscript = k;
      }
      first = false;
    }
  }

  bool bfirst = true;
  T bmin{};
  for (int j = 0; j < r.l; ++j) {
    T v = in.infA_fV[j] + r.W[j];
    if (bfirst || v < bmin) bmin = v;
    bfirst = false;
  }
  out.bias_rate = bmin - r.W[0] + in.c - floor;
  return out;
}

template <class T>
T bias_decay_rate(const RateInputs<T>& in) {
  auto r = detail::resolve(in);
  T floor = detail::max_of(r.h1, r.w);
  if (!(in.c > floor))
    fail(Err::HorizonTooSmall, "horizon exponent must exceed max(h1, w)");
  bool first = true;
  T best{};
  for (int j = 0; j < r.l; ++j) {
    T v = in.infA_fV[j] + r.W[j];
    if (first || v < best) best = v;
    first = false;
  }
  return best - r.W[0] + in.c - floor;
}

struct StableReductionReport {
  bool part1 = false;  // W at every node vs the stable envelope formula
  bool part2 = false;  // one-root graph weights: full node set vs stable subset
  bool part3 = false;  // two-root graph weights with the deepest well pinned
  bool part4 = false;  // the bias minimum over all nodes vs stable nodes only
  bool ok() const { return part1 && part2 && part3 && part4; }
};

// Checks that every graph-weight quantity computed over the full node set
// agrees with the same quantity computed over stable nodes only.
template <class T>
StableReductionReport stable_reduction_check(const Mat<T>& V_all, const std::vector<int>& stable,
                                             const std::vector<T>& infA_fV_all) {
  int n = static_cast<int>(V_all.size());
  int ns = static_cast<int>(stable.size());
  if (ns < 1 || ns > n) fail(Err::ConfigInvalid, "stable subset size out of range");
  if (static_cast<int>(infA_fV_all.size()) != n)
    fail(Err::ConfigInvalid, "infimum vector must cover every node");
  for (int s : stable)
    if (s < 0 || s >= n) fail(Err::ConfigInvalid, "stable index out of range");

  Mat<T> Vs(ns, std::vector<T>(ns));
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) Vs[i][j] = V_all[stable[i]][stable[j]];

  std::vector<T> W_full(n), W_s(ns);
  for (int p = 0; p < n; ++p) W_full[p] = min_wgraph_weight<T>(V_all, {p}).weight;
  for (int j = 0; j < ns; ++j) W_s[j] = min_wgraph_weight<T>(Vs, {j}).weight;

  int deepest = 0;
  for (int j = 1; j < ns; ++j) {
    if (W_s[j] == W_s[deepest]) fail(Err::NonUniqueDeepest, "tied deepest stable node");
    if (W_s[j] < W_s[deepest]) deepest = j;
  }

  StableReductionReport rep;

  rep.part1 = true;
  for (int p = 0; p < n; ++p) {
    bool first = true;
    T env{};
    for (int j = 0; j < ns; ++j) {
      T v = W_s[j] + V_all[stable[j]][p];
      if (first || v < env) env = v;
      first = false;
    }
    if (!detail::weights_agree(W_full[p], env)) rep.part1 = false;
  }

  rep.part2 = true;
  for (int j = 0; j < ns; ++j)
    if (!detail::weights_agree(W_full[stable[j]], W_s[j])) rep.part2 = false;

  rep.part3 = true;
  for (int j = 0; j < ns; ++j) {
    if (j == deepest) continue;
    T full = min_wgraph_weight<T>(V_all, {stable[deepest], stable[j]}).weight;
    T sub = min_wgraph_weight<T>(Vs, {deepest, j}).weight;
    if (!detail::weights_agree(full, sub)) rep.part3 = false;
  }

  {
    bool first = true;
    T full{};
    for (int p = 0; p < n; ++p) {
      T v = infA_fV_all[p] + W_full[p];
      if (first || v < full) full = v;
      first = false;
    }
    first = true;
    T sub{};
    for (int j = 0; j < ns; ++j) {
      T v = infA_fV_all[stable[j]] + W_s[j];
      if (first || v < sub) sub = v;
      first = false;
    }
    rep.part4 = detail::weights_agree(full, sub);
  }
  return rep;
}

enum class DoubleWellCase { I, II, III, IV };

// Closed-form variance decay rates for the two-well family, by placement of
// the target set: I contains the shallow bottom, II sits on the inner slope,
// III on the outer slope below the inner barrier height, IV above it.
// b is the target set's height above the shallow minimum (ignored for I).
inline double doublewell_case_rate(double h_left, double h_right, DoubleWellCase c,
                                   double b = 0.0) {
  if (!(h_left > h_right) || !(h_right > 0))
    fail(Err::CaseParamOutOfRange, "well depths must satisfy h_left > h_right > 0");
  switch (c) {
    case DoubleWellCase::I:
      return h_left - 2 * h_right;
    case DoubleWellCase::II:
    case DoubleWellCase::III:
      if (!(b > 0) || !(b <= h_right))
        fail(Err::CaseParamOutOfRange, "need height offset in (0, h_right]");
      return h_left + 2 * (b - h_right);
    case DoubleWellCase::IV:
      if (!(b > h_right)) fail(Err::CaseParamOutOfRange, "need height offset above h_right");
      return h_left + (b - h_right);
  }
  fail(Err::CaseParamOutOfRange, "unknown case");
}

}  // namespace fwq
