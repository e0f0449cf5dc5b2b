#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "error.hpp"
#include "landscape.hpp"
#include "rates.hpp"
#include "rng.hpp"

namespace fwq {

// One configured trajectory: landscape, noise level, regeneration geometry.
// `ref` indexes eqs.points and marks the regeneration equilibrium; `start`
// lies on its delta-sphere.
struct SdeRun {
  const Landscape* L = nullptr;
  const EquilibriumSet* eqs = nullptr;
  double eps = 0;
  double dt = 0;
  double delta = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int ref = 0;
  double start = 0;
};

// Step size small enough to resolve delta-ball crossings (delta^2 over
// 10*a*eps) and the stiffest curvature (0.01 over max |U''|).
double choose_dt(const Landscape& L, double eps, double delta);

// Checks the run invariants: positive dt, delta below a quarter of the
// minimum inter-equilibrium gap (which keeps the 2delta balls disjoint).
void validate_run(const SdeRun& run);

SdeRun make_run(const Landscape& L, const EquilibriumSet& eqs, double eps, double delta,
                std::uint64_t seed, std::uint64_t stream = 0);

// Euler-Maruyama stepper. The sink sees each pre-step position (left
// endpoints), so exactly `steps` evaluations happen. Returns the final
// position. Inlined so per-step sinks cost nothing extra.
template <class F>
double stream_path(const SdeRun& run, std::uint64_t steps, F&& sink) {
  validate_run(run);
  const Landscape& L = *run.L;
  double period = L.period();
  double half = 0.5 * period;
  double noise = std::sqrt(L.a * run.eps * run.dt);
  Philox rng(run.seed, run.stream);
  double x = run.start;
  for (std::uint64_t k = 0; k < steps; ++k) {
    sink(x);
    double drift = L.dU(x) * run.dt;
    if (std::abs(drift) > half)
      fail(Err::StepUnstable, "drift step exceeds half the domain; reduce dt");
    x -= drift;
    if (noise != 0) x += noise * rng.next_normal();
    if (x < L.xl)
      x += period;
    else if (x >= L.xr)
      x -= period;
    if (x < L.xl || x >= L.xr) x = L.wrap(x);  // huge noise draw; rare
  }
  return x;
}

// One regenerative cycle: leave the reference sphere, touch some other
// equilibrium's delta-ball, and return. The excursion lists the embedded
// chain's ball entries from the opening reference visit through the closing
// one; visits counts every entry except the closing one, so concatenating
// cycles reproduces the embedded walk with each event counted once.
struct CycleRecord {
  double duration = 0;
  double integral_S = 0;
  std::vector<int> excursion;
  std::vector<int> visits;
};

struct MulticycleRecord {
  std::size_t member_count = 0;
  double duration = 0;
  double integral_S = 0;
};

// Target set and weight entering the cycle integrals: integrand is
// e^{-f(x)/eps} on the union of intervals, 0 elsewhere. A null f means 0.
struct Observable {
  std::vector<std::pair<double, double>> A;
  std::function<double(double)> f;
};

enum class SimMode { FixedCycles, Horizon };

struct SimOptions {
  SimMode mode = SimMode::FixedCycles;
  std::size_t cycles = 0;  // FixedCycles target
  double T = 0;            // Horizon window length
  std::uint64_t max_steps = 4'000'000'000ULL;
  bool close_straddling = true;  // keep stepping past T until the open cycle ends
};

struct SimResult {
  std::vector<CycleRecord> cycles;  // complete measured cycles, burn-in dropped
  std::size_t n_of_T = 0;    // renewal count: complete cycles plus the straddler
  double window_T = 0;       // measurement window actually covered
  double window_integral = 0;  // (1/T) integral of the weight over the window
  double straddle_S_inside = 0;  // straddling cycle's integral inside the window
  double straddle_S_after = 0;   // and the part accrued after T until it closed
  double straddle_duration = 0;  // full straddler length, set once it closes
  bool straddle_closed = false;
  bool incomplete = false;  // step budget ran out before the target
  std::uint64_t steps_used = 0;
  double final_x = 0;
};

// Runs the path, tracks both stopping-time families, and cuts the stream
// into regenerative cycles. One burn-in cycle is discarded before the
// measurement window opens.
SimResult detect_cycles(const SdeRun& run, const Observable& obs, const SimOptions& opt);

// Left-endpoint time average of the weight over [0, T], no cycle tracking.
double empirical_measure_integral(const SdeRun& run, const Observable& obs, double T,
                                  std::uint64_t max_steps = 4'000'000'000ULL);

struct MulticycleBuild {
  std::vector<MulticycleRecord> groups;
  bool regime_mismatch = false;  // flagged when h1 > w (single-cycle geometry)
  std::size_t cycles_used = 0;   // trailing incomplete group is dropped
};

// Groups consecutive cycles by independent geometric draws with success
// probability e^{-m/eps}. When h1 and w are known they gate the call:
// m + h1 must exceed w, and h1 > w is allowed but flagged.
MulticycleBuild build_multicycles(const std::vector<CycleRecord>& cycles, double m, double eps,
                                  std::uint64_t seed, std::optional<double> h1 = {},
                                  std::optional<double> w = {});

struct ReturnTimeLaw {
  std::size_t count = 0;
  double mean = 0;
  double ks_d = 0;   // KS distance of duration/mean against Exp(1)
  double ks_p = 0;
  double tail_rate = 0;  // fitted exponential envelope rate, must be positive
  bool tail_ok = false;  // survival at t = 1..5 below the envelope
  std::vector<double> tail_grid;
  std::vector<double> tail_survival;
};

ReturnTimeLaw return_time_law(const std::vector<double>& durations);
ReturnTimeLaw return_time_law(const std::vector<CycleRecord>& cycles);
ReturnTimeLaw return_time_law(const std::vector<MulticycleRecord>& groups);

// Per-replica horizon summary feeding the renewal identity checks.
struct HorizonStat {
  std::size_t n_of_T = 0;
  double renewal_sum_S = 0;    // per-cycle integrals through the straddler
  double window_integral = 0;  // (1/T) integral over [0, T]
};

struct WaldReport {
  std::size_t cycle_count = 0;
  std::size_t horizon_replicas = 0;
  double mean_lhs = 0, mean_rhs = 0, mean_se = 0, mean_gap_sigmas = 0;
  double ratio_lhs = 0, ratio_rhs = 0, ratio_se_combined = 0, ratio_gap_sigmas = 0;
  double split_lhs = 0, split_rhs = 0;
  bool mean_ok = false, ratio_ok = false, split_ok = false;
};

// Renewal identity checks: the normalized renewal sum against
// (mean N / T) * mean S1; the ratio mean S1 / mean tau1 against the direct
// window integral; and the variance split bound. The cycle sample and the
// horizon sample must come from independent replicas.
WaldReport wald_checks(const std::vector<CycleRecord>& cycles,
                       const std::vector<HorizonStat>& horizons, double T);

struct VarianceRatePoint {
  double eps = 0;
  double T = 0;
  std::size_t replicas = 0;
  double mean_N = 0, mean_S1 = 0, var_S1 = 0, mean_tau1 = 0, mean_integral = 0;
  double t_var = 0;       // T * variance across replicas of the window integral
  double rate_point = 0;  // -eps * log(t_var)
  bool incomplete = false;
};

struct VarianceRateSummary {
  std::vector<VarianceRatePoint> points;
  double extrapolated_rate = 0;  // intercept of rate_point regressed on eps
  double slope = 0, slope_se = 0, intercept_se = 0;
  double formula_rate = 0;
  Regime regime = Regime::SingleCycle;
  bool complete = true;
};

// Replica experiment across a decreasing eps grid with T = e^{c/eps}:
// estimates the per-eps variance decay and extrapolates the rate to eps = 0.
// The formula-side rate is computed internally from the landscape.
VarianceRateSummary variance_rate_experiment(const Landscape& L, const EquilibriumSet& eqs,
                                             const std::vector<double>& eps_grid, double c,
                                             const Observable& obs, int replicas,
                                             std::uint64_t seed, double delta,
                                             std::uint64_t max_steps_per_run, int jobs = 1);

// Transition counts of the concatenated per-cycle excursions. Row and
// column 0 correspond to the reference point; the other points follow in
// ascending index order.
Mat<long long> embedded_chain_counts(const std::vector<CycleRecord>& cycles, int n_points,
                                     int ref);

// Cheapest cost from the reference equilibrium to any other equilibrium's
// delta-sphere: the predicted exponential return-time rate.
double expected_return_exponent(const Landscape& L, const EquilibriumSet& eqs, int ref,
                                double delta);

// Runs body(replica) for each replica index, spreading work over `jobs`
// threads. Each body owns its own RNG stream; results land in
// replica-indexed slots so the merge order is deterministic.
void parallel_replicas(int replicas, int jobs, const std::function<void(int)>& body);

}  // namespace fwq
