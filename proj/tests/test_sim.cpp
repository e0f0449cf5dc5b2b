#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fwq/chain.hpp"
#include "fwq/error.hpp"
#include "fwq/landscape.hpp"
#include "fwq/rng.hpp"
#include "fwq/simulate.hpp"
#include "fwq/stats.hpp"

using namespace fwq;

namespace {

Err code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an Error");
}

bool same_cycles(const CycleRecord& a, const CycleRecord& b) {
  return a.duration == b.duration && a.integral_S == b.integral_S &&
         a.excursion == b.excursion && a.visits == b.visits;
}

}  // namespace

TEST_CASE("step size balances curvature and ball crossing") {
  Landscape L = make_quadratic_well();
  // Shoulder curvature peaks near 3.08; the curvature cap binds first.
  double dt = choose_dt(L, 0.1, 0.1);
  CHECK(dt > 3.1e-3);
  CHECK(dt < 3.4e-3);
  // A tight ball hands control to the crossing cap delta^2 / (10 a eps).
  double dt2 = choose_dt(L, 0.1, 0.01);
  CHECK(dt2 == doctest::Approx(0.01 * 0.01 / (10 * L.a * 0.1)).epsilon(1e-9));
  CHECK(code_of([&] { choose_dt(L, 0.1, 0.0); }) == Err::ConfigInvalid);
}

TEST_CASE("zero noise descends to the bottom") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  SdeRun run = make_run(L, eqs, 0.0, 0.05, 1);
  CHECK(run.ref == eqs.stable[eqs.deepest]);
  double prev_u = L.U(run.start);
  int climbs = 0;
  double final_x = stream_path(run, 200000, [&](double x) {
    double u = L.U(x);
    if (u > prev_u + 1e-12) ++climbs;
    prev_u = u;
  });
  CHECK(climbs == 0);  // gradient flow never climbs
  CHECK(std::abs(final_x - eqs.points[run.ref].x) < 1e-6);

  // Without noise the path never leaves the ball, so no cycle can close.
  SimOptions opt;
  opt.mode = SimMode::FixedCycles;
  opt.cycles = 1;
  opt.max_steps = 20000;
  CHECK(code_of([&] { detect_cycles(run, Observable{}, opt); }) == Err::NoCompleteCycle);
}

TEST_CASE("oversized drift steps are rejected") {
  Landscape L = make_quadratic_well();
  EquilibriumSet eqs = find_equilibria(L);
  SdeRun run;
  run.L = &L;
  run.eqs = &eqs;
  run.eps = 0.0;
  run.dt = 10.0;
  run.delta = 0.1;
  run.ref = eqs.stable[0];
  run.start = 2.5;
  CHECK(code_of([&] { stream_path(run, 100, [](double) {}); }) == Err::StepUnstable);
}

TEST_CASE("near the bottom the discrete chain has the OU variance") {
  Landscape L = make_quadratic_well();
  EquilibriumSet eqs = find_equilibria(L);
  const double eps = 0.1;
  SdeRun run = make_run(L, eqs, eps, 0.1, 12345);
  // X_{k+1} = (1 - dt) X_k + sqrt(2 eps dt) xi has variance eps / (1 - dt/2).
  double expect = eps / (1.0 - run.dt / 2);
  const std::uint64_t burn = 100000, total = 6000000;
  std::uint64_t k = 0;
  double s = 0, s2 = 0;
  std::uint64_t n = 0;
  stream_path(run, total, [&](double x) {
    if (++k <= burn) return;
    s += x;
    s2 += x * x;
    ++n;
  });
  double mean = s / n;
  double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(var == doctest::Approx(expect).epsilon(0.07));
}

TEST_CASE("identical runs are bit-identical, streams decorrelate") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  Observable obs;
  obs.A = {{0.2, 0.45}};
  SimOptions opt;
  opt.mode = SimMode::FixedCycles;
  opt.cycles = 10;
  SdeRun run = make_run(L, eqs, 0.35, 0.05, 777, 3);
  SimResult a = detect_cycles(run, obs, opt);
  SimResult b = detect_cycles(run, obs, opt);
  REQUIRE(a.cycles.size() == b.cycles.size());
  CHECK(a.final_x == b.final_x);
  CHECK(a.steps_used == b.steps_used);
  for (std::size_t i = 0; i < a.cycles.size(); ++i) CHECK(same_cycles(a.cycles[i], b.cycles[i]));

  SdeRun other = make_run(L, eqs, 0.35, 0.05, 777, 4);
  SimResult c = detect_cycles(other, obs, opt);
  CHECK(a.steps_used != c.steps_used);
}

TEST_CASE("a longer target keeps the shorter run as its prefix") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  SimOptions one;
  one.mode = SimMode::FixedCycles;
  one.cycles = 1;
  SimOptions five;
  five.mode = SimMode::FixedCycles;
  five.cycles = 5;
  SdeRun run = make_run(L, eqs, 0.35, 0.05, 2024, 1);
  SimResult r1 = detect_cycles(run, Observable{}, one);
  SimResult r5 = detect_cycles(run, Observable{}, five);
  REQUIRE(r1.cycles.size() == 1);
  REQUIRE(r5.cycles.size() == 5);
  CHECK(same_cycles(r1.cycles[0], r5.cycles[0]));
}

TEST_CASE("cycle bookkeeping on the double well") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  int ref = eqs.stable[eqs.deepest];
  Observable obs;
  obs.A = {{0.2, 0.45}};
  SimOptions opt;
  opt.mode = SimMode::FixedCycles;
  opt.cycles = 60;
  SdeRun run = make_run(L, eqs, 0.35, 0.05, 42, 1);
  SimResult res = detect_cycles(run, obs, opt);
  REQUIRE(res.cycles.size() == 60);
  CHECK(res.n_of_T == 60);
  CHECK_FALSE(res.incomplete);

  double dur_sum = 0, s_sum = 0;
  for (const CycleRecord& cyc : res.cycles) {
    CHECK(cyc.duration > 0);
    REQUIRE(cyc.excursion.size() >= 3);
    CHECK(cyc.excursion.front() == ref);
    CHECK(cyc.excursion.back() == ref);
    bool nonref = false;
    for (int b : cyc.excursion)
      if (b != ref) nonref = true;
    CHECK(nonref);
    // visits histogram covers every entry except the closing one.
    std::vector<int> hist(eqs.points.size(), 0);
    for (std::size_t i = 0; i + 1 < cyc.excursion.size(); ++i) ++hist[cyc.excursion[i]];
    CHECK(cyc.visits == hist);
    CHECK(cyc.integral_S >= 0);
    CHECK(cyc.integral_S <= cyc.duration + 1e-12);
    dur_sum += cyc.duration;
    s_sum += cyc.integral_S;
  }
  // The measured window is exactly the concatenation of the cycles.
  CHECK(res.window_T == doctest::Approx(dur_sum).epsilon(1e-9));
  CHECK(res.window_T * res.window_integral == doctest::Approx(s_sum).epsilon(1e-9));
}

TEST_CASE("empirical transition counts balance and obey the tree theorem") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  int ref = eqs.stable[eqs.deepest];
  SimOptions opt;
  opt.mode = SimMode::FixedCycles;
  opt.cycles = 80;
  SdeRun run = make_run(L, eqs, 0.4, 0.05, 99, 1);
  SimResult res = detect_cycles(run, Observable{}, opt);
  int n = static_cast<int>(eqs.points.size());
  Mat<long long> C = embedded_chain_counts(res.cycles, n, ref);

  // Concatenated excursions form closed walks, so flow balances per state.
  std::vector<long long> out(n, 0), in(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      out[i] += C[i][j];
      in[j] += C[i][j];
    }
  long long total = 0;
  for (int i = 0; i < n; ++i) {
    CHECK(out[i] == in[i]);
    total += out[i];
  }
  CHECK(total > 0);

  // The empirical chain's stationary law (computed by two exact graph
  // routes internally) is exactly the visit frequency vector.
  std::vector<int> visited;
  for (int i = 0; i < n; ++i)
    if (out[i] > 0) visited.push_back(i);
  REQUIRE(visited.size() >= 2);
  int m = static_cast<int>(visited.size());
  RMat P(m, RVec(m));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) P[a][b] = Rat(C[visited[a]][visited[b]], out[visited[a]]);
  RVec pi = stationary_distribution(P);
  for (int a = 0; a < m; ++a) CHECK(pi[a] == Rat(out[visited[a]], total));
}

TEST_CASE("horizon windows sandwich the renewal sums") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  Observable obs;
  obs.A = {{-0.7, -0.2}};
  SimOptions opt;
  opt.mode = SimMode::Horizon;
  opt.T = 600.0;
  SdeRun run = make_run(L, eqs, 0.3, 0.05, 5150, 1);
  SimResult res = detect_cycles(run, obs, opt);
  REQUIRE_FALSE(res.incomplete);
  CHECK(res.n_of_T == res.cycles.size() + 1);
  CHECK(res.straddle_closed);
  CHECK(res.straddle_duration > 0);
  CHECK(res.straddle_S_inside >= 0);
  CHECK(res.straddle_S_after >= 0);
  CHECK(std::abs(res.window_T - opt.T) <= run.dt);

  double dur_sum = 0, s_sum = 0;
  for (const CycleRecord& cyc : res.cycles) {
    dur_sum += cyc.duration;
    s_sum += cyc.integral_S;
  }
  // Complete cycles fit inside the window; adding the straddler covers it.
  CHECK(dur_sum <= res.window_T + 1e-9);
  CHECK(dur_sum + res.straddle_duration >= res.window_T - 1e-9);
  // The window integral splits exactly into complete and straddling parts.
  CHECK(res.window_T * res.window_integral ==
        doctest::Approx(s_sum + res.straddle_S_inside).epsilon(1e-9));

  // Cutting at T keeps the in-window quantities identical.
  SimOptions cut = opt;
  cut.close_straddling = false;
  SimResult res2 = detect_cycles(run, obs, cut);
  CHECK_FALSE(res2.straddle_closed);
  CHECK(res2.straddle_duration == 0);
  CHECK(res2.straddle_S_after == 0);
  CHECK(res2.n_of_T == res.n_of_T);
  CHECK(res2.window_integral == res.window_integral);
  CHECK(res2.straddle_S_inside == res.straddle_S_inside);
  CHECK(res2.steps_used <= res.steps_used);
  REQUIRE(res2.cycles.size() == res.cycles.size());
  for (std::size_t i = 0; i < res.cycles.size(); ++i)
    CHECK(same_cycles(res.cycles[i], res2.cycles[i]));
}

TEST_CASE("grouping cycles into multicycles") {
  std::vector<CycleRecord> cycles(50000);
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    cycles[i].duration = 1.0;
    cycles[i].integral_S = 0.5;
  }
  const double m = 0.3, eps = 0.3;
  MulticycleBuild mb = build_multicycles(cycles, m, eps, 31337);
  REQUIRE(!mb.groups.empty());
  CHECK_FALSE(mb.regime_mismatch);
  CHECK(mb.cycles_used <= cycles.size());
  std::size_t members = 0;
  for (const MulticycleRecord& g : mb.groups) {
    REQUIRE(g.member_count >= 1);
    CHECK(g.duration == static_cast<double>(g.member_count));  // exact sums of ones
    CHECK(g.integral_S == doctest::Approx(0.5 * g.member_count).epsilon(1e-12));
    members += g.member_count;
  }
  CHECK(members == mb.cycles_used);

  // Group sizes are geometric with success probability e^{-m/eps}.
  double p = std::exp(-m / eps);
  double expect_mean = 1.0 / p;
  double sd = std::sqrt((1.0 - p) / (p * p));
  double se = sd / std::sqrt(static_cast<double>(mb.groups.size()));
  double got = static_cast<double>(members) / static_cast<double>(mb.groups.size());
  CHECK(std::abs(got - expect_mean) <= 3 * se + 1e-9);

  MulticycleBuild again = build_multicycles(cycles, m, eps, 31337);
  REQUIRE(again.groups.size() == mb.groups.size());
  for (std::size_t i = 0; i < mb.groups.size(); ++i)
    CHECK(again.groups[i].member_count == mb.groups[i].member_count);

  // m = 0 groups nothing.
  MulticycleBuild flat = build_multicycles(cycles, 0.0, eps, 1);
  CHECK(flat.groups.size() == cycles.size());
  CHECK(flat.cycles_used == cycles.size());
  CHECK(flat.groups[0].member_count == 1);
}

TEST_CASE("multicycle regime gates") {
  std::vector<CycleRecord> cycles(10);
  for (auto& c : cycles) c.duration = 1.0;
  // m + h1 must exceed w.
  CHECK(code_of([&] { build_multicycles(cycles, 0.5, 0.3, 1, 1.0, 2.0); }) ==
        Err::RegimeMismatch);
  MulticycleBuild ok = build_multicycles(cycles, 1.5, 0.3, 1, 1.0, 2.0);
  CHECK_FALSE(ok.regime_mismatch);
  MulticycleBuild flagged = build_multicycles(cycles, 0.5, 0.3, 1, 3.0, 2.0);
  CHECK(flagged.regime_mismatch);
  CHECK(code_of([&] { build_multicycles(cycles, -0.1, 0.3, 1); }) == Err::ConfigInvalid);
  CHECK(code_of([&] { build_multicycles(cycles, 0.5, 0.0, 1); }) == Err::ConfigInvalid);
}

TEST_CASE("return-time law on synthetic samples") {
  CHECK(code_of([] {
          std::vector<double> d(99, 1.0);
          return_time_law(d);
        }) == Err::TooFewCycles);

  // Plug-in exponential quantiles: the law should look perfectly exponential.
  const int n = 1000;
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = -3.0 * std::log(1.0 - (i + 0.5) / n);
  ReturnTimeLaw law = return_time_law(d);
  CHECK(law.count == n);
  CHECK(law.mean == doctest::Approx(3.0).epsilon(0.01));
  CHECK(law.ks_p > 0.9);
  CHECK(law.tail_ok);
  CHECK(law.tail_rate > 0.9);
  CHECK(law.tail_rate < 1.05);

  // Random exponential draws still pass comfortably.
  Philox rng(0xE4D, 1);
  std::vector<double> r(2000);
  for (double& v : r) v = -0.7 * std::log(rng.next_unit());
  ReturnTimeLaw rl = return_time_law(r);
  CHECK(rl.ks_p > 0.01);
  CHECK(rl.tail_ok);

  // Uniform durations are decisively rejected.
  std::vector<double> u(1000);
  for (int i = 0; i < 1000; ++i) u[i] = 2.0 * (i + 0.5) / 1000;
  ReturnTimeLaw ul = return_time_law(u);
  CHECK(ul.ks_p < 1e-6);
}

TEST_CASE("renewal identity checks on a consistent synthetic world") {
  std::vector<CycleRecord> cycles(100);
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    cycles[i].duration = 1.0;
    cycles[i].integral_S = (i % 2 == 0) ? 0.4 : 0.6;
  }
  const double T = 10;
  std::vector<HorizonStat> horizons(10);
  for (std::size_t r = 0; r < horizons.size(); ++r) {
    horizons[r].n_of_T = 10;
    horizons[r].renewal_sum_S = (r % 2 == 0) ? 4.8 : 5.2;
    horizons[r].window_integral = (r % 2 == 0) ? 0.48 : 0.52;
  }
  WaldReport rep = wald_checks(cycles, horizons, T);
  CHECK(rep.cycle_count == 100);
  CHECK(rep.horizon_replicas == 10);
  CHECK(rep.mean_lhs == doctest::Approx(0.5));
  CHECK(rep.mean_rhs == doctest::Approx(0.5));
  CHECK(rep.mean_ok);
  CHECK(rep.ratio_lhs == doctest::Approx(0.5));
  CHECK(rep.ratio_rhs == doctest::Approx(0.5));
  CHECK(rep.ratio_ok);
  CHECK(rep.split_ok);

  CHECK(code_of([&] { wald_checks(cycles, {horizons[0]}, T); }) == Err::TooFewReplicas);
  CHECK(code_of([&] { wald_checks({cycles[0]}, horizons, T); }) == Err::TooFewReplicas);
  CHECK(code_of([&] { wald_checks(cycles, horizons, 0.0); }) == Err::ConfigInvalid);
}

TEST_CASE("variance experiment input validation") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  Observable obs;
  obs.A = {{0.2, 0.45}};
  CHECK(code_of([&] {
          variance_rate_experiment(L, eqs, {0.3, 0.2}, 1.2, obs, 4, 1, 0.05, 1000);
        }) == Err::ConfigInvalid);
  CHECK(code_of([&] {
          variance_rate_experiment(L, eqs, {0.3, 0.3, 0.2}, 1.2, obs, 4, 1, 0.05, 1000);
        }) == Err::ConfigInvalid);
  CHECK(code_of([&] {
          variance_rate_experiment(L, eqs, {0.3, 0.25, 0.2}, 1.2, obs, 1, 1, 0.05, 1000);
        }) == Err::TooFewReplicas);
  // The horizon exponent is guarded by the formula side.
  CHECK(code_of([&] {
          variance_rate_experiment(L, eqs, {0.3, 0.25, 0.2}, 0.1, obs, 2, 1, 0.05, 1000);
        }) == Err::HorizonTooSmall);
}

TEST_CASE("expected return exponent of the double well") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  int ref = eqs.stable[eqs.deepest];
  double e5 = expected_return_exponent(L, eqs, ref, 0.05);
  CHECK(e5 > 0.9);
  CHECK(e5 < 1.0);
  double e1 = expected_return_exponent(L, eqs, ref, 0.01);
  CHECK(e1 > e5);  // tighter balls sit higher on the barrier
  CHECK(e1 < 1.0);
}

TEST_CASE("window integral over the whole domain is one") {
  Landscape L = make_quadratic_well();
  EquilibriumSet eqs = find_equilibria(L);
  SdeRun run = make_run(L, eqs, 0.2, 0.1, 8);
  Observable whole;
  whole.A = {{L.xl, L.xr}};
  CHECK(empirical_measure_integral(run, whole, 5.0, 1000000) == 1.0);
  CHECK(code_of([&] { empirical_measure_integral(run, whole, 5.0, 10); }) ==
        Err::BudgetExceeded);
}

TEST_CASE("run validation") {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  CHECK(code_of([&] { make_run(L, eqs, 0.3, 0.3, 1); }) == Err::ConfigInvalid);
  SdeRun run = make_run(L, eqs, 0.3, 0.05, 1);
  SimOptions opt;
  opt.mode = SimMode::FixedCycles;
  opt.cycles = 0;
  CHECK(code_of([&] { detect_cycles(run, Observable{}, opt); }) == Err::ConfigInvalid);
  opt.mode = SimMode::Horizon;
  opt.T = 0;
  CHECK(code_of([&] { detect_cycles(run, Observable{}, opt); }) == Err::ConfigInvalid);
  Observable bad;
  bad.A = {{0.5, 0.2}};
  opt.T = 10;
  CHECK(code_of([&] { detect_cycles(run, bad, opt); }) == Err::ConfigInvalid);
}

TEST_CASE("replica scheduling fills every slot once") {
  std::vector<int> slots(23, -1);
  std::atomic<int> calls{0};
  parallel_replicas(23, 4, [&](int r) {
    slots[r] = r * r;
    calls.fetch_add(1);
  });
  CHECK(calls.load() == 23);
  for (int r = 0; r < 23; ++r) CHECK(slots[r] == r * r);

  CHECK_THROWS_AS(parallel_replicas(8, 3,
                                    [&](int r) {
                                      if (r == 5) throw std::runtime_error("boom");
                                    }),
                  std::runtime_error);
}
