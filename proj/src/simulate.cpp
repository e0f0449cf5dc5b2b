#include "fwq/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "fwq/stats.hpp"

namespace fwq {

double choose_dt(const Landscape& L, double eps, double delta) {
  if (eps < 0) fail(Err::ConfigInvalid, "noise level must be nonnegative");
  if (!(delta > 0)) fail(Err::ConfigInvalid, "neighborhood radius must be positive");
  double period = L.period();
  double h = 1e-5 * period;
  double max_curv = 0;
  int n = 8192;
  for (int i = 0; i < n; ++i) {
    double x = L.xl + period * (i + 0.5) / n;
    double dd = (L.dU(L.wrap(x + h)) - L.dU(L.wrap(x - h))) / (2 * h);
    max_curv = std::max(max_curv, std::abs(dd));
  }
  double dt = max_curv > 0 ? 0.01 / max_curv : 0.0;
  if (eps > 0) {
    double ball_cap = delta * delta / (10.0 * L.a * eps);
    dt = dt > 0 ? std::min(dt, ball_cap) : ball_cap;
  }
  if (!(dt > 0)) fail(Err::ConfigInvalid, "flat landscape with zero noise has no natural step size");
  return dt;
}

void validate_run(const SdeRun& run) {
  if (!run.L || !run.eqs) fail(Err::ConfigInvalid, "run needs a landscape and its equilibria");
  if (!(run.dt > 0)) fail(Err::ConfigInvalid, "step size must be positive");
  if (run.eps < 0) fail(Err::ConfigInvalid, "noise level must be nonnegative");
  if (!(run.delta > 0)) fail(Err::ConfigInvalid, "neighborhood radius must be positive");
  int n = static_cast<int>(run.eqs->points.size());
  if (run.ref < 0 || run.ref >= n) fail(Err::ConfigInvalid, "reference index out of range");
  double period = run.L->period();
  double gap = period;
  for (int i = 0; i < n; ++i) {
    double next = i + 1 < n ? run.eqs->points[i + 1].x : run.eqs->points[0].x + period;
    gap = std::min(gap, next - run.eqs->points[i].x);
  }
  // Quarter-gap bound; it also keeps all 2delta balls pairwise disjoint.
  if (!(run.delta < gap / 4))
    fail(Err::ConfigInvalid, "neighborhood radius must stay below a quarter of the smallest gap");
}

SdeRun make_run(const Landscape& L, const EquilibriumSet& eqs, double eps, double delta,
                std::uint64_t seed, std::uint64_t stream) {
  SdeRun run;
  run.L = &L;
  run.eqs = &eqs;
  run.eps = eps;
  run.delta = delta;
  run.dt = choose_dt(L, eps, delta);
  run.seed = seed;
  run.stream = stream;
  if (eqs.stable.empty()) fail(Err::NoEquilibria, "no stable equilibrium to regenerate at");
  run.ref = eqs.stable[eqs.deepest];
  run.start = L.wrap(eqs.points[run.ref].x + delta);
  validate_run(run);
  return run;
}

namespace {

void validate_observable(const Landscape& L, const Observable& obs) {
  for (const auto& [lo, hi] : obs.A) {
    if (!(lo <= hi) || lo < L.xl || hi > L.xr)
      fail(Err::ConfigInvalid, "target intervals must be ordered and inside the domain");
  }
}

}  // namespace

SimResult detect_cycles(const SdeRun& run, const Observable& obs, const SimOptions& opt) {
  validate_run(run);
  const Landscape& L = *run.L;
  validate_observable(L, obs);
  if (opt.mode == SimMode::FixedCycles && opt.cycles == 0)
    fail(Err::ConfigInvalid, "target cycle count must be positive");
  if (opt.mode == SimMode::Horizon && !(opt.T > 0))
    fail(Err::ConfigInvalid, "horizon length must be positive");
  bool f_zero = !obs.f;
  if (run.eps == 0 && !f_zero)
    fail(Err::ConfigInvalid, "weighted observables need positive noise");

  const auto& pts = run.eqs->points;
  int nb = static_cast<int>(pts.size());
  std::vector<double> centers(nb);
  for (int i = 0; i < nb; ++i) centers[i] = pts[i].x;
  double period = L.period(), half = 0.5 * period;
  double noise = std::sqrt(L.a * run.eps * run.dt);
  double two_delta = 2 * run.delta;
  double inv_eps = run.eps > 0 ? 1.0 / run.eps : 0.0;
  Philox rng(run.seed, run.stream);

  std::uint64_t T_steps = 0;
  if (opt.mode == SimMode::Horizon) {
    T_steps = static_cast<std::uint64_t>(std::llround(opt.T / run.dt));
    if (T_steps == 0) fail(Err::ConfigInvalid, "horizon shorter than one step");
  }

  auto dist = [&](double a, double c) {
    double d = a - c;
    if (d < -half)
      d += period;
    else if (d >= half)
      d -= period;
    return d < 0 ? -d : d;
  };

  SimResult res;
  double x = run.start;
  int cur = -1;  // ball whose 2delta shell the path has not left yet
  bool seen_nonref = false;
  bool measuring = false;
  bool done = false;
  std::uint64_t origin = 0, cycle_start = 0, last_boundary = 0;
  std::vector<int> excursion;
  double g_pre = 0, g_post = 0;  // open cycle's weight, split at the window edge
  double complete_g = 0;         // pushed cycles' in-window weight
  double straddle_g_in = 0, straddle_g_out = 0;
  double straddle_duration = 0;
  std::uint64_t steps = 0;

  auto push_cycle = [&](std::uint64_t k) {
    CycleRecord rec;
    rec.duration = static_cast<double>(k - cycle_start) * run.dt;
    rec.integral_S = g_pre * run.dt;
    rec.excursion = std::move(excursion);
    rec.visits.assign(nb, 0);
    for (std::size_t i = 0; i + 1 < rec.excursion.size(); ++i) ++rec.visits[rec.excursion[i]];
    res.cycles.push_back(std::move(rec));
    complete_g += g_pre;
    g_pre = 0;
    last_boundary = k;
    cycle_start = k;
    excursion.clear();
    excursion.push_back(run.ref);
  };

  auto z_event = [&](int j, std::uint64_t k) {
    if (measuring) excursion.push_back(j);
    if (j != run.ref) {
      seen_nonref = true;
      return;
    }
    if (!seen_nonref) return;  // re-entry without an excursion; not a boundary
    seen_nonref = false;
    if (!measuring) {
      // Burn-in cycle ends here; the measurement clock starts at zero.
      measuring = true;
      origin = k;
      cycle_start = k;
      last_boundary = k;
      excursion.assign(1, run.ref);
      return;
    }
    if (opt.mode == SimMode::FixedCycles) {
      push_cycle(k);
      if (res.cycles.size() >= opt.cycles) done = true;
      return;
    }
    if (k - origin <= T_steps) {
      push_cycle(k);
    } else {
      straddle_g_in = g_pre;
      straddle_g_out = g_post;
      straddle_duration = static_cast<double>(k - cycle_start) * run.dt;
      res.straddle_closed = true;
      done = true;
    }
  };

  for (std::uint64_t k = 0;; ++k) {
    if (k >= opt.max_steps) {
      res.incomplete = true;
      steps = k;
      break;
    }
    if (cur >= 0) {
      if (dist(x, centers[cur]) >= two_delta) cur = -1;
    } else {
      for (int j = 0; j < nb; ++j) {
        if (dist(x, centers[j]) <= run.delta) {
          z_event(j, k);
          cur = j;
          break;
        }
      }
    }
    if (done) {
      steps = k;
      break;
    }
    // A boundary exactly at the window edge counts as complete, so this
    // stop comes after the event handling for the step.
    if (measuring && opt.mode == SimMode::Horizon && !opt.close_straddling &&
        k - origin == T_steps) {
      straddle_g_in = g_pre;
      straddle_g_out = 0;
      steps = k;
      break;
    }
    if (measuring) {
      double g = 0;
      for (const auto& [lo, hi] : obs.A) {
        if (x >= lo && x <= hi) {
          g = f_zero ? 1.0 : std::exp(-obs.f(x) * inv_eps);
          break;
        }
      }
      if (g != 0) {
        if (opt.mode == SimMode::Horizon && k - origin >= T_steps)
          g_post += g;
        else
          g_pre += g;
      }
    }
    double drift = L.dU(x) * run.dt;
    if (std::abs(drift) > half)
      fail(Err::StepUnstable, "drift step exceeds half the domain; reduce dt");
    x -= drift;
    if (noise != 0) x += noise * rng.next_normal();
    if (x < L.xl)
      x += period;
    else if (x >= L.xr)
      x -= period;
    if (x < L.xl || x >= L.xr) x = L.wrap(x);
  }

  res.steps_used = steps;
  res.final_x = x;

  if (!measuring)
    fail(Err::NoCompleteCycle, "the run never completed its burn-in cycle");
  if (opt.mode == SimMode::FixedCycles) {
    if (res.cycles.empty()) fail(Err::NoCompleteCycle, "no complete cycle within the budget");
    std::uint64_t covered = last_boundary - origin;
    res.n_of_T = res.cycles.size();
    res.window_T = static_cast<double>(covered) * run.dt;
    res.window_integral = covered > 0 ? complete_g / static_cast<double>(covered) : 0.0;
    return res;
  }

  // Horizon bookkeeping. A budget stop mid-window covers fewer steps.
  std::uint64_t covered = std::min(steps - origin, T_steps);
  if (res.incomplete) {
    straddle_g_in = g_pre;
    straddle_g_out = g_post;
  }
  res.window_T = static_cast<double>(covered) * run.dt;
  res.window_integral =
      covered > 0 ? (complete_g + straddle_g_in) / static_cast<double>(covered) : 0.0;
  res.straddle_S_inside = straddle_g_in * run.dt;
  res.straddle_S_after = straddle_g_out * run.dt;
  res.straddle_duration = straddle_duration;
  res.n_of_T = res.cycles.size() + 1;  // the straddler is the N-th renewal interval
  return res;
}

double empirical_measure_integral(const SdeRun& run, const Observable& obs, double T,
                                  std::uint64_t max_steps) {
  validate_run(run);
  validate_observable(*run.L, obs);
  bool f_zero = !obs.f;
  if (run.eps == 0 && !f_zero)
    fail(Err::ConfigInvalid, "weighted observables need positive noise");
  std::uint64_t T_steps = static_cast<std::uint64_t>(std::llround(T / run.dt));
  if (T_steps == 0) fail(Err::ConfigInvalid, "window shorter than one step");
  if (T_steps > max_steps) fail(Err::BudgetExceeded, "window needs more steps than the budget");
  double inv_eps = run.eps > 0 ? 1.0 / run.eps : 0.0;
  double gsum = 0;
  stream_path(run, T_steps, [&](double x) {
    for (const auto& [lo, hi] : obs.A) {
      if (x >= lo && x <= hi) {
        gsum += f_zero ? 1.0 : std::exp(-obs.f(x) * inv_eps);
        break;
      }
    }
  });
  return gsum / static_cast<double>(T_steps);
}

MulticycleBuild build_multicycles(const std::vector<CycleRecord>& cycles, double m, double eps,
                                  std::uint64_t seed, std::optional<double> h1,
                                  std::optional<double> w) {
  if (!(eps > 0)) fail(Err::ConfigInvalid, "grouping needs positive noise");
  if (m < 0) fail(Err::ConfigInvalid, "grouping exponent must be nonnegative");
  MulticycleBuild out;
  if (h1 && w) {
    if (!(m + *h1 > *w))
      fail(Err::RegimeMismatch, "grouping exponent too small: need m + h1 > w");
    if (*h1 > *w) out.regime_mismatch = true;  // single-cycle geometry; harmless
  }
  double p = std::exp(-m / eps);
  Philox rng(seed, 0x6d756c74u);  // dedicated stream for the geometric draws
  std::size_t i = 0;
  while (i < cycles.size()) {
    std::size_t members = 1;
    if (p < 1.0) {
      double u = rng.next_unit();
      double draw = std::ceil(std::log(u) / std::log1p(-p));
      if (draw >= 1) {
        members = draw > static_cast<double>(cycles.size() + 1)
                      ? cycles.size() + 1
                      : static_cast<std::size_t>(draw);
      }
    }
    if (i + members > cycles.size()) break;  // trailing incomplete group dropped
    MulticycleRecord rec;
    rec.member_count = members;
    for (std::size_t j = i; j < i + members; ++j) {
      rec.duration += cycles[j].duration;
      rec.integral_S += cycles[j].integral_S;
    }
    out.groups.push_back(rec);
    i += members;
  }
  out.cycles_used = i;
  return out;
}

ReturnTimeLaw return_time_law(const std::vector<double>& durations) {
  if (durations.size() < 100)
    fail(Err::TooFewCycles, "return-time law needs at least 100 cycles");
  ReturnTimeLaw law;
  law.count = durations.size();
  SampleStats s = sample_stats(durations);
  law.mean = s.mean;
  if (!(law.mean > 0)) fail(Err::ConfigInvalid, "durations must be positive");
  std::vector<double> scaled(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) scaled[i] = durations[i] / law.mean;
  law.ks_d = ks_exponential_distance(scaled);
  law.ks_p = ks_p_value(law.ks_d, scaled.size());
  TailFit fit = exponential_tail_fit(scaled, 5.0, 20);
  law.tail_rate = fit.rate;
  law.tail_grid = fit.grid;
  law.tail_survival = fit.survival;
  law.tail_ok = fit.rate > 0;
  for (int t = 1; t <= 5 && law.tail_ok; ++t) {
    if (empirical_survival(scaled, t) > std::exp(-fit.rate * t) + 1e-12) law.tail_ok = false;
  }
  return law;
}

ReturnTimeLaw return_time_law(const std::vector<CycleRecord>& cycles) {
  std::vector<double> d(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) d[i] = cycles[i].duration;
  return return_time_law(d);
}

ReturnTimeLaw return_time_law(const std::vector<MulticycleRecord>& groups) {
  std::vector<double> d(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) d[i] = groups[i].duration;
  return return_time_law(d);
}

WaldReport wald_checks(const std::vector<CycleRecord>& cycles,
                       const std::vector<HorizonStat>& horizons, double T) {
  if (horizons.size() < 2) fail(Err::TooFewReplicas, "need at least two horizon replicas");
  if (cycles.size() < 2) fail(Err::TooFewReplicas, "need at least two sampled cycles");
  if (!(T > 0)) fail(Err::ConfigInvalid, "horizon length must be positive");

  std::vector<double> S(cycles.size()), tau(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    S[i] = cycles[i].integral_S;
    tau[i] = cycles[i].duration;
  }
  std::vector<double> Ns(horizons.size()), sums(horizons.size()), ints(horizons.size());
  for (std::size_t r = 0; r < horizons.size(); ++r) {
    Ns[r] = static_cast<double>(horizons[r].n_of_T);
    sums[r] = horizons[r].renewal_sum_S / T;
    ints[r] = horizons[r].window_integral;
  }
  SampleStats sS = sample_stats(S), sTau = sample_stats(tau);
  SampleStats sN = sample_stats(Ns), sSum = sample_stats(sums), sI = sample_stats(ints);

  WaldReport rep;
  rep.cycle_count = cycles.size();
  rep.horizon_replicas = horizons.size();

  rep.mean_lhs = sSum.mean;
  rep.mean_rhs = sN.mean * sS.mean / T;
  double rhs_se = std::sqrt(sN.se * sN.se * sS.mean * sS.mean +
                            sN.mean * sN.mean * sS.se * sS.se) /
                  T;
  rep.mean_se = std::sqrt(sSum.se * sSum.se + rhs_se * rhs_se);
  rep.mean_gap_sigmas = rep.mean_se > 0 ? std::abs(rep.mean_lhs - rep.mean_rhs) / rep.mean_se : 0;
  rep.mean_ok = rep.mean_gap_sigmas <= 3.0;

  rep.ratio_lhs = sTau.mean > 0 ? sS.mean / sTau.mean : 0;
  rep.ratio_rhs = sI.mean;
  double lhs_se = ratio_se(S, tau);
  rep.ratio_se_combined = std::sqrt(lhs_se * lhs_se + sI.se * sI.se);
  rep.ratio_gap_sigmas =
      rep.ratio_se_combined > 0 ? std::abs(rep.ratio_lhs - rep.ratio_rhs) / rep.ratio_se_combined
                                : 0;
  rep.ratio_ok = rep.ratio_gap_sigmas <= 3.0;

  rep.split_lhs = T * sSum.var;
  rep.split_rhs = 2.0 * (sN.mean / T) * sS.var + 2.0 * (sN.var / T) * sS.mean * sS.mean;
  rep.split_ok = rep.split_lhs <= rep.split_rhs * 1.05;
  return rep;
}

VarianceRateSummary variance_rate_experiment(const Landscape& L, const EquilibriumSet& eqs,
                                             const std::vector<double>& eps_grid, double c,
                                             const Observable& obs, int replicas,
                                             std::uint64_t seed, double delta,
                                             std::uint64_t max_steps_per_run, int jobs) {
  if (eps_grid.size() < 3) fail(Err::ConfigInvalid, "need at least three noise levels");
  for (std::size_t i = 0; i + 1 < eps_grid.size(); ++i)
    if (!(eps_grid[i] > eps_grid[i + 1]))
      fail(Err::ConfigInvalid, "noise grid must be strictly decreasing");
  if (replicas < 2) fail(Err::TooFewReplicas, "need at least two replicas per noise level");
  validate_observable(L, obs);

  // Formula side, with the deepest stable well rotated to slot 0.
  int ns = static_cast<int>(eqs.stable.size());
  std::vector<int> order;
  order.push_back(eqs.deepest);
  for (int j = 0; j < ns; ++j)
    if (j != eqs.deepest) order.push_back(j);
  RateInputs<double> in;
  in.V.assign(ns, std::vector<double>(ns, 0));
  for (int a = 0; a < ns; ++a)
    for (int b = 0; b < ns; ++b) in.V[a][b] = eqs.V[order[a]][order[b]];
  std::function<double(double)> f = obs.f ? obs.f : [](double) { return 0.0; };
  in.infA_fV.resize(ns);
  in.infA_2fV.resize(ns);
  for (int a = 0; a < ns; ++a) {
    SetInfimum si = quasipotential_to_set(L, eqs, order[a], obs.A, f);
    in.infA_fV[a] = si.inf_fV;
    in.infA_2fV[a] = si.inf_2fV;
  }
  in.c = c;
  RateReport<double> formula = variance_decay_rates(in);  // HorizonTooSmall guards c

  VarianceRateSummary summary;
  summary.formula_rate = formula.variance_rate;
  summary.regime = formula.regime;

  for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
    double eps = eps_grid[ei];
    double T = std::exp(c / eps);
    std::vector<SimResult> results(replicas);
    std::vector<std::string> errors(replicas);
    parallel_replicas(replicas, jobs, [&](int r) {
      SdeRun run = make_run(L, eqs, eps, delta, seed,
                            static_cast<std::uint64_t>(ei) * replicas + r + 1);
      SimOptions opt;
      opt.mode = SimMode::Horizon;
      opt.T = T;
      opt.max_steps = max_steps_per_run;
      opt.close_straddling = false;
      results[r] = detect_cycles(run, obs, opt);
    });

    VarianceRatePoint pt;
    pt.eps = eps;
    pt.T = T;
    pt.replicas = results.size();
    std::vector<double> Is, Ns, S1, tau1;
    for (const SimResult& res : results) {
      if (res.incomplete) pt.incomplete = true;
      Is.push_back(res.window_integral);
      Ns.push_back(static_cast<double>(res.n_of_T));
      for (const CycleRecord& cyc : res.cycles) {
        S1.push_back(cyc.integral_S);
        tau1.push_back(cyc.duration);
      }
    }
    SampleStats sI = sample_stats(Is), sN = sample_stats(Ns);
    SampleStats sS = sample_stats(S1), sTau = sample_stats(tau1);
    pt.mean_integral = sI.mean;
    pt.mean_N = sN.mean;
    pt.mean_S1 = sS.mean;
    pt.var_S1 = sS.var;
    pt.mean_tau1 = sTau.mean;
    pt.t_var = T * sI.var;
    if (pt.t_var > 0)
      pt.rate_point = -eps * std::log(pt.t_var);
    else
      pt.incomplete = true;
    if (pt.incomplete) summary.complete = false;
    summary.points.push_back(pt);
  }

  std::vector<double> xs, ys;
  for (const VarianceRatePoint& pt : summary.points) {
    if (pt.incomplete) continue;
    xs.push_back(pt.eps);
    ys.push_back(pt.rate_point);
  }
  if (xs.size() >= 2) {
    LinearFit fit = linear_fit(xs, ys);
    summary.extrapolated_rate = fit.intercept;
    summary.slope = fit.slope;
    summary.slope_se = fit.slope_se;
    summary.intercept_se = fit.intercept_se;
  }
  return summary;
}

Mat<long long> embedded_chain_counts(const std::vector<CycleRecord>& cycles, int n_points,
                                     int ref) {
  if (n_points < 1 || ref < 0 || ref >= n_points)
    fail(Err::ConfigInvalid, "reference index out of range");
  auto row = [&](int p) { return p == ref ? 0 : (p < ref ? p + 1 : p); };
  Mat<long long> C(n_points, std::vector<long long>(n_points, 0));
  for (const CycleRecord& cyc : cycles) {
    for (std::size_t i = 0; i + 1 < cyc.excursion.size(); ++i) {
      int a = cyc.excursion[i], b = cyc.excursion[i + 1];
      if (a < 0 || a >= n_points || b < 0 || b >= n_points)
        fail(Err::ConfigInvalid, "excursion index out of range");
      ++C[row(a)][row(b)];
    }
  }
  return C;
}

double expected_return_exponent(const Landscape& L, const EquilibriumSet& eqs, int ref,
                                double delta) {
  int n = static_cast<int>(eqs.points.size());
  if (ref < 0 || ref >= n) fail(Err::ConfigInvalid, "reference index out of range");
  double best = 0;
  bool first = true;
  for (int k = 0; k < n; ++k) {
    if (k == ref) continue;
    for (int s : {-1, +1}) {
      double y = L.wrap(eqs.points[k].x + s * delta);
      double v = quasipotential(L, eqs, eqs.points[ref].x, y);
      if (first || v < best) best = v;
      first = false;
    }
  }
  if (first) fail(Err::NoEquilibria, "no other equilibrium to escape to");
  return best;
}

void parallel_replicas(int replicas, int jobs, const std::function<void(int)>& body) {
  if (replicas <= 0) return;
  if (jobs < 1) jobs = 1;
  jobs = std::min(jobs, replicas);
  if (jobs == 1) {
    for (int r = 0; r < replicas; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        int r = next.fetch_add(1);
        if (r >= replicas) return;
        try {
          body(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fwq
