#include "fwq/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "fwq/chain.hpp"
#include "fwq/config.hpp"
#include "fwq/landscape.hpp"
#include "fwq/rates.hpp"
#include "fwq/report.hpp"
#include "fwq/rng.hpp"
#include "fwq/simulate.hpp"
#include "fwq/stats.hpp"
#include "fwq/wgraph.hpp"

namespace fwq {

namespace {

// ---------------------------------------------------------------- helpers

std::string join_rvec(const RVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += rat_to_string(v[i]);
  }
  return s + ")";
}

Rat rat_small(Philox& rng, unsigned num_range, unsigned den_range) {
  return Rat(rng.next_below(num_range), 1 + rng.next_below(den_range));
}

// ------------------------------------------------- 1, 2: golden rate tables

// Reference configs for the two worked tables; the CLI ships the same files
// under configs/. Both use the supplied-values path with exact fractions.
const char* kExample1 = R"json({
  "name": "example1",
  "wvalues": {"W": [5, 9, 7, 11, 8], "W_pair": [5, 3, 5, 2], "h1": 4},
  "observable": {"inf_fV": [8, 4, 4, 0, 0], "inf_2fV": [8, 4, 4, 0, 0], "f_sign": 1},
  "horizon": {"c": 6}
})json";

const char* kExample2 = R"json({
  "name": "example2",
  "wvalues": {"W": [7, 11, 9, 13, 8], "W_pair": [7, 5, 7, 2], "h1": 4},
  "observable": {"inf_fV": [4, 0, 0, 0, 5], "inf_2fV": [4, 0, 0, 0, 5], "f_sign": 1},
  "horizon": {"c": 7}
})json";

struct GoldenTable {
  Rat h1, w;
  Regime reg;
  RVec R1, R2, R3;  // R3 checked only in the multicycle regime
  Rat variance_rate;
  int argmin_j, argmin_k;
  Rat bias;
};

bool check_example(const char* text, const GoldenTable& g, std::string& detail) {
  ExperimentConfig cfg = parse_config(nlohmann::json::parse(text));
  RateInputs<Rat> in = exact_rate_inputs(cfg);
  RateReport<Rat> rep = variance_decay_rates(in);
  bool ok = rep.h1 == g.h1 && rep.w == g.w && rep.regime == g.reg && rep.R1 == g.R1 &&
            rep.R2 == g.R2 && rep.variance_rate == g.variance_rate && rep.argmin_j == g.argmin_j &&
            rep.argmin_superscript == g.argmin_k && rep.bias_rate == g.bias &&
            rep.source_W == RateSource::Supplied && rep.source_h1 == RateSource::Supplied;
  if (g.reg == Regime::Multicycle) ok = ok && rep.R3 == g.R3;
  detail = std::string(regime_name(rep.regime)) + " h1=" + rat_to_string(rep.h1) +
           " w=" + rat_to_string(rep.w) + " R1=" + join_rvec(rep.R1) + " R2=" + join_rvec(rep.R2) +
           (g.reg == Regime::Multicycle ? " R3=" + join_rvec(rep.R3) : std::string()) +
           " min=" + rat_to_string(rep.variance_rate) + " at state " +
           std::to_string(rep.argmin_j) + " family R" + std::to_string(rep.argmin_superscript) +
           " bias=" + rat_to_string(rep.bias_rate);
  return ok;
}

bool crit_example1(const VerifyOptions&, std::string& detail) {
  GoldenTable g;
  g.h1 = 4;
  g.w = 3;
  g.reg = Regime::SingleCycle;
  g.R1 = {8, 8, 6, 6, 3};
  g.R2 = {12, 12, 8, 6, 0};
  g.variance_rate = 0;
  g.argmin_j = 4;
  g.argmin_k = 2;
  g.bias = 5;
  return check_example(kExample1, g, detail);
}

bool crit_example2(const VerifyOptions&, std::string& detail) {
  GoldenTable g;
  g.h1 = 4;
  g.w = 5;
  g.reg = Regime::Multicycle;
  g.R1 = {4, 4, 2, 6, 6};
  g.R2 = {4, 4, 0, 6, 6};
  g.R3 = {3, 3, -1, 7, 7};
  g.variance_rate = -1;
  g.argmin_j = 2;
  g.argmin_k = 3;
  g.bias = 4;
  return check_example(kExample2, g, detail);
}

// ------------------------------------------------ 3: embedded chain identities

RMat random_chain(Philox& rng, int l) {
  while (true) {
    RMat P(l, RVec(l));
    bool sparse = rng.next_below(3) == 0;
    for (int i = 0; i < l; ++i) {
      std::vector<unsigned> num(l);
      unsigned sum = 0;
      for (int j = 0; j < l; ++j) {
        unsigned n = 1 + rng.next_below(8);
        // Sparse rows keep the cyclic arrow i -> i+1 so the chain stays
        // irreducible by construction.
        if (sparse && j != (i + 1) % l && rng.next_below(2) == 0) n = 0;
        num[j] = n;
        sum += n;
      }
      for (int j = 0; j < l; ++j) P[i][j] = Rat(num[j], sum);
    }
    if (chain_irreducible(P)) return P;
  }
}

bool crit_chain_identities(const VerifyOptions&, std::string& detail) {
  Philox rng(0xC3, 1);
  long long identities = 0;
  for (int t = 0; t < 200; ++t) {
    int l = 2 + static_cast<int>(rng.next_below(4));
    RMat P = random_chain(rng, l);
    RVec pi = stationary_distribution(P);  // two routes, exact agreement inside
    Rat S0 = tree_sum(P, {0});
    Rat leave0 = 1 - P[0][0];

    VisitPair v0 = expected_visits(P, 0);
    if (v0.E0Nj * leave0 != 1) {
      detail = "opening-run length identity failed at instance " + std::to_string(t);
      return false;
    }
    ++identities;

    for (int j = 1; j < l; ++j) {
      VisitPair v = expected_visits(P, j);
      if (v.E0Nj * leave0 * S0 != tree_sum(P, {j})) {
        detail = "per-cycle visit ratio failed at instance " + std::to_string(t);
        return false;
      }
      if (v.EjNj * S0 != tree_sum(P, {0, j})) {
        detail = "pair-rooted visit ratio failed at instance " + std::to_string(t);
        return false;
      }
      Rat commute = mean_hitting(P, j, 0) + mean_hitting(P, 0, j);
      if (v.EjNj != pi[j] * commute) {
        detail = "commute-time visit identity failed at instance " + std::to_string(t);
        return false;
      }
      identities += 3;
    }

    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j) {
        if (i == j) continue;
        Rat tb = taboo_probability(P, i, j);  // two routes, exact agreement inside
        Rat commute = mean_hitting(P, i, j) + mean_hitting(P, j, i);
        if (tb * pi[i] * commute != 1) {
          detail = "taboo commute identity failed at instance " + std::to_string(t);
          return false;
        }
        ++identities;
      }
  }
  detail = "200 random chains, " + std::to_string(identities) + " exact identities";
  return true;
}

// ------------------------------------- 4: enumeration vs contraction minimum

bool crit_graph_cross_check(const VerifyOptions&, std::string& detail) {
  Philox rng(0xC4, 1);
  std::size_t graphs_seen = 0;
  for (int t = 0; t < 200; ++t) {
    int l = 2 + static_cast<int>(rng.next_below(6));
    RMat V(l, RVec(l));
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j) V[i][j] = rat_small(rng, 12, 3);  // small range forces ties

    std::vector<int> perm(l);
    for (int i = 0; i < l; ++i) perm[i] = i;
    for (int i = l - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.next_below(static_cast<unsigned>(i + 1))]);
    int k = 1 + static_cast<int>(rng.next_below(static_cast<unsigned>(l)));
    std::vector<int> roots(perm.begin(), perm.begin() + k);
    std::sort(roots.begin(), roots.end());

    GraphMin<Rat> gm = min_wgraph_weight<Rat>(V, roots);  // throws on route disagreement
    graphs_seen += gm.count_enumerated;
    if (gm.argmins.empty()) {
      detail = "no argmin returned at instance " + std::to_string(t);
      return false;
    }
    for (const ArrowMap& g : gm.argmins) {
      if (!valid_wgraph(l, roots, g)) {
        detail = "invalid argmin at instance " + std::to_string(t);
        return false;
      }
      Rat w = 0;
      for (int i = 0; i < l; ++i)
        if (g[i] >= 0) w += V[i][g[i]];
      if (w != gm.weight) {
        detail = "argmin weight mismatch at instance " + std::to_string(t);
        return false;
      }
    }
  }
  detail = "200 instances, " + std::to_string(graphs_seen) + " graphs enumerated, minima agree";
  return true;
}

// ----------------------------------------------------- 5: census vs formula

bool crit_graph_counts(const VerifyOptions&, std::string& detail) {
  unsigned long long total = 0;
  for (int l = 3; l <= 6; ++l) {
    for (unsigned mask = 1; mask < (1u << l); ++mask) {
      std::vector<int> roots;
      for (int i = 0; i < l; ++i)
        if (mask & (1u << i)) roots.push_back(i);
      unsigned long long count = 0;
      for_each_wgraph(l, roots, [&](const ArrowMap&) { ++count; });
      unsigned long long expect = wgraph_count_formula(l, static_cast<int>(roots.size()));
      if (count != expect) {
        detail = "count mismatch at l=" + std::to_string(l) + " k=" +
                 std::to_string(roots.size()) + ": enumerated " + std::to_string(count) +
                 ", formula " + std::to_string(expect);
        return false;
      }
      total += count;
    }
  }
  detail = "all root sets for l=3..6 agree with k*l^(l-k-1); " + std::to_string(total) +
           " graphs enumerated";
  return true;
}

// -------------------------------------------- 6: refinement visit bounds

bool crit_refinement_bounds(const VerifyOptions&, std::string& detail) {
  Philox rng(0xC6, 1);
  const Rat bands[3] = {Rat(2), Rat(3, 2), Rat(4, 3)};
  Rat worst_visits, worst_tail;
  bool first = true;
  for (int t = 0; t < 100; ++t) {
    int l = 3 + static_cast<int>(rng.next_below(2));
    Rat a = bands[rng.next_below(3)];

    // Base chain: diagonal in [3/5, 4/5] keeps every refined row inside the
    // band for all three ratios; off-diagonal entries strictly positive.
    RMat P(l, RVec(l));
    for (int b = 0; b < l; ++b) {
      Rat diag(60 + rng.next_below(21), 100);
      std::vector<unsigned> wgt(l, 0);
      unsigned ws = 0;
      for (int j = 0; j < l; ++j) {
        if (j == b) continue;
        wgt[j] = 1 + rng.next_below(8);
        ws += wgt[j];
      }
      for (int j = 0; j < l; ++j)
        if (j != b) P[b][j] = (1 - diag) * Rat(wgt[j], ws);
      P[b][b] = diag;
    }

    std::vector<int> block;
    std::vector<std::vector<int>> members(l);
    for (int b = 0; b < l; ++b) {
      int s = 1 + static_cast<int>(rng.next_below(3));
      for (int c = 0; c < s; ++c) {
        members[b].push_back(static_cast<int>(block.size()));
        block.push_back(b);
      }
    }
    int n = static_cast<int>(block.size());

    RMat Pt(n, RVec(n, 0));
    auto split = [&](const Rat& mass, const std::vector<int>& into, RVec& row) {
      std::vector<unsigned> wgt(into.size());
      unsigned ws = 0;
      for (std::size_t i = 0; i < into.size(); ++i) {
        wgt[i] = 1 + rng.next_below(5);
        ws += wgt[i];
      }
      for (std::size_t i = 0; i < into.size(); ++i) row[into[i]] += mass * Rat(wgt[i], ws);
    };
    for (int x = 0; x < n; ++x) {
      int b = block[x];
      Rat rest = 1;
      for (int j = 0; j < l; ++j) {
        if (j == b) continue;
        Rat u(36 + rng.next_below(29), 48);  // [3/4, 4/3], inside every band
        Rat mass = u * P[b][j];
        rest -= mass;
        split(mass, members[j], Pt[x]);
      }
      split(rest, members[b], Pt[x]);
    }

    VisitBoundReport rep = visit_bound_check(P, Refinement{Pt, block}, a);
    if (!rep.ok) {
      detail = "bound violated at instance " + std::to_string(t) + ": visit margin " +
               rat_to_string(rep.min_margin_visits) + ", tail margin " +
               rat_to_string(rep.min_margin_tail);
      return false;
    }
    if (first || rep.min_margin_visits < worst_visits) worst_visits = rep.min_margin_visits;
    if (first || rep.min_margin_tail < worst_tail) worst_tail = rep.min_margin_tail;
    first = false;
  }
  std::ostringstream os;
  os << "100 refinements, zero violations; worst visit margin " << to_double(worst_visits)
     << ", worst tail margin " << to_double(worst_tail);
  detail = os.str();
  return true;
}

// -------------------------------------- 7: transition cost vs grid oracle

bool crit_grid_oracle(const VerifyOptions&, std::string& detail) {
  Philox rng(0xC7, 1);
  const int N = 4096;
  int done = 0;
  double worst_ratio = 0;  // |engine - oracle| / tol, want <= 1
  int attempts = 0;
  while (done < 50) {
    if (++attempts > 500) {
      detail = "could not draw 50 usable spline landscapes";
      return false;
    }
    int nk = 6 + static_cast<int>(rng.next_below(5));
    std::vector<double> xs(nk), ys(nk);
    for (int i = 0; i < nk; ++i) xs[i] = rng.next_below(1000) / 1000.0;
    std::sort(xs.begin(), xs.end());
    bool gaps_ok = (1.0 - xs.back() + xs.front()) >= 0.03;
    for (int i = 0; i + 1 < nk && gaps_ok; ++i) gaps_ok = (xs[i + 1] - xs[i]) >= 0.03;
    if (!gaps_ok) continue;
    for (int i = 0; i < nk; ++i) ys[i] = rng.next_below(1001) * 0.002;

    Landscape L;
    EquilibriumSet eqs;
    try {
      L = make_spline_landscape(xs, ys, 0.0, 1.0);
      eqs = find_equilibria(L);
    } catch (const Error&) {
      continue;  // degenerate draw; take a fresh one
    }

    std::vector<double> u(N);
    for (int i = 0; i < N; ++i) u[i] = L.U(i / static_cast<double>(N));
    double maxstep = 0;
    for (int i = 0; i < N; ++i) maxstep = std::max(maxstep, std::abs(u[(i + 1) % N] - u[i]));
    double tol = 2.0 * maxstep * (2.0 / L.a);

    for (int p = 0; p < 10; ++p) {
      int i = static_cast<int>(rng.next_below(N));
      int j = static_cast<int>(rng.next_below(N));
      if (i == j) j = (i + 1) % N;
      double cw = 0, ccw = 0;
      for (int k = i; k != j; k = (k + 1) % N) cw += std::max(0.0, u[(k + 1) % N] - u[k]);
      for (int k = i; k != j; k = (k - 1 + N) % N) ccw += std::max(0.0, u[(k - 1 + N) % N] - u[k]);
      double oracle = (2.0 / L.a) * std::min(cw, ccw);
      double engine = quasipotential(L, eqs, i / static_cast<double>(N), j / static_cast<double>(N));
      double ratio = std::abs(engine - oracle) / tol;
      worst_ratio = std::max(worst_ratio, ratio);
      if (ratio > 1.0) {
        std::ostringstream os;
        os << "landscape " << done << ": engine " << engine << " vs oracle " << oracle
           << " differs by more than two grid cells of variation (" << tol << ")";
        detail = os.str();
        return false;
      }
    }
    ++done;
  }
  std::ostringstream os;
  os << "50 spline landscapes, 500 pairs within tolerance; worst fill " << worst_ratio
     << " of the two-cell budget";
  detail = os.str();
  return true;
}

// ------------------------------------------------- 8: stable-node reduction

bool crit_stable_reduction(const VerifyOptions&, std::string& detail) {
  Philox rng(0xC8, 1);
  for (int t = 0; t < 100; ++t) {
    int wells = t < 90 ? 2 + (t & 1) : 4;
    Profile prof = random_profile(wells, 0x88000u + static_cast<unsigned>(t));
    RMat Vall = profile_V_all(prof);
    int n = 2 * wells;
    std::vector<int> stable;
    for (int k = 0; k < wells; ++k) stable.push_back(2 * k + 1);  // minima sit at odd slots

    std::vector<int> A;
    for (int q = 0; q < n; ++q)
      if (rng.next_below(2)) A.push_back(q);
    if (A.empty()) A.push_back(static_cast<int>(rng.next_below(static_cast<unsigned>(n))));
    RVec f(n);
    for (int q = 0; q < n; ++q) f[q] = rat_small(rng, 7, 3);

    RVec infA(n);
    for (int p = 0; p < n; ++p) {
      bool first = true;
      for (int q : A) {
        Rat v = f[q] + Vall[p][q];
        if (first || v < infA[p]) infA[p] = v;
        first = false;
      }
    }

    StableReductionReport rep = stable_reduction_check(Vall, stable, infA);
    if (!rep.ok()) {
      detail = "instance " + std::to_string(t) + " (wells " + std::to_string(wells) +
               "): parts " + std::to_string(rep.part1) + std::to_string(rep.part2) +
               std::to_string(rep.part3) + std::to_string(rep.part4);
      return false;
    }
  }
  detail = "100 alternating profiles, all four reduction identities exact";
  return true;
}

// ------------------------------------------------------ 9: return-time law

bool crit_return_time(const VerifyOptions&, std::string& detail) {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  double delta = 0.05;
  const std::vector<double> epss = {0.25, 0.18, 0.13};
  const std::vector<std::size_t> ncyc = {1000, 800, 600};

  std::vector<double> inv_eps, log_mean;
  ReturnTimeLaw law;
  Observable obs;  // no target set; only durations matter here
  for (std::size_t e = 0; e < epss.size(); ++e) {
    SdeRun run = make_run(L, eqs, epss[e], delta, 0x99, e + 1);
    SimOptions so;
    so.mode = SimMode::FixedCycles;
    so.cycles = ncyc[e];
    so.max_steps = 3'800'000'000ULL;
    SimResult res = detect_cycles(run, obs, so);
    std::vector<double> durs;
    durs.reserve(res.cycles.size());
    for (const CycleRecord& c : res.cycles) durs.push_back(c.duration);
    SampleStats st = sample_stats(durs);
    inv_eps.push_back(1.0 / epss[e]);
    log_mean.push_back(std::log(st.mean));
    if (e + 1 == epss.size()) law = return_time_law(durs);
  }

  LinearFit fit = linear_fit(inv_eps, log_mean);
  double kappa = expected_return_exponent(L, eqs, eqs.stable[eqs.deepest], delta);
  bool slope_ok = std::abs(fit.slope - kappa) <= 0.25 * kappa;
  bool ks_ok = law.count >= 500 && law.ks_p > 0.01;
  bool tail_fit_ok = law.tail_ok && law.tail_rate > 0;

  std::ostringstream os;
  os << "slope " << fit.slope << " vs predicted " << kappa << " (25% band), KS p " << law.ks_p
     << " over " << law.count << " cycles, tail rate " << law.tail_rate
     << (law.tail_ok ? " with envelope held" : " envelope broken");
  detail = os.str();
  return slope_ok && ks_ok && tail_fit_ok;
}

// -------------------------------------------------- 10: renewal identities

bool crit_renewal_identities(const VerifyOptions& opt, std::string& detail) {
  Landscape L = make_double_well(1.0, 0.5);
  EquilibriumSet eqs = find_equilibria(L);
  double delta = 0.05, eps = 0.25, T = 4000;
  int shallow = eqs.deepest == 0 ? 1 : 0;
  double xr = eqs.points[eqs.stable[shallow]].x;
  Observable obs;
  obs.A = {{xr - 0.15, xr + 0.15}};

  const int R = 200;
  std::vector<std::vector<CycleRecord>> cyc_groups(R);
  parallel_replicas(R, opt.jobs, [&](int r) {
    SdeRun run = make_run(L, eqs, eps, delta, 0xA10, 1 + r);
    SimOptions so;
    so.mode = SimMode::FixedCycles;
    so.cycles = 25;
    so.max_steps = 80'000'000ULL;
    cyc_groups[r] = detect_cycles(run, obs, so).cycles;
  });
  std::vector<CycleRecord> cycles;
  for (auto& g : cyc_groups) cycles.insert(cycles.end(), g.begin(), g.end());

  std::vector<HorizonStat> horizons(R);
  parallel_replicas(R, opt.jobs, [&](int r) {
    SdeRun run = make_run(L, eqs, eps, delta, 0xA20, 10001 + r);
    SimOptions so;
    so.mode = SimMode::Horizon;
    so.T = T;
    so.max_steps = 80'000'000ULL;
    SimResult res = detect_cycles(run, obs, so);
    double sum = res.straddle_S_inside + res.straddle_S_after;
    for (const CycleRecord& c : res.cycles) sum += c.integral_S;
    horizons[r] = HorizonStat{res.n_of_T, sum, res.window_integral};
  });

  WaldReport rep = wald_checks(cycles, horizons, T);
  std::ostringstream os;
  os << "mean identity gap " << rep.mean_gap_sigmas << " sigma, ratio gap " << rep.ratio_gap_sigmas
     << " sigma, variance split " << rep.split_lhs << " <= " << rep.split_rhs << " ("
     << rep.cycle_count << " cycles, " << rep.horizon_replicas << " windows)";
  detail = os.str();
  return rep.mean_ok && rep.ratio_ok && rep.split_ok;
}

// ----------------------------------------------- 11: variance decay trend

bool crit_variance_trend(const VerifyOptions& opt, std::string& detail) {
  struct Setup {
    double h_left, h_right, target;
    std::uint64_t seed;
  };
  const Setup setups[2] = {{1.0, 0.3, 0.4, 0xB1}, {1.0, 0.7, -0.4, 0xB2}};
  std::ostringstream os;
  bool all_ok = true;
  for (const Setup& s : setups) {
    Landscape L = make_double_well(s.h_left, s.h_right);
    EquilibriumSet eqs = find_equilibria(L);
    int shallow = eqs.deepest == 0 ? 1 : 0;
    double xr = eqs.points[eqs.stable[shallow]].x;
    Observable obs;
    obs.A = {{xr - 0.1, xr + 0.1}};
    VarianceRateSummary sum = variance_rate_experiment(L, eqs, {0.20, 0.16, 0.13}, 1.15, obs, 120,
                                                       s.seed, 0.05, 60'000'000ULL, opt.jobs);
    bool formula_ok = std::abs(sum.formula_rate - s.target) <= 1e-9;
    bool sign_ok = (sum.extrapolated_rate > 0) == (s.target > 0);
    bool mono_ok = sum.points.size() == 3;
    if (mono_ok) {
      double d1 = sum.points[1].rate_point - sum.points[0].rate_point;
      double d2 = sum.points[2].rate_point - sum.points[1].rate_point;
      mono_ok = (d1 > 0 && d2 > 0) || (d1 < 0 && d2 < 0);
    }
    bool extr_ok = std::abs(sum.extrapolated_rate - s.target) <= 0.3;
    bool ok = sum.complete && formula_ok && sign_ok && mono_ok && extr_ok;
    all_ok = all_ok && ok;
    os << "[depths " << s.h_left << "/" << s.h_right << ": formula " << sum.formula_rate
       << ", points";
    for (const VarianceRatePoint& p : sum.points) os << " " << p.rate_point;
    os << ", extrapolated " << sum.extrapolated_rate << (ok ? " ok" : " FAIL") << "] ";
  }
  detail = os.str();
  return all_ok;
}

// -------------------------------------------------- 12: rerun determinism

std::map<std::string, std::string> read_tree(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[std::filesystem::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

bool crit_rerun_determinism(const VerifyOptions& opt, std::string& detail) {
  if (opt.fwq_binary.empty()) {
    detail = "no CLI path provided; pass --fwq";
    return false;
  }
  namespace fs = std::filesystem;
  fs::path base = fs::temp_directory_path() / "fwq-rerun-check";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base);

  nlohmann::json cfg;
  cfg["name"] = "rerun-check";
  cfg["landscape"] = {{"family", "double_well"}, {"h_left", 1.0}, {"h_right", 0.5}};
  cfg["observable"]["A"] = nlohmann::json::array({nlohmann::json::array({0.2, 0.45})});
  cfg["noise"] = {{"epsilon", nlohmann::json::array({0.3})}, {"delta", 0.05}};
  cfg["simulate"] = {{"mode", "cycles"}, {"cycles", 30}, {"replicas", 2}};
  cfg["seed"] = 7;
  fs::path cfg_path = base / "config.json";
  write_file(cfg_path.string(), cfg.dump(2) + "\n");

  auto run_once = [&](const std::string& out_dir, const std::string& log) {
    std::string cmd = "'" + opt.fwq_binary + "' simulate --config '" + cfg_path.string() +
                      "' --out '" + out_dir + "' > '" + log + "' 2>&1";
    return std::system(cmd.c_str());
  };
  int rc1 = run_once((base / "run1").string(), (base / "log1.txt").string());
  int rc2 = run_once((base / "run2").string(), (base / "log2.txt").string());
  if (rc1 != 0 || rc2 != 0) {
    detail = "CLI exited nonzero (" + std::to_string(rc1) + ", " + std::to_string(rc2) + ")";
    return false;
  }

  auto t1 = read_tree(base / "run1");
  auto t2 = read_tree(base / "run2");
  bool same = !t1.empty() && t1.size() == t2.size();
  if (same) {
    for (const auto& [name, content] : t1) {
      auto it = t2.find(name);
      if (it == t2.end() || it->second != content) {
        same = false;
        detail = "file " + name + " differs between reruns";
        break;
      }
    }
  } else {
    detail = "output file sets differ (" + std::to_string(t1.size()) + " vs " +
             std::to_string(t2.size()) + ")";
  }
  if (same) {
    std::size_t bytes = 0;
    for (const auto& [name, content] : t1) bytes += content.size();
    detail = std::to_string(t1.size()) + " files, " + std::to_string(bytes) +
             " bytes, byte-identical across reruns";
  }
  fs::remove_all(base, ec);
  return same;
}

using CritFn = bool (*)(const VerifyOptions&, std::string&);

struct CritEntry {
  int id;
  const char* name;
  CritFn fn;
};

const CritEntry kCriteria[] = {
    {1, "example1-golden-table", crit_example1},
    {2, "example2-golden-table", crit_example2},
    {3, "chain-visit-identities", crit_chain_identities},
    {4, "graph-minimum-cross-check", crit_graph_cross_check},
    {5, "graph-count-formula", crit_graph_counts},
    {6, "refinement-visit-bounds", crit_refinement_bounds},
    {7, "quasipotential-grid-oracle", crit_grid_oracle},
    {8, "stable-reduction", crit_stable_reduction},
    {9, "return-time-law", crit_return_time},
    {10, "renewal-identities", crit_renewal_identities},
    {11, "variance-rate-trend", crit_variance_trend},
    {12, "rerun-determinism", crit_rerun_determinism},
};

}  // namespace

std::vector<int> all_criteria() {
  std::vector<int> ids;
  for (const CritEntry& e : kCriteria) ids.push_back(e.id);
  return ids;
}

std::string criterion_name(int id) {
  for (const CritEntry& e : kCriteria)
    if (e.id == id) return e.name;
  fail(Err::ConfigInvalid, "unknown criterion id " + std::to_string(id));
}

CriterionResult run_criterion(int id, const VerifyOptions& opt) {
  CriterionResult r;
  r.id = id;
  r.name = criterion_name(id);
  const CritEntry* entry = nullptr;
  for (const CritEntry& e : kCriteria)
    if (e.id == id) entry = &e;
  auto t0 = std::chrono::steady_clock::now();
  try {
    r.pass = entry->fn(opt, r.detail);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_criteria(const std::vector<int>& ids, const VerifyOptions& opt) {
  std::vector<CriterionResult> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(run_criterion(id, opt));
  return out;
}

}  // namespace fwq
