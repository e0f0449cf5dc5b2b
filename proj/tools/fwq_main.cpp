#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fwq/chain.hpp"
#include "fwq/config.hpp"
#include "fwq/landscape.hpp"
#include "fwq/rates.hpp"
#include "fwq/report.hpp"
#include "fwq/simulate.hpp"
#include "fwq/stats.hpp"
#include "fwq/verify.hpp"
#include "fwq/wgraph.hpp"

namespace {

using fwq::fmt_double;

std::string self_path(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::canonical("/proc/self/exe", ec);
  if (!ec) return p.string();
  return argv0;
}

std::string join_ints(const std::vector<int>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

// ------------------------------------------------------------------ rates

int cmd_rates(const std::string& cfg_path, const std::string& out_dir) {
  fwq::ExperimentConfig cfg = fwq::load_config(cfg_path);
  std::string header = fwq::config_header(cfg.resolved);
  std::ostringstream table;
  nlohmann::json jrep;

  if (cfg.kind == fwq::InputKind::LandscapeBlock) {
    fwq::EquilibriumSet eqs = fwq::find_equilibria(cfg.landscape);
    std::vector<int> order;
    fwq::RateInputs<double> in = fwq::landscape_rate_inputs(cfg, eqs, &order);
    fwq::RateReport<double> rep = fwq::variance_decay_rates(in);
    for (std::size_t s = 0; s < order.size(); ++s)
      table << "# state " << s << " is the well at x = "
            << fmt_double(eqs.points[eqs.stable[order[s]]].x) << "\n";
    table << fwq::rate_report_table(rep);
    jrep = fwq::rate_report_json(rep);
    nlohmann::json wells = nlohmann::json::array();
    for (int o : order) wells.push_back(fmt_double(eqs.points[eqs.stable[o]].x));
    jrep["state_positions"] = wells;
  } else {
    fwq::RateInputs<fwq::Rat> in = fwq::exact_rate_inputs(cfg);
    fwq::RateReport<fwq::Rat> rep = fwq::variance_decay_rates(in);
    table << fwq::rate_report_table(rep);
    jrep = fwq::rate_report_json(rep);
  }

  std::string text = header + table.str();
  std::cout << text;
  if (!out_dir.empty()) {
    fwq::write_file(out_dir + "/rates.txt", text);
    fwq::write_file(out_dir + "/rates.json", jrep.dump(2) + "\n");
  }
  return 0;
}

// ------------------------------------------------------------------ graphs

template <class T, class Fmt>
void graphs_tables(const fwq::Mat<T>& V, const nlohmann::json& roots_req, Fmt fmt,
                   std::ostringstream& table, nlohmann::json& jrep) {
  int l = static_cast<int>(V.size());
  std::vector<T> h = fwq::compute_h(V);
  std::vector<T> W(l), W_pair(l);
  std::vector<std::size_t> n_argmin(l), n_pair_argmin(l), counts(l);
  for (int j = 0; j < l; ++j) {
    auto gm = fwq::min_wgraph_weight<T>(V, {j});
    W[j] = gm.weight;
    n_argmin[j] = gm.argmins.size();
    counts[j] = gm.count_enumerated;
    if (j > 0) {
      auto gp = fwq::min_wgraph_weight<T>(V, {0, j});
      W_pair[j] = gp.weight;
      n_pair_argmin[j] = gp.argmins.size();
    }
  }
  W_pair[0] = W[0];
  T w = fwq::compute_w(V);

  table << "states\t" << l << "\n";
  table << "state\th\tW\tmin_graphs\tenumerated\tW_pair0j\n";
  for (int j = 0; j < l; ++j) {
    table << j << "\t" << fmt(h[j]) << "\t" << fmt(W[j]) << "\t" << n_argmin[j] << "\t"
          << counts[j] << "\t" << (j > 0 ? fmt(W_pair[j]) : std::string("-")) << "\n";
  }
  table << "w\t" << fmt(w) << "\n";
  jrep["states"] = l;
  jrep["w"] = fmt(w);
  for (int j = 0; j < l; ++j) {
    nlohmann::json row;
    row["state"] = j;
    row["h"] = fmt(h[j]);
    row["W"] = fmt(W[j]);
    row["min_graphs"] = n_argmin[j];
    row["enumerated"] = counts[j];
    if (j > 0) row["W_pair"] = fmt(W_pair[j]);
    jrep["per_state"].push_back(row);
  }

  if (roots_req.is_array()) {
    for (const auto& rr : roots_req) {
      std::vector<int> roots;
      for (const auto& e : rr) roots.push_back(e.get<int>());
      auto gm = fwq::min_wgraph_weight<T>(V, roots);
      std::string arrows;
      const fwq::ArrowMap& g = gm.argmins.front();
      for (int i = 0; i < l; ++i) {
        if (!arrows.empty()) arrows += " ";
        arrows += std::to_string(i) + (g[i] < 0 ? std::string(":root")
                                                : "->" + std::to_string(g[i]));
      }
      table << "roots {" << join_ints(roots, ',') << "}\tweight " << fmt(gm.weight)
            << "\tminimizers " << gm.argmins.size() << "\t" << arrows << "\n";
      nlohmann::json row;
      row["roots"] = roots;
      row["weight"] = fmt(gm.weight);
      row["minimizers"] = gm.argmins.size();
      row["argmin"] = arrows;
      jrep["root_sets"].push_back(row);
    }
  }
}

int cmd_graphs(const std::string& cfg_path, const std::string& out_dir) {
  fwq::ExperimentConfig cfg = fwq::load_config(cfg_path);
  std::string header = fwq::config_header(cfg.resolved);
  std::ostringstream table;
  nlohmann::json jrep;
  nlohmann::json roots_req;
  if (cfg.resolved.contains("roots")) roots_req = cfg.resolved.at("roots");

  if (cfg.kind == fwq::InputKind::CostsBlock) {
    graphs_tables<fwq::Rat>(cfg.V, roots_req,
                            [](const fwq::Rat& r) { return fwq::rat_to_string(r); }, table, jrep);
  } else if (cfg.kind == fwq::InputKind::LandscapeBlock) {
    fwq::EquilibriumSet eqs = fwq::find_equilibria(cfg.landscape);
    for (std::size_t s = 0; s < eqs.stable.size(); ++s)
      table << "# state " << s << " is the well at x = "
            << fmt_double(eqs.points[eqs.stable[s]].x) << "\n";
    graphs_tables<double>(eqs.V, roots_req, [](double v) { return fmt_double(v); }, table, jrep);
  } else {
    fwq::fail(fwq::Err::ConfigInvalid, "graph listing needs transition costs, not W values");
  }

  std::string text = header + table.str();
  std::cout << text;
  if (!out_dir.empty()) {
    fwq::write_file(out_dir + "/graphs.txt", text);
    fwq::write_file(out_dir + "/graphs.json", jrep.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& cfg_path, const std::string& out_dir, bool seed_set,
                 std::uint64_t seed, std::uint64_t max_steps, int jobs) {
  fwq::ExperimentConfig cfg = fwq::load_config(cfg_path);
  if (cfg.kind != fwq::InputKind::LandscapeBlock)
    fwq::fail(fwq::Err::ConfigInvalid, "simulate needs a landscape block");
  if (cfg.eps_grid.empty()) fwq::fail(fwq::Err::ConfigInvalid, "simulate needs noise.epsilon");
  if (!(cfg.delta > 0)) fwq::fail(fwq::Err::ConfigInvalid, "simulate needs noise.delta");
  if (seed_set) {
    cfg.seed = seed;
    cfg.resolved["seed"] = seed;
  }
  if (max_steps) {
    cfg.max_steps = max_steps;
    if (cfg.resolved.contains("simulate")) cfg.resolved["simulate"]["max_steps"] = max_steps;
  }

  fwq::Landscape L = cfg.landscape;
  fwq::EquilibriumSet eqs = fwq::find_equilibria(L);
  fwq::Observable obs{cfg.obs.intervals, fwq::observable_function(cfg.obs)};

  std::string header = fwq::config_header(cfg.resolved);
  std::ostringstream tsv, txt;
  nlohmann::json jsum;
  tsv << header << "epsilon\treplica\tcycle\tduration\tintegral_S\tvisits\n";
  txt << header;

  for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
    double eps = cfg.eps_grid[ei];
    double T = 0;
    if (cfg.mode == fwq::SimMode::Horizon)
      T = cfg.T ? *cfg.T : std::exp(fwq::to_double(*cfg.c) / eps);

    std::vector<fwq::SimResult> results(cfg.replicas);
    fwq::parallel_replicas(cfg.replicas, jobs, [&](int r) {
      fwq::SdeRun run = fwq::make_run(L, eqs, eps, cfg.delta, cfg.seed,
                                      ei * static_cast<std::size_t>(cfg.replicas) + r + 1);
      fwq::SimOptions so;
      so.mode = cfg.mode;
      so.cycles = cfg.cycles;
      so.T = T;
      so.max_steps = cfg.max_steps;
      results[r] = fwq::detect_cycles(run, obs, so);
    });

    nlohmann::json jeps;
    jeps["epsilon"] = fmt_double(eps);
    txt << "epsilon " << fmt_double(eps);
    if (cfg.mode == fwq::SimMode::Horizon) {
      txt << " horizon " << fmt_double(T);
      jeps["T"] = fmt_double(T);
    }
    txt << " dt " << fmt_double(results.empty() ? 0 : fwq::choose_dt(L, eps, cfg.delta)) << "\n";
    jeps["dt"] = fmt_double(fwq::choose_dt(L, eps, cfg.delta));

    std::vector<double> pooled_dur, pooled_S;
    for (int r = 0; r < cfg.replicas; ++r) {
      const fwq::SimResult& res = results[r];
      for (std::size_t c = 0; c < res.cycles.size(); ++c) {
        const fwq::CycleRecord& cy = res.cycles[c];
        tsv << fmt_double(eps) << "\t" << r << "\t" << c << "\t" << fmt_double(cy.duration) << "\t"
            << fmt_double(cy.integral_S) << "\t" << join_ints(cy.visits, ',') << "\n";
        pooled_dur.push_back(cy.duration);
        pooled_S.push_back(cy.integral_S);
      }
      txt << "replica " << r << ": cycles " << res.cycles.size() << " steps " << res.steps_used;
      nlohmann::json jr;
      jr["replica"] = r;
      jr["cycles"] = res.cycles.size();
      jr["steps"] = res.steps_used;
      if (cfg.mode == fwq::SimMode::Horizon) {
        txt << " n_of_T " << res.n_of_T << " window_integral " << fmt_double(res.window_integral);
        jr["n_of_T"] = res.n_of_T;
        jr["window_integral"] = fmt_double(res.window_integral);
      }
      if (res.incomplete) {
        txt << " incomplete";
        jr["incomplete"] = true;
      }
      txt << "\n";
      jeps["replicas"].push_back(jr);
    }

    fwq::SampleStats dstat = fwq::sample_stats(pooled_dur);
    fwq::SampleStats sstat = fwq::sample_stats(pooled_S);
    txt << "pooled: cycles " << pooled_dur.size() << " mean_duration " << fmt_double(dstat.mean)
        << " se " << fmt_double(dstat.se) << " mean_integral " << fmt_double(sstat.mean) << " se "
        << fmt_double(sstat.se) << "\n";
    jeps["pooled"] = {{"cycles", pooled_dur.size()},
                      {"mean_duration", fmt_double(dstat.mean)},
                      {"se_duration", fmt_double(dstat.se)},
                      {"mean_integral", fmt_double(sstat.mean)},
                      {"se_integral", fmt_double(sstat.se)}};

    if (pooled_dur.size() >= 100) {
      fwq::ReturnTimeLaw law = fwq::return_time_law(pooled_dur);
      txt << "return_time: ks_d " << fmt_double(law.ks_d) << " ks_p " << fmt_double(law.ks_p)
          << " tail_rate " << fmt_double(law.tail_rate) << " tail_ok " << (law.tail_ok ? 1 : 0)
          << "\n";
      jeps["return_time"] = {{"ks_d", fmt_double(law.ks_d)},
                             {"ks_p", fmt_double(law.ks_p)},
                             {"tail_rate", fmt_double(law.tail_rate)},
                             {"tail_ok", law.tail_ok}};
    }

    if (cfg.m) {
      std::size_t groups = 0, used = 0;
      double gdur = 0;
      for (int r = 0; r < cfg.replicas; ++r) {
        fwq::MulticycleBuild mb = fwq::build_multicycles(
            results[r].cycles, *cfg.m, eps,
            cfg.seed + 0x9E3779B97F4A7C15ULL * (ei * cfg.replicas + r + 1));
        groups += mb.groups.size();
        used += mb.cycles_used;
        for (const fwq::MulticycleRecord& g : mb.groups) gdur += g.duration;
      }
      txt << "multicycles: groups " << groups << " cycles_used " << used << " mean_duration "
          << fmt_double(groups ? gdur / groups : 0) << "\n";
      jeps["multicycles"] = {{"groups", groups},
                             {"cycles_used", used},
                             {"mean_duration", fmt_double(groups ? gdur / groups : 0)}};
    }
    jsum["levels"].push_back(jeps);
  }

  std::cout << txt.str();
  if (!out_dir.empty()) {
    fwq::write_file(out_dir + "/cycles.tsv", tsv.str());
    fwq::write_file(out_dir + "/summary.txt", txt.str());
    nlohmann::json wrapped;
    wrapped["config"] = cfg.resolved;
    wrapped["results"] = jsum;
    fwq::write_file(out_dir + "/summary.json", wrapped.dump(2) + "\n");
  }
  return 0;
}

// ------------------------------------------------------------------ verify

std::vector<int> suites_to_ids(const std::vector<std::string>& suites) {
  std::vector<int> ids;
  auto add = [&](std::initializer_list<int> some) {
    for (int s : some)
      if (std::find(ids.begin(), ids.end(), s) == ids.end()) ids.push_back(s);
  };
  if (suites.empty()) {
    add({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    return ids;
  }
  for (const std::string& s : suites) {
    if (s == "all")
      add({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    else if (s == "exact" || s == "fast")
      add({1, 2, 3, 4, 5, 6, 7, 8});
    else if (s == "sim")
      add({9, 10, 11, 12});
    else if (s == "example1")
      add({1});
    else if (s == "example2")
      add({2});
    else if (s == "chains")
      add({3});
    else if (s == "graphs")
      add({4, 5});
    else if (s == "refinements")
      add({6});
    else if (s == "landscape")
      add({7});
    else if (s == "reduction")
      add({8});
    else if (s == "return-time")
      add({9});
    else if (s == "renewal")
      add({10});
    else if (s == "variance")
      add({11});
    else if (s == "determinism")
      add({12});
    else {
      bool matched = false;
      for (int id : fwq::all_criteria()) {
        if (s == fwq::criterion_name(id) || s == std::to_string(id)) {
          add({id});
          matched = true;
          break;
        }
      }
      if (!matched) fwq::fail(fwq::Err::ConfigInvalid, "unknown verify suite \"" + s + "\"");
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& fwq_path, int jobs,
               const std::string& out_dir, const char* argv0) {
  fwq::VerifyOptions opt;
  opt.fwq_binary = fwq_path.empty() ? self_path(argv0) : fwq_path;
  opt.jobs = jobs;
  std::vector<int> ids = suites_to_ids(suites);

  std::ostringstream log;
  int passed = 0;
  for (int id : ids) {
    fwq::CriterionResult r = fwq::run_criterion(id, opt);
    char line[256];
    std::snprintf(line, sizeof line, "%s %2d %-28s %8.2fs  ", r.pass ? "PASS" : "FAIL", r.id,
                  r.name.c_str(), r.seconds);
    std::cout << line << r.detail << "\n" << std::flush;
    log << line << r.detail << "\n";
    if (r.pass) ++passed;
  }
  std::ostringstream tail;
  tail << passed << "/" << ids.size() << " criteria passed\n";
  std::cout << tail.str();
  log << tail.str();
  if (!out_dir.empty()) fwq::write_file(out_dir + "/verify.txt", log.str());
  return passed == static_cast<int>(ids.size()) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decay-rate formulas and regenerative simulation for metastable diffusions"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir, fwq_path;
  std::uint64_t seed = 0, max_steps = 0;
  bool seed_set = false;
  int jobs = 1;
  std::vector<std::string> suites;

  CLI::App* rates = app.add_subcommand("rates", "decay-rate table for a configured instance");
  rates->add_option("--config", cfg_path, "JSON config path")->required();
  rates->add_option("--out", out_dir, "directory for rates.txt and rates.json");

  CLI::App* graphs = app.add_subcommand("graphs", "minimum-weight arrow-map listing");
  graphs->add_option("--config", cfg_path, "JSON config path")->required();
  graphs->add_option("--out", out_dir, "directory for graphs.txt and graphs.json");

  CLI::App* simulate = app.add_subcommand("simulate", "regenerative cycle simulation");
  simulate->add_option("--config", cfg_path, "JSON config path")->required();
  simulate->add_option("--out", out_dir, "directory for cycles.tsv and summaries");
  simulate->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  simulate->add_option("--max-steps", max_steps, "step budget override");
  simulate->add_option("--jobs", jobs, "worker threads");

  CLI::App* verify = app.add_subcommand("verify", "acceptance criteria");
  verify->add_option("suites", suites, "criteria to run (names, numbers, or suites; default all)");
  verify->add_option("--fwq", fwq_path, "path to this binary for rerun checks");
  verify->add_option("--jobs", jobs, "worker threads");
  verify->add_option("--out", out_dir, "directory for verify.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (rates->parsed()) return cmd_rates(cfg_path, out_dir);
    if (graphs->parsed()) return cmd_graphs(cfg_path, out_dir);
    if (simulate->parsed())
      return cmd_simulate(cfg_path, out_dir, seed_set, seed, max_steps, jobs);
    if (verify->parsed()) return cmd_verify(suites, fwq_path, jobs, out_dir, argv[0]);
  } catch (const fwq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == fwq::Err::BudgetExceeded ? 3 : 2;
  } catch (const std::logic_error& e) {
    std::cerr << "internal cross-check failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
