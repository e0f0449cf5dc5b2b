#include "fwq/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fwq {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      fail(Err::ConfigInvalid, "unknown key \"" + it.key() + "\" in " + where);
  }
}

double double_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return to_double(rat_from_string(j.get<std::string>()));
  fail(Err::ConfigInvalid, where + " must be a number");
}

RVec rvec_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(Err::ConfigInvalid, where + " must be an array");
  RVec v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(rat_from_json(e));
  return v;
}

RMat rmat_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) fail(Err::ConfigInvalid, where + " must be a matrix");
  RMat m;
  for (const auto& row : j) m.push_back(rvec_from_json(row, where));
  return m;
}

json rvec_to_json(const RVec& v) {
  json a = json::array();
  for (const Rat& r : v) a.push_back(rat_to_string(r));
  return a;
}

json rmat_to_json(const RMat& m) {
  json a = json::array();
  for (const RVec& row : m) a.push_back(rvec_to_json(row));
  return a;
}

Landscape parse_landscape(const json& j) {
  check_keys(j, {"family", "h_left", "h_right", "top", "a", "heights", "period", "xl", "xr",
                 "height", "knots_x", "knots_y"},
             "landscape");
  if (!j.contains("family")) fail(Err::ConfigInvalid, "landscape needs a family");
  std::string fam = j.at("family").get<std::string>();
  Landscape L;
  if (fam == "double_well") {
    if (!j.contains("h_left") || !j.contains("h_right"))
      fail(Err::ConfigInvalid, "double_well needs h_left and h_right");
    double top = j.contains("top") ? double_from_json(j.at("top"), "top") : 0.0;
    L = make_double_well(double_from_json(j.at("h_left"), "h_left"),
                         double_from_json(j.at("h_right"), "h_right"), top);
  } else if (fam == "multiwell") {
    if (!j.contains("heights") || !j.contains("period"))
      fail(Err::ConfigInvalid, "multiwell needs heights and period");
    std::vector<double> hs;
    for (const auto& e : j.at("heights")) hs.push_back(double_from_json(e, "heights"));
    double xl = j.contains("xl") ? double_from_json(j.at("xl"), "xl") : 0.0;
    L = make_multiwell(hs, double_from_json(j.at("period"), "period"), xl);
  } else if (fam == "cosine_well") {
    double h = j.contains("height") ? double_from_json(j.at("height"), "height") : 1.0;
    L = make_cosine_well(h);
  } else if (fam == "quadratic_well") {
    L = make_quadratic_well();
  } else if (fam == "spline") {
    if (!j.contains("knots_x") || !j.contains("knots_y") || !j.contains("xl") || !j.contains("xr"))
      fail(Err::ConfigInvalid, "spline needs knots_x, knots_y, xl, xr");
    std::vector<double> xs, ys;
    for (const auto& e : j.at("knots_x")) xs.push_back(double_from_json(e, "knots_x"));
    for (const auto& e : j.at("knots_y")) ys.push_back(double_from_json(e, "knots_y"));
    L = make_spline_landscape(xs, ys, double_from_json(j.at("xl"), "xl"),
                              double_from_json(j.at("xr"), "xr"));
  } else {
    fail(Err::ConfigInvalid, "unknown landscape family \"" + fam + "\"");
  }
  if (j.contains("a")) {
    L.a = double_from_json(j.at("a"), "a");
    if (!(L.a > 0)) fail(Err::ConfigInvalid, "noise coefficient a must be positive");
  }
  return L;
}

ObservableConfig parse_observable(const json& j) {
  check_keys(j, {"A", "indices", "f", "f_sign", "inf_fV", "inf_2fV"}, "observable");
  ObservableConfig o;
  if (j.contains("A")) {
    for (const auto& e : j.at("A")) {
      if (!e.is_array() || e.size() != 2)
        fail(Err::ConfigInvalid, "observable.A must list [lo, hi] pairs");
      o.intervals.emplace_back(double_from_json(e[0], "A"), double_from_json(e[1], "A"));
    }
    if (o.intervals.empty()) fail(Err::EmptySet, "observable.A is empty");
  }
  if (j.contains("indices")) {
    for (const auto& e : j.at("indices")) o.indices.push_back(e.get<int>());
    if (o.indices.empty()) fail(Err::EmptySet, "observable.indices is empty");
  }
  if (j.contains("A") && j.contains("indices"))
    fail(Err::ConfigInvalid, "observable takes intervals or indices, not both");
  if (j.contains("f")) {
    const auto& f = j.at("f");
    if (f.is_object()) {
      check_keys(f, {"poly"}, "observable.f");
      if (!f.contains("poly")) fail(Err::ConfigInvalid, "observable.f object needs poly");
      o.f_poly = rvec_from_json(f.at("poly"), "observable.f.poly");
      if (o.f_poly.empty()) fail(Err::ConfigInvalid, "observable.f.poly is empty");
      o.f_is_zero = false;
    } else {
      o.f_const = rat_from_json(f);
      o.f_is_zero = o.f_const == 0;
    }
  }
  if (j.contains("inf_fV")) o.inf_fV = rvec_from_json(j.at("inf_fV"), "observable.inf_fV");
  if (j.contains("inf_2fV")) o.inf_2fV = rvec_from_json(j.at("inf_2fV"), "observable.inf_2fV");
  if (o.inf_fV.has_value() != o.inf_2fV.has_value())
    fail(Err::ConfigInvalid, "inf_fV and inf_2fV must be supplied together");

  if (j.contains("f_sign")) {
    o.f_sign = j.at("f_sign").get<int>();
    if (o.f_sign < -1 || o.f_sign > 1) fail(Err::ConfigInvalid, "f_sign must be -1, 0 or 1");
  } else if (o.f_is_zero || (o.f_poly.empty() && o.f_const >= 0)) {
    o.f_sign = 1;  // a nonnegative constant is nonnegative on any set
  }
  if (o.f_sign > 0 && o.f_poly.empty() && o.f_const < 0)
    fail(Err::ConfigInvalid, "f_sign declares f >= 0 but f is a negative constant");
  return o;
}

}  // namespace

Rat rat_from_json(const nlohmann::json& j) {
  if (j.is_string()) return rat_from_string(j.get<std::string>());
  if (j.is_number_integer()) return Rat(BigInt(j.get<long long>()));
  if (j.is_number_unsigned()) return Rat(BigInt(j.get<unsigned long long>()));
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) fail(Err::ConfigInvalid, "non-finite number in config");
    // Exact binary value of the double: mantissa times a power of two.
    int e = 0;
    double mant = std::frexp(v, &e);
    long long im = static_cast<long long>(std::ldexp(mant, 53));
    e -= 53;
    Rat r{BigInt(im)};
    if (e > 0)
      r *= rat_pow(Rat(2), static_cast<unsigned long long>(e));
    else if (e < 0)
      r /= rat_pow(Rat(2), static_cast<unsigned long long>(-e));
    return r;
  }
  fail(Err::ConfigInvalid, "expected a number or fraction string");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) fail(Err::ConfigInvalid, "config root must be an object");
  check_keys(j,
             {"name", "landscape", "costs", "wvalues", "observable", "horizon", "noise",
              "simulate", "seed", "roots"},
             "config");

  ExperimentConfig cfg;
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();

  int blocks = int(j.contains("landscape")) + int(j.contains("costs")) + int(j.contains("wvalues"));
  if (blocks != 1)
    fail(Err::ConfigInvalid, "config needs exactly one of landscape, costs, wvalues");

  json resolved;
  resolved["name"] = cfg.name;

  if (j.contains("landscape")) {
    cfg.kind = InputKind::LandscapeBlock;
    cfg.landscape = parse_landscape(j.at("landscape"));
    resolved["landscape"] = j.at("landscape");
  } else if (j.contains("costs")) {
    cfg.kind = InputKind::CostsBlock;
    const json& cb = j.at("costs");
    check_keys(cb, {"V", "h1"}, "costs");
    if (!cb.contains("V")) fail(Err::ConfigInvalid, "costs needs the matrix V");
    cfg.V = rmat_from_json(cb.at("V"), "costs.V");
    std::size_t l = cfg.V.size();
    if (l < 2) fail(Err::ConfigInvalid, "costs.V needs at least two states");
    for (const auto& row : cfg.V)
      if (row.size() != l) fail(Err::ConfigInvalid, "costs.V must be square");
    if (cb.contains("h1")) cfg.h1 = rat_from_json(cb.at("h1"));
    resolved["costs"]["V"] = rmat_to_json(cfg.V);
    if (cfg.h1) resolved["costs"]["h1"] = rat_to_string(*cfg.h1);
  } else {
    cfg.kind = InputKind::WValuesBlock;
    const json& wb = j.at("wvalues");
    check_keys(wb, {"W", "W_pair", "h1"}, "wvalues");
    if (!wb.contains("W") || !wb.contains("W_pair") || !wb.contains("h1"))
      fail(Err::ConfigInvalid, "wvalues needs W, W_pair and h1");
    cfg.W = rvec_from_json(wb.at("W"), "wvalues.W");
    std::size_t l = cfg.W->size();
    if (l < 2) fail(Err::ConfigInvalid, "wvalues.W needs at least two states");
    RVec wp = rvec_from_json(wb.at("W_pair"), "wvalues.W_pair");
    if (wp.size() == l - 1) {
      // Pair weights are only defined against the reference state; accept the
      // short form and align it so entry j refers to the pair {0, j}.
      RVec padded(l);
      padded[0] = (*cfg.W)[0];
      std::copy(wp.begin(), wp.end(), padded.begin() + 1);
      wp = std::move(padded);
    }
    if (wp.size() != l) fail(Err::ConfigInvalid, "wvalues.W_pair has the wrong length");
    cfg.W_pair = std::move(wp);
    cfg.h1 = rat_from_json(wb.at("h1"));
    resolved["wvalues"]["W"] = rvec_to_json(*cfg.W);
    resolved["wvalues"]["W_pair"] = rvec_to_json(*cfg.W_pair);
    resolved["wvalues"]["h1"] = rat_to_string(*cfg.h1);
  }

  if (j.contains("observable")) {
    cfg.obs = parse_observable(j.at("observable"));
    json ob;
    if (!cfg.obs.intervals.empty()) {
      json a = json::array();
      for (auto& [lo, hi] : cfg.obs.intervals) a.push_back({lo, hi});
      ob["A"] = a;
    }
    if (!cfg.obs.indices.empty()) ob["indices"] = cfg.obs.indices;
    if (!cfg.obs.f_poly.empty())
      ob["f"]["poly"] = rvec_to_json(cfg.obs.f_poly);
    else
      ob["f"] = rat_to_string(cfg.obs.f_const);
    ob["f_sign"] = cfg.obs.f_sign;
    if (cfg.obs.inf_fV) ob["inf_fV"] = rvec_to_json(*cfg.obs.inf_fV);
    if (cfg.obs.inf_2fV) ob["inf_2fV"] = rvec_to_json(*cfg.obs.inf_2fV);
    resolved["observable"] = ob;
  }

  if (j.contains("horizon")) {
    const json& hb = j.at("horizon");
    check_keys(hb, {"c", "T"}, "horizon");
    if (hb.contains("c") == hb.contains("T"))
      fail(Err::ConfigInvalid, "horizon needs exactly one of c (exponent) or T (length)");
    if (hb.contains("c")) {
      cfg.c = rat_from_json(hb.at("c"));
      resolved["horizon"]["c"] = rat_to_string(*cfg.c);
    } else {
      cfg.T = double_from_json(hb.at("T"), "horizon.T");
      if (!(*cfg.T > 0)) fail(Err::ConfigInvalid, "horizon.T must be positive");
      resolved["horizon"]["T"] = *cfg.T;
    }
  }

  if (j.contains("noise")) {
    const json& nb = j.at("noise");
    check_keys(nb, {"epsilon", "delta", "m"}, "noise");
    if (nb.contains("epsilon")) {
      for (const auto& e : nb.at("epsilon")) cfg.eps_grid.push_back(double_from_json(e, "epsilon"));
      if (cfg.eps_grid.empty()) fail(Err::ConfigInvalid, "noise.epsilon is empty");
      for (std::size_t i = 0; i < cfg.eps_grid.size(); ++i) {
        if (!(cfg.eps_grid[i] > 0)) fail(Err::ConfigInvalid, "noise levels must be positive");
        if (i > 0 && !(cfg.eps_grid[i] < cfg.eps_grid[i - 1]))
          fail(Err::ConfigInvalid, "noise.epsilon must be strictly decreasing");
      }
      resolved["noise"]["epsilon"] = cfg.eps_grid;
    }
    if (nb.contains("delta")) {
      cfg.delta = double_from_json(nb.at("delta"), "delta");
      if (!(cfg.delta > 0)) fail(Err::ConfigInvalid, "noise.delta must be positive");
      resolved["noise"]["delta"] = cfg.delta;
    }
    if (nb.contains("m")) {
      cfg.m = double_from_json(nb.at("m"), "m");
      if (!(*cfg.m > 0)) fail(Err::ConfigInvalid, "noise.m must be positive");
      resolved["noise"]["m"] = *cfg.m;
    }
  }

  if (j.contains("simulate")) {
    const json& sb = j.at("simulate");
    check_keys(sb, {"mode", "cycles", "replicas", "max_steps"}, "simulate");
    std::string mode = sb.contains("mode") ? sb.at("mode").get<std::string>() : "cycles";
    if (mode == "cycles")
      cfg.mode = SimMode::FixedCycles;
    else if (mode == "horizon")
      cfg.mode = SimMode::Horizon;
    else
      fail(Err::ConfigInvalid, "simulate.mode must be \"cycles\" or \"horizon\"");
    if (sb.contains("cycles")) {
      long long n = sb.at("cycles").get<long long>();
      if (n < 1) fail(Err::ConfigInvalid, "simulate.cycles must be positive");
      cfg.cycles = static_cast<std::size_t>(n);
    }
    if (cfg.mode == SimMode::FixedCycles && cfg.cycles == 0)
      fail(Err::ConfigInvalid, "simulate.mode \"cycles\" needs simulate.cycles");
    if (cfg.mode == SimMode::Horizon && !cfg.T && !cfg.c)
      fail(Err::ConfigInvalid, "simulate.mode \"horizon\" needs a horizon block");
    if (sb.contains("replicas")) {
      cfg.replicas = sb.at("replicas").get<int>();
      if (cfg.replicas < 1) fail(Err::ConfigInvalid, "simulate.replicas must be positive");
    }
    if (sb.contains("max_steps")) {
      long long ms = sb.at("max_steps").get<long long>();
      if (ms < 1) fail(Err::ConfigInvalid, "simulate.max_steps must be positive");
      cfg.max_steps = static_cast<std::uint64_t>(ms);
    }
    resolved["simulate"] = {{"mode", mode},
                            {"cycles", cfg.cycles},
                            {"replicas", cfg.replicas},
                            {"max_steps", cfg.max_steps}};
  }

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  resolved["seed"] = cfg.seed;
  if (j.contains("roots")) resolved["roots"] = j.at("roots");

  cfg.resolved = std::move(resolved);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::ConfigInvalid, "cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(Err::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

std::function<double(double)> observable_function(const ObservableConfig& obs) {
  if (obs.f_is_zero) return {};
  if (!obs.f_poly.empty()) {
    std::vector<double> coef;
    coef.reserve(obs.f_poly.size());
    for (const Rat& r : obs.f_poly) coef.push_back(to_double(r));
    return [coef](double x) {
      double v = 0;
      for (std::size_t i = coef.size(); i-- > 0;) v = v * x + coef[i];
      return v;
    };
  }
  double v = to_double(obs.f_const);
  return [v](double) { return v; };
}

RateInputs<Rat> exact_rate_inputs(const ExperimentConfig& cfg) {
  if (cfg.kind == InputKind::LandscapeBlock)
    fail(Err::ConfigInvalid, "exact rate inputs need a costs or wvalues block");
  if (!cfg.c) fail(Err::ConfigInvalid, "rate formulas need horizon.c");
  if (!cfg.obs.f_poly.empty())
    fail(Err::ConfigInvalid, "state-indexed inputs take a constant f only");

  RateInputs<Rat> in;
  in.c = *cfg.c;
  in.f_sign = cfg.obs.f_sign;

  std::size_t l = cfg.kind == InputKind::CostsBlock ? cfg.V.size() : cfg.W->size();

  if (cfg.obs.inf_fV) {
    if (cfg.obs.inf_fV->size() != l || cfg.obs.inf_2fV->size() != l)
      fail(Err::ConfigInvalid, "supplied infimum vectors have the wrong length");
    in.infA_fV = *cfg.obs.inf_fV;
    in.infA_2fV = *cfg.obs.inf_2fV;
  } else if (cfg.kind == InputKind::CostsBlock) {
    if (cfg.obs.indices.empty())
      fail(Err::EmptySet, "costs runs need observable.indices or supplied infima");
    for (int i : cfg.obs.indices)
      if (i < 0 || i >= static_cast<int>(l))
        fail(Err::ConfigInvalid, "observable index out of range");
    in.infA_fV.resize(l);
    in.infA_2fV.resize(l);
    for (std::size_t s = 0; s < l; ++s) {
      bool first = true;
      Rat best;
      for (int i : cfg.obs.indices) {
        const Rat& v = cfg.V[s][static_cast<std::size_t>(i)];
        if (first || v < best) best = v;
        first = false;
      }
      in.infA_fV[s] = cfg.obs.f_const + best;
      in.infA_2fV[s] = Rat(2) * cfg.obs.f_const + best;
    }
  } else {
    fail(Err::EmptySet, "wvalues runs need supplied infimum vectors");
  }

  if (cfg.kind == InputKind::CostsBlock) {
    in.V = cfg.V;
    if (cfg.h1) in.h1 = cfg.h1;
  } else {
    in.W = cfg.W;
    in.W_pair = cfg.W_pair;
    in.h1 = cfg.h1;
  }
  return in;
}

RateInputs<double> landscape_rate_inputs(const ExperimentConfig& cfg, const EquilibriumSet& eqs,
                                         std::vector<int>* order_out) {
  if (cfg.kind != InputKind::LandscapeBlock)
    fail(Err::ConfigInvalid, "landscape rate inputs need a landscape block");
  if (!cfg.c) fail(Err::ConfigInvalid, "rate formulas need horizon.c");
  if (cfg.obs.intervals.empty()) fail(Err::EmptySet, "landscape runs need observable.A");

  int ns = static_cast<int>(eqs.stable.size());
  if (ns < 2) fail(Err::ConfigInvalid, "need at least two stable equilibria");

  // Deepest well first, the rest in ascending position order.
  std::vector<int> order;
  order.push_back(eqs.deepest);
  for (int s = 0; s < ns; ++s)
    if (s != eqs.deepest) order.push_back(s);
  if (order_out) *order_out = order;

  RateInputs<double> in;
  in.c = to_double(*cfg.c);
  in.f_sign = cfg.obs.f_sign;
  in.V.assign(ns, std::vector<double>(ns, 0.0));
  for (int i = 0; i < ns; ++i)
    for (int k = 0; k < ns; ++k) in.V[i][k] = eqs.V[order[i]][order[k]];

  auto f = observable_function(cfg.obs);
  if (!f) f = [](double) { return 0.0; };
  in.infA_fV.resize(ns);
  in.infA_2fV.resize(ns);
  for (int i = 0; i < ns; ++i) {
    SetInfimum si = quasipotential_to_set(cfg.landscape, eqs, order[i], cfg.obs.intervals, f);
    in.infA_fV[i] = si.inf_fV;
    in.infA_2fV[i] = si.inf_2fV;
  }
  return in;
}

}  // namespace fwq
