#include "fwq/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fwq {

std::string fmt_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

std::string config_header(const nlohmann::json& resolved) {
  std::ostringstream out;
  std::istringstream lines(resolved.dump(2));
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << "\n";
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(Err::ConfigInvalid, "cannot write " + path);
  out << content;
}

namespace {

template <class T, class Fmt>
nlohmann::json report_json(const RateReport<T>& rep, Fmt fmt) {
  nlohmann::json j;
  auto vec = [&](const std::vector<T>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const T& x : v) a.push_back(fmt(x));
    return a;
  };
  if (!rep.h.empty()) j["h"] = vec(rep.h);
  j["h1"] = fmt(rep.h1);
  j["w"] = fmt(rep.w);
  j["W"] = vec(rep.W);
  j["W_pair"] = vec(rep.W_pair);
  j["regime"] = regime_name(rep.regime);
  j["R1"] = vec(rep.R1);
  j["R2"] = vec(rep.R2);
  if (rep.regime == Regime::Multicycle) j["R3"] = vec(rep.R3);
  j["variance_rate"] = fmt(rep.variance_rate);
  j["argmin_state"] = rep.argmin_j;
  j["argmin_family"] = rep.argmin_superscript;
  j["bias_rate"] = fmt(rep.bias_rate);
  j["source_W"] = rep.source_W == RateSource::Supplied ? "supplied" : "computed";
  j["source_h1"] = rep.source_h1 == RateSource::Supplied ? "supplied" : "computed";
  return j;
}

template <class T, class Fmt>
std::string report_table(const RateReport<T>& rep, Fmt fmt) {
  std::ostringstream out;
  int l = static_cast<int>(rep.R1.size());
  out << "regime\t" << regime_name(rep.regime) << "\n";
  out << "h1\t" << fmt(rep.h1) << (rep.source_h1 == RateSource::Supplied ? "\t(supplied)" : "")
      << "\n";
  out << "w\t" << fmt(rep.w) << "\n";
  out << "state\tW\tW_pair\tR1\tR2";
  bool r3 = rep.regime == Regime::Multicycle;
  if (r3) out << "\tR3";
  out << "\n";
  for (int s = 0; s < l; ++s) {
    out << s << "\t" << fmt(rep.W[s]) << "\t" << fmt(rep.W_pair[s]) << "\t" << fmt(rep.R1[s])
        << "\t" << fmt(rep.R2[s]);
    if (r3) out << "\t" << fmt(rep.R3[s]);
    out << "\n";
  }
  out << "variance_rate\t" << fmt(rep.variance_rate) << "\tat state " << rep.argmin_j
      << " family R" << rep.argmin_superscript << "\n";
  out << "bias_rate\t" << fmt(rep.bias_rate) << "\n";
  return out.str();
}

}  // namespace

nlohmann::json rate_report_json(const RateReport<Rat>& rep) {
  return report_json(rep, [](const Rat& r) { return rat_to_string(r); });
}
nlohmann::json rate_report_json(const RateReport<double>& rep) {
  return report_json(rep, [](double v) { return fmt_double(v); });
}
std::string rate_report_table(const RateReport<Rat>& rep) {
  return report_table(rep, [](const Rat& r) { return rat_to_string(r); });
}
std::string rate_report_table(const RateReport<double>& rep) {
  return report_table(rep, [](double v) { return fmt_double(v); });
}

}  // namespace fwq
