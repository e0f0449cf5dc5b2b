#pragma once

#include <string>

#include "json.hpp"

#include "config.hpp"
#include "rates.hpp"
#include "rational.hpp"

namespace fwq {

// Shortest exact decimal for a double (printf %.17g trimmed by round-trip).
std::string fmt_double(double v);

// The resolved config as '#'-prefixed header lines, ending in a newline.
// Every emitted table starts with this block so outputs are self-describing.
std::string config_header(const nlohmann::json& resolved);

void write_file(const std::string& path, const std::string& content);

nlohmann::json rate_report_json(const RateReport<Rat>& rep);
nlohmann::json rate_report_json(const RateReport<double>& rep);

std::string rate_report_table(const RateReport<Rat>& rep);
std::string rate_report_table(const RateReport<double>& rep);

}  // namespace fwq
