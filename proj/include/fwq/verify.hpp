#pragma once

#include <string>
#include <vector>

namespace fwq {

// One acceptance check: a named, self-contained experiment with a hard
// pass/fail verdict and a one-line summary of what was measured.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct VerifyOptions {
  std::string fwq_binary;  // CLI path, needed by the rerun-determinism check
  int jobs = 1;
};

std::vector<int> all_criteria();
std::string criterion_name(int id);

// Runs one criterion; never throws (failures are folded into the result).
CriterionResult run_criterion(int id, const VerifyOptions& opt);
std::vector<CriterionResult> run_criteria(const std::vector<int>& ids, const VerifyOptions& opt);

}  // namespace fwq
