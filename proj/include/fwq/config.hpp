#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "landscape.hpp"
#include "rates.hpp"
#include "rational.hpp"
#include "simulate.hpp"

namespace fwq {

// Which of the three mutually exclusive input blocks the config carries.
enum class InputKind { LandscapeBlock, CostsBlock, WValuesBlock };

struct ObservableConfig {
  std::vector<std::pair<double, double>> intervals;  // landscape runs
  std::vector<int> indices;                          // raw-cost runs
  bool f_is_zero = true;
  Rat f_const = 0;                  // constant weight, exact
  std::vector<Rat> f_poly;          // or polynomial coefficients, low order first
  std::optional<RVec> inf_fV;      // supplied infima bypassing the grid search
  std::optional<RVec> inf_2fV;
  int f_sign = 0;
};

struct ExperimentConfig {
  InputKind kind = InputKind::LandscapeBlock;
  std::string name;

  Landscape landscape;  // valid when kind == LandscapeBlock

  RMat V;  // valid when kind == CostsBlock
  std::optional<RVec> W, W_pair;
  std::optional<Rat> h1;

  ObservableConfig obs;

  std::optional<Rat> c;      // horizon exponent
  std::optional<double> T;   // or a flat horizon length
  std::vector<double> eps_grid;
  double delta = 0;
  std::optional<double> m;   // multicycle grouping exponent

  SimMode mode = SimMode::FixedCycles;
  std::size_t cycles = 0;
  int replicas = 1;
  std::uint64_t max_steps = 4'000'000'000ULL;
  std::uint64_t seed = 0;

  nlohmann::json resolved;  // normalized copy echoed into every report
};

// Exact rational from a JSON scalar: strings go through the fraction parser,
// integers convert directly, and doubles convert by their exact binary value.
Rat rat_from_json(const nlohmann::json& j);

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Weight function described by the observable block, as a callable (null
// when it is identically zero).
std::function<double(double)> observable_function(const ObservableConfig& obs);

// Exact-arithmetic rate inputs from a costs or wvalues block.
RateInputs<Rat> exact_rate_inputs(const ExperimentConfig& cfg);

// Double-precision rate inputs from a landscape block: the stable-state cost
// matrix with the deepest well rotated to slot 0, and grid infima over the
// configured intervals. Also returns the rotation (slot -> stable index).
RateInputs<double> landscape_rate_inputs(const ExperimentConfig& cfg, const EquilibriumSet& eqs,
                                         std::vector<int>* order_out = nullptr);

}  // namespace fwq
