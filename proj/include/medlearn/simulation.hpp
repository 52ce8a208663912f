#pragma once

#include "medlearn/common.hpp"
#include "medlearn/dataset.hpp"
#include "medlearn/learners.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace medlearn {

enum class ScenarioFamily { no_mediator, mediator };

enum class ScenarioId {
  simple,
  complex,
  global,
  null,
  simple_all,
  simple_part,
  complex_all,
  complex_part,
  simple_null1,
  simple_null2,
  simple_global,
};

ScenarioFamily family_of(ScenarioId id);
ScenarioId parse_scenario(const std::string& name);
std::string to_string(ScenarioId id);
std::vector<ScenarioId> all_scenarios();

// One simulated world. Intercepts and the mediator coefficient carry the
// scenario's published values by default; noise_variance is the variance of
// the additive Gaussian errors (low 0.01, moderate 0.1, high 1).
struct ScenarioConfig {
  ScenarioId id = ScenarioId::simple;
  Index n = 1000;
  Index d = 10;
  double noise_variance = 0.01;
  std::uint64_t seed = 0;
  double b = 1.0;   // outcome intercept, no-mediator family
  double b1 = 0.0;  // mediator-model intercept
  double b2 = 1.0;  // outcome-model intercept
  double c = 1.0;   // mediator coefficient in the outcome model

  static ScenarioConfig for_scenario(ScenarioId id);
};

double noise_variance_for_level(const std::string& level);  // low|moderate|high or a number

// Per-unit truths computed from the same noise draws as the observed data.
// true_tau_ite is empty for the no-mediator family.
struct GroundTruth {
  Vector true_tau_tot;
  Vector true_tau_ite;
  std::vector<bool> region_indicator;  // x1 > 0 and x2 > 0
};

std::pair<Dataset, GroundTruth> generate(const ScenarioConfig& cfg);

// Noise-free effect at arbitrary covariate points: total effect for the
// no-mediator family, indirect effect for the mediator family.
Vector true_effect_surface(const ScenarioConfig& cfg, const Matrix& grid);

// Closed-form response functions (noise-free) for the oracle learner.
OracleFunctions oracle_functions(const ScenarioConfig& cfg);

}  // namespace medlearn
