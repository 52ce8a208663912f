#pragma once

#include "medlearn/dataset.hpp"
#include "medlearn/learners.hpp"

#include <string>

namespace medlearn {

enum class EffectKind { total, indirect };

// Per-unit estimated effect, evaluated in-sample at all n units.
struct EffectVector {
  Vector values;
  EffectKind kind = EffectKind::total;
  std::uint64_t learner_fingerprint = 0;
};

// T-learner: fit the outcome on each arm, difference the predictions.
EffectVector estimate_catte(const Dataset& ds, const LearnerSpec& spec);

// M-learner: fit both arm mediator models and the treated outcome-given-
// mediator model, then difference the outcome predictions at the two
// predicted mediator values. Control outcomes are never touched.
EffectVector estimate_caite(const Dataset& ds, const LearnerSpec& spec);

void write_effects_csv(const EffectVector& effects, const std::string& path);

}  // namespace medlearn
