#include "medlearn/effects.hpp"

#include <fstream>

namespace medlearn {

EffectVector estimate_catte(const Dataset& ds, const LearnerSpec& spec) {
  auto [control, treated] = split_by_treatment(ds);
  const auto g0 = fit_model(control.covariates(), control.outcome(), spec, ModelRole::outcome_control);
  const auto g1 = fit_model(treated.covariates(), treated.outcome(), spec, ModelRole::outcome_treated);

  EffectVector out;
  out.kind = EffectKind::total;
  out.learner_fingerprint = fingerprint(spec);
  out.values = g1->predict(ds.covariates()) - g0->predict(ds.covariates());
  if (!out.values.allFinite()) throw NumericError("non-finite effect estimate");
  return out;
}

EffectVector estimate_caite(const Dataset& ds, const LearnerSpec& spec) {
  if (!ds.has_mediator()) throw ConfigError("indirect-effect estimation needs a mediator column");
  auto [control, treated] = split_by_treatment(ds);

  const auto gm1 = fit_model(treated.covariates(), treated.mediator(), spec, ModelRole::mediator_treated);
  const auto gm0 = fit_model(control.covariates(), control.mediator(), spec, ModelRole::mediator_control);

  Matrix treated_xm(treated.size(), ds.dim() + 1);
  treated_xm.leftCols(ds.dim()) = treated.covariates();
  treated_xm.col(ds.dim()) = treated.mediator();
  const auto gy1 = fit_model(treated_xm, treated.outcome(), spec, ModelRole::outcome_given_mediator);

  const Vector m1_hat = gm1->predict(ds.covariates());
  const Vector m0_hat = gm0->predict(ds.covariates());

  Matrix xm(ds.n(), ds.dim() + 1);
  xm.leftCols(ds.dim()) = ds.covariates();
  xm.col(ds.dim()) = m1_hat;
  const Vector y_at_m1 = gy1->predict(xm);
  xm.col(ds.dim()) = m0_hat;
  const Vector y_at_m0 = gy1->predict(xm);

  EffectVector out;
  out.kind = EffectKind::indirect;
  out.learner_fingerprint = fingerprint(spec);
  out.values = y_at_m1 - y_at_m0;
  if (!out.values.allFinite()) throw NumericError("non-finite effect estimate");
  return out;
}

void write_effects_csv(const EffectVector& effects, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "unit_index,tau_hat\n";
  for (Index i = 0; i < effects.values.size(); ++i) {
    out << i << ',' << format_double(effects.values[i]) << '\n';
  }
}

}  // namespace medlearn
