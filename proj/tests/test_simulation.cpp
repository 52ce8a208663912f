#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medlearn/effects.hpp"
#include "medlearn/simulation.hpp"

#include <cmath>

using namespace medlearn;

namespace {

ScenarioConfig cfg_for(ScenarioId id, Index n = 200, std::uint64_t seed = 1) {
  auto cfg = ScenarioConfig::for_scenario(id);
  cfg.n = n;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("null scenario has identically zero total effect") {
  auto [ds, truth] = generate(cfg_for(ScenarioId::null));
  CHECK(truth.true_tau_tot.isZero(0.0));
}

TEST_CASE("global scenario gives every unit a total effect of one") {
  auto [ds, truth] = generate(cfg_for(ScenarioId::global));
  CHECK((truth.true_tau_tot - Vector::Constant(200, 1.0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("heterogeneous region covers about a quarter of units") {
  auto cfg = cfg_for(ScenarioId::simple, 1000, 5);
  auto [ds, truth] = generate(cfg);
  int count = 0;
  for (bool in_region : truth.region_indicator) count += in_region ? 1 : 0;
  // Binomial(1000, 1/4): three sigma is about 41.
  CHECK(count > 250 - 45);
  CHECK(count < 250 + 45);
}

TEST_CASE("simple-null2 removes the mediator pathway") {
  auto [ds, truth] = generate(cfg_for(ScenarioId::simple_null2));
  CHECK(truth.true_tau_ite.isZero(0.0));
}

TEST_CASE("simple-global routes a unit effect through the mediator") {
  auto [ds, truth] = generate(cfg_for(ScenarioId::simple_global));
  CHECK((truth.true_tau_ite - Vector::Constant(200, 1.0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("simple-all indirect effect equals the kappa form") {
  auto cfg = cfg_for(ScenarioId::simple_all, 300, 9);
  auto [ds, truth] = generate(cfg);
  for (Index i = 0; i < ds.n(); ++i) {
    const double x1 = ds.covariates()(i, 0);
    const double x2 = ds.covariates()(i, 1);
    const double kappa = (x1 > 0 ? x1 : 0.0) + (x2 > 0 ? x2 : 0.0);
    CHECK(truth.true_tau_ite[i] == doctest::Approx(kappa).epsilon(1e-12));
    if (truth.region_indicator[static_cast<size_t>(i)]) CHECK(truth.true_tau_ite[i] > 0.0);
  }
}

TEST_CASE("observed outcome matches the potential outcome of the assigned arm") {
  // Regenerating with the same seed must reproduce data and truth exactly.
  auto cfg = cfg_for(ScenarioId::complex_part, 150, 33);
  auto [ds_a, truth_a] = generate(cfg);
  auto [ds_b, truth_b] = generate(cfg);
  CHECK(ds_a.covariates() == ds_b.covariates());
  CHECK(ds_a.treatment() == ds_b.treatment());
  CHECK(ds_a.outcome() == ds_b.outcome());
  CHECK(ds_a.mediator() == ds_b.mediator());
  CHECK(truth_a.true_tau_tot == truth_b.true_tau_tot);
  CHECK(truth_a.true_tau_ite == truth_b.true_tau_ite);
}

TEST_CASE("treatment assignment is uncorrelated with covariates") {
  const int reps = 20;
  const Index n = 400;
  Vector mean_corr = Vector::Zero(4);
  for (int rep = 0; rep < reps; ++rep) {
    auto cfg = cfg_for(ScenarioId::simple, n, 100 + rep);
    cfg.d = 4;
    auto [ds, truth] = generate(cfg);
    Vector w(n);
    for (Index i = 0; i < n; ++i) w[i] = ds.treatment()[static_cast<size_t>(i)];
    const double w_mean = w.mean();
    const double w_sd = std::sqrt((w.array() - w_mean).square().sum() / (n - 1));
    for (Index j = 0; j < 4; ++j) {
      const auto x = ds.covariates().col(j);
      const double x_mean = x.mean();
      const double x_sd = std::sqrt((x.array() - x_mean).square().sum() / (n - 1));
      const double cov = ((w.array() - w_mean) * (x.array() - x_mean)).sum() / (n - 1);
      mean_corr[j] += cov / (w_sd * x_sd);
    }
  }
  mean_corr /= reps;
  for (Index j = 0; j < 4; ++j) CHECK(std::abs(mean_corr[j]) <= 4.0 / std::sqrt(double(n)));
}

TEST_CASE("region frequency concentrates at one quarter") {
  double total = 0.0;
  const int reps = 1000;
  for (int rep = 0; rep < reps; ++rep) {
    auto cfg = cfg_for(ScenarioId::null, 100, 2000 + rep);
    cfg.d = 2;
    auto [ds, truth] = generate(cfg);
    int count = 0;
    for (bool b : truth.region_indicator) count += b ? 1 : 0;
    total += static_cast<double>(count) / 100.0;
  }
  CHECK(std::abs(total / reps - 0.25) <= 0.01);
}

TEST_CASE("true effect surface evaluates closed forms") {
  Matrix grid(3, 10);
  grid.setZero();
  grid(0, 0) = 1.0;
  grid(0, 1) = 1.0;
  grid(1, 0) = -1.0;
  grid(1, 1) = -0.5;
  grid(2, 0) = 0.5;

  const Vector simple = true_effect_surface(cfg_for(ScenarioId::simple), grid);
  CHECK(simple[0] == doctest::Approx(2.0));
  CHECK(simple[1] == doctest::Approx(0.0));
  CHECK(simple[2] == doctest::Approx(0.5));

  const Vector null = true_effect_surface(cfg_for(ScenarioId::null), grid);
  CHECK(null.isZero(0.0));

  const Vector global = true_effect_surface(cfg_for(ScenarioId::global), grid);
  CHECK(global == Vector::Constant(3, 1.0));
}

TEST_CASE("zero-noise oracle estimation matches ground truth to 1e-12") {
  for (ScenarioId id : {ScenarioId::simple, ScenarioId::complex, ScenarioId::simple_all}) {
    auto cfg = cfg_for(id, 120, 77);
    cfg.noise_variance = 0.0;
    auto [ds, truth] = generate(cfg);
    LearnerSpec spec;
    spec.kind = LearnerKind::oracle;
    spec.oracle = std::make_shared<OracleFunctions>(oracle_functions(cfg));
    const bool mediator = family_of(id) == ScenarioFamily::mediator;
    const EffectVector tau = mediator ? estimate_caite(ds, spec) : estimate_catte(ds, spec);
    const Vector& expected = mediator ? truth.true_tau_ite : truth.true_tau_tot;
    CHECK((tau.values - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("config validation rejects nonsense") {
  auto cfg = cfg_for(ScenarioId::simple);
  cfg.n = 2;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = cfg_for(ScenarioId::simple);
  cfg.d = 1;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  CHECK_THROWS_AS(parse_scenario("bogus"), ConfigError);
  CHECK_THROWS_AS(noise_variance_for_level("sideways"), ConfigError);
  CHECK(noise_variance_for_level("moderate") == 0.1);
  CHECK(noise_variance_for_level("0.25") == 0.25);
}

TEST_CASE("scenario names round-trip") {
  for (ScenarioId id : all_scenarios()) CHECK(parse_scenario(to_string(id)) == id);
}
