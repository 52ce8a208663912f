#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "medlearn/experiments.hpp"
#include "medlearn/rng.hpp"

#include <cstdio>
#include <fstream>

using namespace medlearn;

namespace {

// A light configuration the whole pipeline can run in milliseconds.
PipelineConfig small_pipeline(ScenarioId id) {
  PipelineConfig pipe;
  pipe.learner.kind = LearnerKind::cart;
  pipe.learner.cart = {-1, 20, 7};
  pipe.tsne.iterations = 250;
  pipe.tsne.exaggeration_iters = 100;
  pipe.tsne.momentum_switch_iter = 100;
  pipe.kmeans.restarts = 4;
  pipe.k_range = {2, 3};
  pipe.target = default_target(id);
  pipe.bootstrap_resamples = 99;
  return pipe;
}

ScenarioConfig small_scenario(ScenarioId id, Index n = 120, std::uint64_t seed = 5) {
  auto cfg = ScenarioConfig::for_scenario(id);
  cfg.n = n;
  cfg.d = 4;
  cfg.seed = seed;
  return cfg;
}

ReplicationReport fabricated_report(std::vector<ReplicationRecord> records) {
  ReplicationReport report;
  report.scenario = ScenarioConfig::for_scenario(ScenarioId::simple);
  report.replications = static_cast<int>(records.size());
  report.records = std::move(records);
  return report;
}

ReplicationRecord accepted_with(std::vector<std::string> covariates,
                                std::map<std::string, double> lower = {}) {
  ReplicationRecord record;
  record.decision = RunDecision::accepted;
  record.covariates = std::move(covariates);
  record.region_lower = std::move(lower);
  return record;
}

}  // namespace

TEST_CASE("replication runs are deterministic and job-count independent") {
  const auto cfg = small_scenario(ScenarioId::simple);
  auto pipe = small_pipeline(ScenarioId::simple);
  const auto a = run_replications(cfg, 3, pipe);
  const auto b = run_replications(cfg, 3, pipe);
  pipe.jobs = 3;
  const auto c = run_replications(cfg, 3, pipe);
  REQUIRE(a.records.size() == 3);
  for (size_t r = 0; r < 3; ++r) {
    CHECK(a.records[r].p_leaf == b.records[r].p_leaf);
    CHECK(a.records[r].p_leaf == c.records[r].p_leaf);
    CHECK(a.records[r].chosen_k == c.records[r].chosen_k);
    CHECK(a.records[r].seed == c.records[r].seed);
    CHECK(a.records[r].decision == RunDecision::undecided);
  }
}

TEST_CASE("decisions follow a supplied threshold and gate the covariates") {
  const auto cfg = small_scenario(ScenarioId::simple, 150, 7);
  const auto pipe = small_pipeline(ScenarioId::simple);
  CalibrationThreshold reject_all;
  reject_all.threshold = 0.0;  // alpha = 0: nothing ever accepted
  reject_all.alpha = 0.0;
  const auto report = run_replications(cfg, 2, pipe, &reject_all);
  for (const auto& record : report.records) {
    CHECK(record.decision == RunDecision::rejected);
    CHECK(record.covariates.empty());
    CHECK(record.region_size == 0);
  }
  const auto hits = hit_table(report);
  CHECK(hits.x1 == 0);
  CHECK(hits.both == 0);
  const auto bins = covariate_count_distribution(report);
  CHECK(bins[0] == 2);
}

TEST_CASE("accepted runs report covariates and a selected region") {
  const auto cfg = small_scenario(ScenarioId::simple, 200, 11);
  const auto pipe = small_pipeline(ScenarioId::simple);
  CalibrationThreshold accept_all;
  accept_all.threshold = 1.0;
  const auto report = run_replications(cfg, 1, pipe, &accept_all);
  const auto& record = report.records[0];
  CHECK(record.decision == RunDecision::accepted);
  CHECK_FALSE(record.covariates.empty());
  CHECK(record.region_size > 0);
  CHECK(record.region_indices.size() == static_cast<size_t>(record.region_size));
  CHECK(record.selected_leaf >= 1);
}

TEST_CASE("hit table counts covariate mentions in accepted runs") {
  auto report = fabricated_report({accepted_with({"x1"}), accepted_with({"x1", "x2"}),
                                   accepted_with({})});
  const auto hits = hit_table(report);
  CHECK(hits.x1 == 2);
  CHECK(hits.x2 == 1);
  CHECK(hits.both == 1);
  CHECK(hits.both <= std::min(hits.x1, hits.x2));
}

TEST_CASE("covariate histogram sums to the replication count") {
  ReplicationRecord rejected;
  rejected.decision = RunDecision::rejected;
  auto report = fabricated_report(
      {accepted_with({"x1"}), accepted_with({"x1", "x2", "x3", "x4", "x5", "x6", "x7"}),
       rejected});
  const auto bins = covariate_count_distribution(report);
  CHECK(bins[0] == 1);
  CHECK(bins[1] == 1);
  CHECK(bins[5] == 1);
  int total = 0;
  for (int b : bins) total += b;
  CHECK(total == report.replications);
}

TEST_CASE("ecdf is a right-continuous step function reaching one") {
  CHECK(ecdf({0.5}) == std::vector<std::pair<double, double>>{{0.5, 1.0}});
  const auto curve = ecdf({0.3, 0.1, 0.2});
  CHECK(curve.size() == 3);
  CHECK(curve[1].first == 0.2);
  CHECK(curve[1].second == doctest::Approx(2.0 / 3.0));
  CHECK(curve.back().second == 1.0);
  for (size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].first > curve[i - 1].first);
    CHECK(curve[i].second > curve[i - 1].second);
  }
  CHECK_THROWS_AS(ecdf({}), ValidationError);
}

TEST_CASE("threshold error substitutes one for unselected covariates") {
  ReplicationRecord rejected;
  rejected.decision = RunDecision::rejected;
  auto all_rejected = fabricated_report({rejected, rejected});
  auto err = threshold_error(all_rejected);
  CHECK(err["x1"].mean == 1.0);
  CHECK(err["x2"].mean == 1.0);

  auto perfect = fabricated_report({accepted_with({"x1", "x2"}, {{"x1", 0.0}, {"x2", 0.0}})});
  err = threshold_error(perfect);
  CHECK(err["x1"].mean == 0.0);
  CHECK(err["x2"].mean == 0.0);

  // Thresholds beyond one in magnitude clamp to one.
  auto wild = fabricated_report({accepted_with({"x1"}, {{"x1", -3.0}}),
                                 accepted_with({"x1"}, {{"x1", 0.5}})});
  err = threshold_error(wild);
  CHECK(err["x1"].mean == doctest::Approx((1.0 + 0.25) / 2.0));
  CHECK(err["x1"].mean >= 0.0);
  CHECK(err["x1"].mean <= 1.0);
}

TEST_CASE("mediation proportion is near one when all effect flows through the mediator") {
  auto cfg = ScenarioConfig::for_scenario(ScenarioId::simple_all);
  cfg.n = 4000;
  cfg.seed = 31;
  auto [ds, truth] = generate(cfg);
  std::vector<Index> region;
  double kappa_sum = 0.0;
  for (Index i = 0; i < ds.n(); ++i) {
    if (truth.region_indicator[static_cast<size_t>(i)]) {
      region.push_back(i);
      kappa_sum += truth.true_tau_ite[i];
    }
  }
  const auto est = mediation_proportion(ds, region, 30, 199, 9);
  CHECK(est.n_region == static_cast<Index>(region.size()));
  CHECK(est.med_prop_defined);
  CHECK(std::abs(est.med_prop - 1.0) <= 0.1);
  CHECK(std::abs(est.ite - kappa_sum / static_cast<double>(region.size())) <= 0.15);
  CHECK(est.p_ite < 0.05);
}

TEST_CASE("mediation analysis rejects degenerate regions") {
  auto cfg = ScenarioConfig::for_scenario(ScenarioId::simple_all);
  cfg.n = 200;
  cfg.seed = 32;
  auto [ds, truth] = generate(cfg);

  std::vector<Index> tiny{0, 1, 2};
  CHECK_THROWS_AS(mediation_proportion(ds, tiny, 30, 99, 0), ValidationError);

  std::vector<Index> single_arm;
  for (Index i = 0; i < ds.n() && single_arm.size() < 40; ++i) {
    if (ds.treatment()[static_cast<size_t>(i)] == 1) single_arm.push_back(i);
  }
  CHECK_THROWS_AS(mediation_proportion(ds, single_arm, 30, 99, 0), DegenerateArmError);
}

TEST_CASE("region comparison aggregates truth and selected regions") {
  const auto cfg = small_scenario(ScenarioId::simple_all, 250, 13);
  auto pipe = small_pipeline(ScenarioId::simple_all);
  pipe.evaluate_mediation = true;
  pipe.min_region = 20;
  CalibrationThreshold accept_all;
  accept_all.threshold = 1.0;
  const auto report = run_replications(cfg, 2, pipe, &accept_all);
  const auto cmp = region_comparison(report);
  CHECK(cmp.truth_count == 2);
  CHECK(cmp.truth_n_mean > 0.0);
  CHECK(cmp.selected_count >= 1);

  // Without mediation evaluation nothing aggregates.
  auto plain = small_pipeline(ScenarioId::simple_all);
  const auto empty_report = run_replications(cfg, 1, plain);
  const auto empty_cmp = region_comparison(empty_report);
  CHECK(empty_cmp.truth_count == 0);
  CHECK(empty_cmp.selected_count == 0);
}

TEST_CASE("oracle surfaces evaluate the closed forms") {
  SurfaceSpec spec;
  spec.lo = -1.0;
  spec.hi = 1.0;
  spec.step = 0.5;

  auto run_surface = [&](ScenarioId id) {
    auto cfg = ScenarioConfig::for_scenario(id);
    cfg.n = 80;
    cfg.d = 4;
    cfg.seed = 3;
    cfg.noise_variance = 0.0;
    PipelineConfig pipe = small_pipeline(id);
    pipe.learner.kind = LearnerKind::oracle;
    pipe.learner.oracle = std::make_shared<OracleFunctions>(oracle_functions(cfg));
    return effect_surface_grid(cfg, pipe, spec, 2);
  };

  const auto null_surface = run_surface(ScenarioId::null);
  for (const auto& point : null_surface) CHECK(point.mean_tau == 0.0);

  const auto global_surface = run_surface(ScenarioId::global);
  for (const auto& point : global_surface) {
    CHECK(point.mean_tau == doctest::Approx(1.0).epsilon(1e-12));
  }

  const auto simple_surface = run_surface(ScenarioId::simple);
  bool found = false;
  for (const auto& point : simple_surface) {
    if (point.cov1 == 1.0 && point.cov2 == 1.0) {
      CHECK(point.mean_tau == doctest::Approx(2.0).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("k-means baseline mode skips effect estimation deterministically") {
  const auto cfg = small_scenario(ScenarioId::simple, 150, 17);
  auto pipe = small_pipeline(ScenarioId::simple);
  pipe.baseline_on_covariates = true;
  const auto a = run_replications(cfg, 2, pipe);
  const auto b = run_replications(cfg, 2, pipe);
  for (size_t r = 0; r < 2; ++r) {
    CHECK(a.records[r].p_leaf == b.records[r].p_leaf);
    CHECK(a.records[r].chosen_k == b.records[r].chosen_k);
  }
}

TEST_CASE("effect-based discovery beats clustering raw covariates on simple data") {
  auto cfg = small_scenario(ScenarioId::simple, 400, 23);
  cfg.d = 6;
  auto pipe = small_pipeline(ScenarioId::simple);
  pipe.learner.kind = LearnerKind::gradient_boost;
  pipe.learner.boost.n_rounds = 60;
  pipe.k_range = {2, 4};
  CalibrationThreshold accept_all;
  accept_all.threshold = 1.0;

  const auto effect_report = run_replications(cfg, 8, pipe, &accept_all);
  pipe.baseline_on_covariates = true;
  const auto baseline_report = run_replications(cfg, 8, pipe, &accept_all);

  const auto effect_hits = hit_table(effect_report);
  const auto baseline_hits = hit_table(baseline_report);
  CHECK(effect_hits.both > baseline_hits.both);
  CHECK(effect_hits.both >= 6);
}

TEST_CASE("report files carry headers and rows") {
  const auto cfg = small_scenario(ScenarioId::simple, 120, 19);
  const auto pipe = small_pipeline(ScenarioId::simple);
  const auto report = run_replications(cfg, 2, pipe);

  write_replication_csv(report, "medlearn_test_reps.csv");
  {
    std::ifstream in("medlearn_test_reps.csv");
    std::string header, row;
    std::getline(in, header);
    CHECK(header.find("p_leaf") != std::string::npos);
    int rows = 0;
    while (std::getline(in, row)) rows += row.empty() ? 0 : 1;
    CHECK(rows == 2);
  }
  std::remove("medlearn_test_reps.csv");

  std::vector<double> pvalues{0.2, 0.4, 0.9};
  write_ecdf_svg({{"unit", ecdf(pvalues)}}, "test plot", "medlearn_test_plot.svg");
  {
    std::ifstream in("medlearn_test_plot.svg");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content.find("<svg") != std::string::npos);
    CHECK(content.find("polyline") != std::string::npos);
  }
  std::remove("medlearn_test_plot.svg");
}
