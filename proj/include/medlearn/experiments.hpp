#pragma once

#include "medlearn/calibration.hpp"
#include "medlearn/simulation.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace medlearn {

// Everything one pass over one dataset needs: learner, projection,
// clustering, candidate trees and the LRT. `target` selects both the
// estimated effect (total vs indirect) and the LRT target variable.
struct PipelineConfig {
  LearnerSpec learner;
  TsneParams tsne;
  KmeansParams kmeans;
  SubtypeParams subtype;
  std::optional<std::pair<int, int>> k_range;  // default: candidate_ks(d)
  LrtTarget target = LrtTarget::outcome;
  // The scalar coding keeps the leaf id as one numeric regressor. Leaf ids
  // are numbered by covariate-space position, not by effect level, so under
  // the null its single interaction column stays clean of the selection
  // pressure that inflates the per-leaf dummy block; see the calibration
  // tests for both codings.
  LeafCoding coding = LeafCoding::scalar;
  bool baseline_on_covariates = false;  // cluster X directly, skip effects + projection
  bool evaluate_mediation = false;      // per-leaf mediation stats on mediator data
  Index min_region = 30;
  int bootstrap_resamples = 499;
  int jobs = 1;
};

LrtTarget default_target(ScenarioId id);

struct PipelineResult {
  EffectVector effects;  // empty in baseline mode
  Embedding embedding;   // empty in baseline mode
  SubtypeSelection selection;
};

PipelineResult run_pipeline(const Dataset& ds, const PipelineConfig& pipe, std::uint64_t seed);

// Product-of-coefficients mediation estimate inside one region, with
// nonparametric bootstrap percentile p-values.
struct MediationEstimate {
  double tte = 0.0;
  double ite = 0.0;
  double med_prop = 0.0;
  double p_tte = 1.0;
  double p_ite = 1.0;
  double p_med = 1.0;
  Index n_region = 0;
  bool med_prop_defined = true;  // false when |tte| is numerically zero
};

MediationEstimate mediation_proportion(const Dataset& ds, const std::vector<Index>& region,
                                       Index min_region, int resamples, std::uint64_t seed);

enum class RunDecision { undecided, accepted, rejected };

struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  RunDecision decision = RunDecision::undecided;
  int chosen_k = 0;
  int leaf_count = 0;
  double p_leaf = 1.0;
  std::vector<std::string> covariates;  // names in the accepted tree; empty if rejected

  // Heterogeneous region read from the accepted tree: the leaf with the
  // most significant effect (largest |mean tau| without a mediator, lowest
  // mediation p-value with one).
  int selected_leaf = 0;
  Index region_size = 0;
  std::vector<Index> region_indices;
  std::map<std::string, double> region_lower;  // covariate -> lower bound

  bool has_selected_mediation = false;
  MediationEstimate selected_mediation;
  bool has_truth_mediation = false;
  MediationEstimate truth_mediation;
  Index truth_region_size = 0;
};

struct ReplicationReport {
  ScenarioConfig scenario;  // seed = master seed
  int replications = 0;
  std::vector<ReplicationRecord> records;
};

// Generate -> estimate -> discover -> select (-> decide when a threshold is
// given) for R replications. Replication r runs on its own seed stream, so
// results do not depend on `jobs`.
ReplicationReport run_replications(const ScenarioConfig& cfg, int replications,
                                   const PipelineConfig& pipe,
                                   const CalibrationThreshold* threshold = nullptr);

struct HitCounts {
  int x1 = 0;
  int x2 = 0;
  int both = 0;
};

HitCounts hit_table(const ReplicationReport& report, const std::string& first = "x1",
                    const std::string& second = "x2");

// Bins 0,1,2,3,4,>=5 over the number of covariates in accepted trees.
std::array<int, 6> covariate_count_distribution(const ReplicationReport& report);

// Right-continuous ECDF evaluation points: sorted unique values with F(p).
std::vector<std::pair<double, double>> ecdf(std::vector<double> values);

struct ThresholdErrorSummary {
  double mean = 1.0;
  double sd = 0.0;
};

// Squared lower-threshold error per covariate against the true boundary at
// zero; unselected covariates and |thresholds| beyond 1 count as 1.
std::map<std::string, ThresholdErrorSummary> threshold_error(
    const ReplicationReport& report, const std::vector<std::string>& covariates = {"x1", "x2"});

struct RegionComparison {
  int truth_count = 0;
  double truth_n_mean = 0.0, truth_n_sd = 0.0;
  double truth_med_mean = 0.0, truth_med_sd = 0.0;
  int selected_count = 0;
  double selected_n_mean = 0.0, selected_n_sd = 0.0;
  double selected_med_mean = 0.0, selected_med_sd = 0.0;
};

RegionComparison region_comparison(const ReplicationReport& report);

// Mean estimated effect over R replications on a cov1 x cov2 grid, the
// remaining covariates drawn standard normal.
struct SurfaceSpec {
  double lo = -1.5;
  double hi = 1.5;
  double step = 0.05;
};

struct SurfacePoint {
  double cov1 = 0.0;
  double cov2 = 0.0;
  double mean_tau = 0.0;
};

std::vector<SurfacePoint> effect_surface_grid(const ScenarioConfig& cfg, const PipelineConfig& pipe,
                                              const SurfaceSpec& spec, int replications);

// Report artifacts.
void write_replication_csv(const ReplicationReport& report, const std::string& path);
void write_hit_table_csv(const HitCounts& hits, int replications, const std::string& path);
void write_covariate_distribution_csv(const std::array<int, 6>& bins, const std::string& path);
void write_ecdf_csv(const std::vector<std::pair<double, double>>& curve, const std::string& path);
void write_region_comparison_csv(const RegionComparison& cmp, const std::string& path);
void write_surface_csv(const std::vector<SurfacePoint>& surface, const std::string& path);

// Self-contained SVG step plot of one or more ECDF curves.
void write_ecdf_svg(const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& curves,
                    const std::string& title, const std::string& path);

}  // namespace medlearn
