#include "medlearn/experiments.hpp"

#include "medlearn/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace medlearn {

LrtTarget default_target(ScenarioId id) {
  return family_of(id) == ScenarioFamily::mediator ? LrtTarget::mediator : LrtTarget::outcome;
}

PipelineResult run_pipeline(const Dataset& ds, const PipelineConfig& pipe, std::uint64_t seed) {
  PipelineResult result;

  const Matrix* points = nullptr;
  if (pipe.baseline_on_covariates) {
    points = &ds.covariates();
  } else {
    LearnerSpec spec = pipe.learner;
    spec.seed = seed;
    result.effects = pipe.target == LrtTarget::mediator ? estimate_caite(ds, spec)
                                                        : estimate_catte(ds, spec);
    const Matrix distances = distance_matrix(result.effects);
    result.embedding = project_tsne(distances, pipe.tsne, seed);
    points = &result.embedding.coords;
  }

  const std::vector<int> ks = candidate_ks(ds.dim(), pipe.k_range);
  std::vector<SubtypeTree> candidates;
  candidates.reserve(ks.size());
  for (int k : ks) {
    const ClusterAssignment labels =
        kmeans(*points, k, derive_seed(seed, static_cast<std::uint64_t>(k)), pipe.kmeans);
    candidates.push_back(fit_subtype_tree(ds.covariates(), labels, pipe.subtype, k));
  }
  result.selection = select_subtype(ds, std::move(candidates), pipe.target, pipe.coding);
  return result;
}

namespace {

struct OlsCoef {
  bool ok = false;
  double value = 0.0;
};

// Least-squares coefficient of the column `which` in [1, cols...].
OlsCoef design_coef(const Matrix& design, const Vector& y, Index which) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < design.cols()) return {false, 0.0};
  const Vector beta = qr.solve(y);
  return {true, beta[which]};
}

struct MediationFits {
  bool ok = false;
  double tte = 0.0;
  double a = 0.0;  // W -> M
  double b = 0.0;  // M -> Y given W, X
};

MediationFits fit_mediation(const Matrix& X, const Vector& w, const Vector& y, const Vector& m) {
  const Index n = X.rows();
  const Index d = X.cols();
  MediationFits out;

  Matrix base(n, d + 2);
  base.col(0).setOnes();
  base.col(1) = w;
  base.rightCols(d) = X;
  const OlsCoef tte = design_coef(base, y, 1);
  const OlsCoef a = design_coef(base, m, 1);

  Matrix with_m(n, d + 3);
  with_m.col(0).setOnes();
  with_m.col(1) = w;
  with_m.col(2) = m;
  with_m.rightCols(d) = X;
  const OlsCoef b = design_coef(with_m, y, 2);

  if (!tte.ok || !a.ok || !b.ok) return out;
  out.ok = true;
  out.tte = tte.value;
  out.a = a.value;
  out.b = b.value;
  return out;
}

// Two-sided percentile bootstrap p-value: how often the resampled statistic
// falls on either side of zero.
double bootstrap_pvalue(const std::vector<double>& stats) {
  if (stats.empty()) return 1.0;
  int below = 0, above = 0;
  for (double s : stats) {
    if (s <= 0.0) ++below;
    if (s >= 0.0) ++above;
  }
  const double p = 2.0 * static_cast<double>(std::min(below, above)) /
                   static_cast<double>(stats.size());
  return std::min(1.0, p);
}

}  // namespace

MediationEstimate mediation_proportion(const Dataset& ds, const std::vector<Index>& region,
                                       Index min_region, int resamples, std::uint64_t seed) {
  if (!ds.has_mediator()) throw ConfigError("mediation analysis needs a mediator column");
  const Index nr = static_cast<Index>(region.size());
  if (nr < min_region) {
    throw ValidationError("region has " + std::to_string(nr) + " units, minimum is " +
                          std::to_string(min_region));
  }

  Matrix X(nr, ds.dim());
  Vector w(nr), y(nr), m(nr);
  bool any_control = false, any_treated = false;
  for (Index i = 0; i < nr; ++i) {
    const Index row = region[static_cast<size_t>(i)];
    X.row(i) = ds.covariates().row(row);
    const int wi = ds.treatment()[static_cast<size_t>(row)];
    (wi == 0 ? any_control : any_treated) = true;
    w[i] = static_cast<double>(wi);
    y[i] = ds.outcome()[row];
    m[i] = ds.mediator()[row];
  }
  if (!any_control || !any_treated) throw DegenerateArmError("region contains a single arm");

  const MediationFits point = fit_mediation(X, w, y, m);
  if (!point.ok) throw NumericError("rank-deficient design in the mediation regressions");

  MediationEstimate est;
  est.n_region = nr;
  est.tte = point.tte;
  est.ite = point.a * point.b;
  if (std::abs(point.tte) < 1e-10) {
    est.med_prop_defined = false;
  } else {
    est.med_prop = est.ite / est.tte;
  }

  Rng rng(derive_seed(seed, rng_tag::bootstrap));
  std::vector<double> tte_stats, ite_stats, med_stats;
  tte_stats.reserve(static_cast<size_t>(resamples));
  Matrix Xb(nr, ds.dim());
  Vector wb(nr), yb(nr), mb(nr);
  for (int rep = 0; rep < resamples; ++rep) {
    bool has_control = false, has_treated = false;
    for (Index i = 0; i < nr; ++i) {
      const Index pick = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(nr)));
      Xb.row(i) = X.row(pick);
      wb[i] = w[pick];
      yb[i] = y[pick];
      mb[i] = m[pick];
      (wb[i] == 0.0 ? has_control : has_treated) = true;
    }
    if (!has_control || !has_treated) continue;
    const MediationFits fit = fit_mediation(Xb, wb, yb, mb);
    if (!fit.ok) continue;
    tte_stats.push_back(fit.tte);
    const double ite = fit.a * fit.b;
    ite_stats.push_back(ite);
    if (std::abs(fit.tte) >= 1e-10) med_stats.push_back(ite / fit.tte);
  }
  est.p_tte = bootstrap_pvalue(tte_stats);
  est.p_ite = bootstrap_pvalue(ite_stats);
  est.p_med = bootstrap_pvalue(med_stats);
  return est;
}

namespace {

std::vector<std::string> tree_covariates(const std::vector<LeafProfile>& profiles) {
  std::set<std::string> names;
  for (const auto& profile : profiles) {
    for (const auto& cond : profile.conditions) names.insert(cond.name);
  }
  return {names.begin(), names.end()};
}

std::vector<Index> leaf_units(const std::vector<int>& assignment, int subtype_id) {
  std::vector<Index> units;
  for (size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == subtype_id) units.push_back(static_cast<Index>(i));
  }
  return units;
}

bool region_eligible(const Dataset& ds, const std::vector<Index>& units, Index min_region) {
  if (static_cast<Index>(units.size()) < min_region) return false;
  bool any_control = false, any_treated = false;
  for (Index i : units) {
    (ds.treatment()[static_cast<size_t>(i)] == 0 ? any_control : any_treated) = true;
  }
  return any_control && any_treated;
}

ReplicationRecord run_one_replication(const ScenarioConfig& base, const PipelineConfig& pipe,
                                      const CalibrationThreshold* threshold, int rep) {
  ScenarioConfig cfg = base;
  cfg.seed = derive_seed(derive_seed(base.seed, rng_tag::replication), static_cast<std::uint64_t>(rep));

  ReplicationRecord record;
  record.rep = rep;
  record.seed = cfg.seed;

  auto [ds, truth] = generate(cfg);
  PipelineResult result = run_pipeline(ds, pipe, cfg.seed);
  if (threshold) decide(result.selection, *threshold);

  record.chosen_k = result.selection.tree.k_source;
  record.leaf_count = result.selection.lrt.leaf_count;
  record.p_leaf = result.selection.lrt.p_leaf;
  switch (result.selection.decision) {
    case SubtypeSelection::Decision::undecided: record.decision = RunDecision::undecided; break;
    case SubtypeSelection::Decision::accepted: record.decision = RunDecision::accepted; break;
    case SubtypeSelection::Decision::rejected: record.decision = RunDecision::rejected; break;
  }

  const bool mediation_mode = pipe.evaluate_mediation && ds.has_mediator();
  if (mediation_mode) {
    std::vector<Index> truth_units;
    for (size_t i = 0; i < truth.region_indicator.size(); ++i) {
      if (truth.region_indicator[i]) truth_units.push_back(static_cast<Index>(i));
    }
    record.truth_region_size = static_cast<Index>(truth_units.size());
    if (region_eligible(ds, truth_units, pipe.min_region)) {
      record.truth_mediation =
          mediation_proportion(ds, truth_units, pipe.min_region, pipe.bootstrap_resamples,
                               derive_seed(cfg.seed, 0xffffu));
      record.has_truth_mediation = true;
    }
  }

  // Rejected runs report nothing (zero-covariate convention); undecided
  // runs keep their would-be selection so calibration batches stay cheap to
  // inspect.
  if (record.decision == RunDecision::rejected) return record;

  const auto profiles = extract_leaf_profiles(result.selection.tree, ds);
  record.covariates = tree_covariates(profiles);

  // Pick the subtype with the most significant effect.
  const auto& assignment = result.selection.tree.train_assignment;
  int best_leaf = 0;
  std::vector<Index> best_units;
  if (mediation_mode) {
    double best_p = std::numeric_limits<double>::infinity();
    for (const auto& leaf : result.selection.tree.leaves) {
      auto units = leaf_units(assignment, leaf.subtype_id);
      if (!region_eligible(ds, units, pipe.min_region)) continue;
      MediationEstimate est =
          mediation_proportion(ds, units, pipe.min_region, pipe.bootstrap_resamples,
                               derive_seed(cfg.seed, static_cast<std::uint64_t>(leaf.subtype_id)));
      if (est.p_med < best_p) {
        best_p = est.p_med;
        best_leaf = leaf.subtype_id;
        best_units = std::move(units);
        record.selected_mediation = est;
        record.has_selected_mediation = true;
      }
    }
  } else if (result.effects.values.size() > 0) {
    double best_score = -1.0;
    for (const auto& leaf : result.selection.tree.leaves) {
      auto units = leaf_units(assignment, leaf.subtype_id);
      if (units.empty()) continue;
      double mean = 0.0;
      for (Index i : units) mean += result.effects.values[i];
      mean /= static_cast<double>(units.size());
      if (std::abs(mean) > best_score) {
        best_score = std::abs(mean);
        best_leaf = leaf.subtype_id;
        best_units = std::move(units);
      }
    }
  }

  if (best_leaf > 0) {
    record.selected_leaf = best_leaf;
    record.region_size = static_cast<Index>(best_units.size());
    record.region_indices = std::move(best_units);
    for (const auto& profile : profiles) {
      if (profile.subtype_id != best_leaf) continue;
      for (const auto& cond : profile.conditions) {
        if (cond.kind == ConditionKind::interval && cond.has_lower) {
          record.region_lower[cond.name] = cond.lower;
        }
      }
    }
  }
  return record;
}

}  // namespace

ReplicationReport run_replications(const ScenarioConfig& cfg, int replications,
                                   const PipelineConfig& pipe,
                                   const CalibrationThreshold* threshold) {
  if (replications < 1) throw ConfigError("replication count must be >= 1");

  ReplicationReport report;
  report.scenario = cfg;
  report.replications = replications;
  report.records.resize(static_cast<size_t>(replications));

  const int jobs = std::max(1, pipe.jobs);
  if (jobs == 1) {
    for (int rep = 0; rep < replications; ++rep) {
      report.records[static_cast<size_t>(rep)] = run_one_replication(cfg, pipe, threshold, rep);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= replications) return;
          try {
            report.records[static_cast<size_t>(rep)] = run_one_replication(cfg, pipe, threshold, rep);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
  }
  return report;
}

HitCounts hit_table(const ReplicationReport& report, const std::string& first,
                    const std::string& second) {
  HitCounts hits;
  for (const auto& record : report.records) {
    if (record.decision != RunDecision::accepted) continue;
    const bool has_first =
        std::find(record.covariates.begin(), record.covariates.end(), first) != record.covariates.end();
    const bool has_second =
        std::find(record.covariates.begin(), record.covariates.end(), second) != record.covariates.end();
    hits.x1 += has_first ? 1 : 0;
    hits.x2 += has_second ? 1 : 0;
    hits.both += (has_first && has_second) ? 1 : 0;
  }
  return hits;
}

std::array<int, 6> covariate_count_distribution(const ReplicationReport& report) {
  std::array<int, 6> bins{};
  for (const auto& record : report.records) {
    const size_t count =
        record.decision == RunDecision::accepted ? record.covariates.size() : 0;
    bins[std::min<size_t>(count, 5)] += 1;
  }
  return bins;
}

std::vector<std::pair<double, double>> ecdf(std::vector<double> values) {
  if (values.empty()) throw ValidationError("ecdf needs at least one value");
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> curve;
  const double n = static_cast<double>(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    curve.emplace_back(values[i], static_cast<double>(i + 1) / n);
  }
  return curve;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace

std::map<std::string, ThresholdErrorSummary> threshold_error(
    const ReplicationReport& report, const std::vector<std::string>& covariates) {
  std::map<std::string, ThresholdErrorSummary> out;
  for (const auto& name : covariates) {
    std::vector<double> errors;
    for (const auto& record : report.records) {
      double value = 1.0;  // substituted when unselected or out of range
      if (record.decision == RunDecision::accepted) {
        auto it = record.region_lower.find(name);
        if (it != record.region_lower.end()) {
          value = std::min(it->second * it->second, 1.0);
        }
      }
      errors.push_back(value);
    }
    const auto [mean, sd] = mean_sd(errors);
    out[name] = {mean, sd};
  }
  return out;
}

RegionComparison region_comparison(const ReplicationReport& report) {
  RegionComparison cmp;
  std::vector<double> truth_n, truth_med, sel_n, sel_med;
  for (const auto& record : report.records) {
    if (record.has_truth_mediation) {
      truth_n.push_back(static_cast<double>(record.truth_region_size));
      if (record.truth_mediation.med_prop_defined) {
        truth_med.push_back(record.truth_mediation.med_prop);
      }
    }
    if (record.has_selected_mediation) {
      sel_n.push_back(static_cast<double>(record.region_size));
      if (record.selected_mediation.med_prop_defined) {
        sel_med.push_back(record.selected_mediation.med_prop);
      }
    }
  }
  cmp.truth_count = static_cast<int>(truth_n.size());
  std::tie(cmp.truth_n_mean, cmp.truth_n_sd) = mean_sd(truth_n);
  std::tie(cmp.truth_med_mean, cmp.truth_med_sd) = mean_sd(truth_med);
  cmp.selected_count = static_cast<int>(sel_n.size());
  std::tie(cmp.selected_n_mean, cmp.selected_n_sd) = mean_sd(sel_n);
  std::tie(cmp.selected_med_mean, cmp.selected_med_sd) = mean_sd(sel_med);
  return cmp;
}

std::vector<SurfacePoint> effect_surface_grid(const ScenarioConfig& cfg, const PipelineConfig& pipe,
                                              const SurfaceSpec& spec, int replications) {
  if (replications < 1) throw ConfigError("replication count must be >= 1");
  if (spec.step <= 0.0 || spec.hi < spec.lo) throw ConfigError("bad surface grid spec");

  std::vector<double> axis;
  for (double v = spec.lo; v <= spec.hi + 1e-12; v += spec.step) axis.push_back(v);
  const size_t grid_n = axis.size() * axis.size();

  std::vector<SurfacePoint> surface(grid_n);
  {
    size_t p = 0;
    for (double v1 : axis) {
      for (double v2 : axis) {
        surface[p].cov1 = v1;
        surface[p].cov2 = v2;
        ++p;
      }
    }
  }

  const bool mediator = family_of(cfg.id) == ScenarioFamily::mediator;
  for (int rep = 0; rep < replications; ++rep) {
    ScenarioConfig rep_cfg = cfg;
    rep_cfg.seed = derive_seed(derive_seed(cfg.seed, rng_tag::replication), static_cast<std::uint64_t>(rep));
    auto [ds, truth] = generate(rep_cfg);

    LearnerSpec spec = pipe.learner;
    spec.seed = rep_cfg.seed;

    // Grid covariates: cov1/cov2 swept, the rest drawn fresh per point.
    Rng grid_rng(derive_seed(rep_cfg.seed, rng_tag::grid));
    Matrix grid(static_cast<Index>(grid_n), ds.dim());
    for (Index i = 0; i < grid.rows(); ++i) {
      grid(i, 0) = surface[static_cast<size_t>(i)].cov1;
      grid(i, 1) = surface[static_cast<size_t>(i)].cov2;
      for (Index j = 2; j < ds.dim(); ++j) grid(i, j) = grid_rng.normal();
    }

    Vector tau(grid.rows());
    if (!mediator) {
      auto [control, treated] = split_by_treatment(ds);
      const auto g0 = fit_model(control.covariates(), control.outcome(), spec, ModelRole::outcome_control);
      const auto g1 = fit_model(treated.covariates(), treated.outcome(), spec, ModelRole::outcome_treated);
      tau = g1->predict(grid) - g0->predict(grid);
    } else {
      auto [control, treated] = split_by_treatment(ds);
      const auto gm1 = fit_model(treated.covariates(), treated.mediator(), spec, ModelRole::mediator_treated);
      const auto gm0 = fit_model(control.covariates(), control.mediator(), spec, ModelRole::mediator_control);
      Matrix txm(treated.size(), ds.dim() + 1);
      txm.leftCols(ds.dim()) = treated.covariates();
      txm.col(ds.dim()) = treated.mediator();
      const auto gy1 = fit_model(txm, treated.outcome(), spec, ModelRole::outcome_given_mediator);

      Matrix gxm(grid.rows(), ds.dim() + 1);
      gxm.leftCols(ds.dim()) = grid;
      gxm.col(ds.dim()) = gm1->predict(grid);
      const Vector hi = gy1->predict(gxm);
      gxm.col(ds.dim()) = gm0->predict(grid);
      tau = hi - gy1->predict(gxm);
    }

    for (size_t p = 0; p < grid_n; ++p) surface[p].mean_tau += tau[static_cast<Index>(p)];
  }

  for (auto& point : surface) point.mean_tau /= static_cast<double>(replications);
  return surface;
}

}  // namespace medlearn
