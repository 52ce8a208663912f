#include "medlearn/calibration.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace medlearn {

LrtTarget parse_target(const std::string& name) {
  if (name == "outcome") return LrtTarget::outcome;
  if (name == "mediator") return LrtTarget::mediator;
  throw ConfigError("unknown target '" + name + "'");
}

std::string to_string(LrtTarget target) {
  return target == LrtTarget::outcome ? "outcome" : "mediator";
}

double chi_squared_upper_tail(double x, int df) {
  if (df <= 0) return 1.0;
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(df) / 2.0, x / 2.0);
}

namespace {

struct OlsFit {
  Vector beta;
  double rss = 0.0;
  int rank = 0;
};

OlsFit ols(const Matrix& design, const Vector& y) {
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  OlsFit fit;
  fit.rank = static_cast<int>(qr.rank());
  fit.beta = qr.solve(y);
  fit.rss = (y - design * fit.beta).squaredNorm();
  return fit;
}

// Gaussian log likelihood at the MLE variance RSS/n.
double gaussian_loglik(double rss, Index n) {
  const double sigma2 = std::max(rss / static_cast<double>(n), 1e-300);
  return -0.5 * static_cast<double>(n) * (std::log(2.0 * M_PI * sigma2) + 1.0);
}

}  // namespace

LrtResult p_leaf_test(const Dataset& ds, const std::vector<int>& leaf_ids, LrtTarget target,
                      LeafCoding coding) {
  const Index n = ds.n();
  if (static_cast<Index>(leaf_ids.size()) != n) throw ValidationError("leaf id count != n");
  if (target == LrtTarget::mediator && !ds.has_mediator()) {
    throw ConfigError("mediator target requested but the dataset has none");
  }
  const Vector& y = target == LrtTarget::mediator ? ds.mediator() : ds.outcome();

  std::set<int> levels_set(leaf_ids.begin(), leaf_ids.end());
  const std::vector<int> levels(levels_set.begin(), levels_set.end());
  const int L = static_cast<int>(levels.size());

  LrtResult result;
  result.leaf_count = L;
  if (L < 2) return result;  // degenerate tree: p_leaf = 1 by convention

  Vector w(n);
  for (Index i = 0; i < n; ++i) w[i] = static_cast<double>(ds.treatment()[static_cast<size_t>(i)]);

  Matrix reduced, full;
  if (coding == LeafCoding::categorical) {
    // Intercept + (L-1) leaf dummies + W; the full model adds the
    // (L-1)-column leaf:W interaction block.
    const int p0 = 1 + (L - 1) + 1;
    reduced.resize(n, p0);
    full.resize(n, p0 + (L - 1));
    reduced.col(0).setOnes();
    for (int l = 1; l < L; ++l) {
      for (Index i = 0; i < n; ++i) {
        reduced(i, l) = leaf_ids[static_cast<size_t>(i)] == levels[static_cast<size_t>(l)] ? 1.0 : 0.0;
      }
    }
    reduced.col(p0 - 1) = w;
    full.leftCols(p0) = reduced;
    for (int l = 1; l < L; ++l) {
      full.col(p0 + l - 1) = reduced.col(l).cwiseProduct(w);
    }
  } else {
    Vector leaf(n);
    for (Index i = 0; i < n; ++i) leaf[i] = static_cast<double>(leaf_ids[static_cast<size_t>(i)]);
    reduced.resize(n, 3);
    reduced.col(0).setOnes();
    reduced.col(1) = leaf;
    reduced.col(2) = w;
    full.resize(n, 4);
    full.leftCols(3) = reduced;
    full.col(3) = leaf.cwiseProduct(w);
  }

  const OlsFit fit0 = ols(reduced, y);
  const OlsFit fit1 = ols(full, y);

  result.beta_reduced = fit0.beta;
  result.beta_full = fit1.beta;
  result.logL0 = gaussian_loglik(fit0.rss, n);
  result.logL1 = gaussian_loglik(std::min(fit1.rss, fit0.rss), n);
  result.statistic = std::max(0.0, 2.0 * (result.logL1 - result.logL0));

  const int nominal_df = coding == LeafCoding::categorical ? L - 1 : 1;
  result.df = fit1.rank - fit0.rank;
  result.rank_deficient = result.df < nominal_df;
  if (result.df <= 0) {
    result.df = 0;
    result.p_leaf = 1.0;
    return result;
  }
  result.p_leaf = chi_squared_upper_tail(result.statistic, result.df);
  return result;
}

SubtypeSelection select_subtype(const Dataset& ds, std::vector<SubtypeTree> candidates,
                                LrtTarget target, LeafCoding coding) {
  if (candidates.empty()) throw ConfigError("no candidate subtypings");

  SubtypeSelection selection;
  std::vector<LrtResult> results;
  results.reserve(candidates.size());
  size_t best = 0;
  for (size_t c = 0; c < candidates.size(); ++c) {
    LrtResult res = p_leaf_test(ds, candidates[c].train_assignment, target, coding);
    selection.per_k.push_back({candidates[c].k_source, res.leaf_count, res.p_leaf});
    results.push_back(std::move(res));
    if (c == 0) continue;
    const auto& cur = selection.per_k[c];
    const auto& win = selection.per_k[best];
    if (cur.p_leaf < win.p_leaf ||
        (cur.p_leaf == win.p_leaf &&
         (cur.k < win.k || (cur.k == win.k && cur.leaf_count < win.leaf_count)))) {
      best = c;
    }
  }
  selection.tree = std::move(candidates[best]);
  selection.lrt = std::move(results[best]);
  return selection;
}

CalibrationThreshold calibrate_threshold(std::vector<double> null_ps, double alpha,
                                         const std::string& scenario,
                                         std::vector<std::uint64_t> seeds) {
  if (null_ps.size() < 20) {
    throw ConfigError("calibration needs at least 20 null replications, got " +
                      std::to_string(null_ps.size()));
  }
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
  for (double p : null_ps) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("null p-value outside [0, 1]");
  }

  CalibrationThreshold thr;
  thr.alpha = alpha;
  thr.scenario = scenario;
  thr.seeds = std::move(seeds);

  std::vector<double> sorted = null_ps;
  std::sort(sorted.begin(), sorted.end());
  const auto r = static_cast<size_t>(std::floor(alpha * static_cast<double>(sorted.size())));
  thr.threshold = r >= 1 ? sorted[r - 1] : 0.0;
  if (thr.threshold >= 1.0) {
    // Null support is degenerate at 1; accepting at 1 would accept
    // everything, so fall back to the nominal level.
    thr.threshold = alpha;
    thr.degenerate_support = true;
  }
  thr.null_pvalues = std::move(null_ps);
  return thr;
}

void decide(SubtypeSelection& selection, const CalibrationThreshold& threshold) {
  selection.threshold_used = threshold.threshold;
  selection.decision = selection.lrt.p_leaf <= threshold.threshold
                           ? SubtypeSelection::Decision::accepted
                           : SubtypeSelection::Decision::rejected;
}

void save_threshold(const CalibrationThreshold& thr, const std::string& path) {
  nlohmann::json j;
  j["alpha"] = thr.alpha;
  j["threshold"] = thr.threshold;
  j["replications"] = thr.null_pvalues.size();
  j["null_pvalues"] = thr.null_pvalues;
  j["scenario"] = thr.scenario;
  j["seeds"] = thr.seeds;
  j["degenerate_support"] = thr.degenerate_support;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

CalibrationThreshold load_threshold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("bad threshold file '" + path + "': " + e.what());
  }
  CalibrationThreshold thr;
  try {
    thr.alpha = j.at("alpha").get<double>();
    thr.threshold = j.at("threshold").get<double>();
    thr.null_pvalues = j.value("null_pvalues", std::vector<double>{});
    thr.scenario = j.value("scenario", std::string{});
    thr.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    thr.degenerate_support = j.value("degenerate_support", false);
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("bad threshold file '" + path + "': " + e.what());
  }
  return thr;
}

}  // namespace medlearn
