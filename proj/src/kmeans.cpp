#include "medlearn/discovery.hpp"
#include "medlearn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace medlearn {

namespace {

double sq_dist(const Matrix& pts, Index i, const Matrix& centers, int c) {
  double d2 = 0.0;
  for (Index k = 0; k < pts.cols(); ++k) {
    const double diff = pts(i, k) - centers(c, k);
    d2 += diff * diff;
  }
  return d2;
}

Matrix kmeanspp_init(const Matrix& pts, int k, Rng& rng) {
  const Index n = pts.rows();
  Matrix centers(k, pts.cols());
  std::vector<double> nearest(static_cast<size_t>(n), std::numeric_limits<double>::infinity());

  Index first = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  centers.row(0) = pts.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      nearest[static_cast<size_t>(i)] =
          std::min(nearest[static_cast<size_t>(i)], sq_dist(pts, i, centers, c - 1));
      total += nearest[static_cast<size_t>(i)];
    }
    Index pick;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        cum += nearest[static_cast<size_t>(i)];
        if (cum >= target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining mass is zero (duplicate points); any point will do.
      pick = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    }
    centers.row(c) = pts.row(pick);
  }
  return centers;
}

struct LloydResult {
  std::vector<int> labels;  // 0-based
  double inertia = 0.0;
};

struct Partition {
  std::vector<int> labels;
  std::vector<Index> counts;
  Matrix sums;
};

// Nearest-center assignment (ties to the lowest index) with empty clusters
// repaired by promoting the point farthest from its own centroid.
void assign_points(const Matrix& pts, const Matrix& centers, int k, Partition& part) {
  const Index n = pts.rows();
  part.labels.assign(static_cast<size_t>(n), 0);
  part.counts.assign(static_cast<size_t>(k), 0);
  part.sums = Matrix::Zero(k, pts.cols());
  for (Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = sq_dist(pts, i, centers, 0);
    for (int c = 1; c < k; ++c) {
      const double d2 = sq_dist(pts, i, centers, c);
      if (d2 < best_d) {
        best_d = d2;
        best = c;
      }
    }
    part.labels[static_cast<size_t>(i)] = best;
    ++part.counts[static_cast<size_t>(best)];
    part.sums.row(best) += pts.row(i);
  }
  for (int c = 0; c < k; ++c) {
    if (part.counts[static_cast<size_t>(c)] > 0) continue;
    Index far = 0;
    double far_d = -1.0;
    for (Index i = 0; i < n; ++i) {
      const int lab = part.labels[static_cast<size_t>(i)];
      if (part.counts[static_cast<size_t>(lab)] <= 1) continue;
      const double d2 = sq_dist(pts, i, centers, lab);
      if (d2 > far_d) {
        far_d = d2;
        far = i;
      }
    }
    const int old = part.labels[static_cast<size_t>(far)];
    part.sums.row(old) -= pts.row(far);
    --part.counts[static_cast<size_t>(old)];
    part.sums.row(c) = pts.row(far);
    part.counts[static_cast<size_t>(c)] = 1;
    part.labels[static_cast<size_t>(far)] = c;
  }
}

LloydResult lloyd(const Matrix& pts, int k, Rng& rng, const KmeansParams& params) {
  const Index n = pts.rows();
  Matrix centers = kmeanspp_init(pts, k, rng);
  Partition part;

  for (int iter = 0; iter < params.max_iters; ++iter) {
    assign_points(pts, centers, k, part);
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      const Eigen::RowVectorXd next =
          part.sums.row(c) / static_cast<double>(part.counts[static_cast<size_t>(c)]);
      shift = std::max(shift, (next - centers.row(c)).norm());
      centers.row(c) = next;
    }
    if (shift < params.tol) break;
  }
  assign_points(pts, centers, k, part);
  for (int c = 0; c < k; ++c) {
    centers.row(c) = part.sums.row(c) / static_cast<double>(part.counts[static_cast<size_t>(c)]);
  }

  // Single-point exchange refinement: move a point when the exact objective
  // change (including both centroid shifts) is negative. Escapes Lloyd
  // fixed points that are not global optima on small instances.
  for (int pass = 0; pass < 100; ++pass) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const int s = part.labels[static_cast<size_t>(i)];
      const Index ns = part.counts[static_cast<size_t>(s)];
      if (ns <= 1) continue;
      const double remove_gain = static_cast<double>(ns) / static_cast<double>(ns - 1) *
                                 sq_dist(pts, i, centers, s);
      int best_t = -1;
      double best_delta = -1e-12;
      for (int t = 0; t < k; ++t) {
        if (t == s) continue;
        const Index nt = part.counts[static_cast<size_t>(t)];
        const double add_cost = static_cast<double>(nt) / static_cast<double>(nt + 1) *
                                sq_dist(pts, i, centers, t);
        const double delta = add_cost - remove_gain;
        if (delta < best_delta) {
          best_delta = delta;
          best_t = t;
        }
      }
      if (best_t < 0) continue;
      part.sums.row(s) -= pts.row(i);
      part.sums.row(best_t) += pts.row(i);
      --part.counts[static_cast<size_t>(s)];
      ++part.counts[static_cast<size_t>(best_t)];
      part.labels[static_cast<size_t>(i)] = best_t;
      centers.row(s) = part.sums.row(s) / static_cast<double>(part.counts[static_cast<size_t>(s)]);
      centers.row(best_t) =
          part.sums.row(best_t) / static_cast<double>(part.counts[static_cast<size_t>(best_t)]);
      changed = true;
    }
    if (!changed) break;
  }

  LloydResult result;
  result.labels = part.labels;
  for (Index i = 0; i < n; ++i) {
    result.inertia += sq_dist(pts, i, centers, part.labels[static_cast<size_t>(i)]);
  }
  return result;
}

}  // namespace

ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed,
                         const KmeansParams& params) {
  const Index n = points.rows();
  if (k < 2) throw ConfigError("k must be >= 2");
  if (static_cast<Index>(k) > n) throw ConfigError("k exceeds the number of points");
  if (!points.allFinite()) throw NumericError("non-finite point coordinates");

  const std::uint64_t base = derive_seed(seed, rng_tag::kmeans);
  LloydResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, params.restarts); ++r) {
    Rng rng(derive_seed(base, static_cast<std::uint64_t>(r)));
    LloydResult result = lloyd(points, k, rng, params);
    if (result.inertia < best.inertia) best = std::move(result);
  }

  // The final assignment can leave a cluster empty on degenerate inputs;
  // relabel to the compacted set so every label 1..k' is populated.
  std::vector<Index> counts(static_cast<size_t>(k), 0);
  for (int lab : best.labels) ++counts[static_cast<size_t>(lab)];
  std::vector<int> remap(static_cast<size_t>(k), -1);
  int next_label = 1;
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] > 0) remap[static_cast<size_t>(c)] = next_label++;
  }

  ClusterAssignment out;
  out.k = next_label - 1;
  out.inertia = best.inertia;
  out.labels.resize(best.labels.size());
  for (size_t i = 0; i < best.labels.size(); ++i) {
    out.labels[i] = remap[static_cast<size_t>(best.labels[i])];
  }
  return out;
}

std::vector<int> candidate_ks(Index d, std::optional<std::pair<int, int>> override) {
  if (d < 1) throw ConfigError("covariate count must be >= 1");
  int lo = 2;
  int hi = static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))) + 2;
  if (override) {
    lo = override->first;
    hi = override->second;
    if (lo < 2) throw ConfigError("cluster range must start at 2 or above");
    if (hi < lo) throw ConfigError("empty cluster range");
  }
  std::vector<int> ks;
  for (int k = lo; k <= hi; ++k) ks.push_back(k);
  return ks;
}

}  // namespace medlearn
