#include "medlearn/discovery.hpp"
#include "medlearn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace medlearn {

Matrix distance_matrix(const EffectVector& tau) {
  const Index n = tau.values.size();
  if (n < 2) throw ValidationError("distance matrix needs at least two units");
  Matrix d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double diff = tau.values[i] - tau.values[j];
      d(i, j) = diff * diff;
      d(j, i) = d(i, j);
    }
  }
  return d;
}

namespace {

// Per-point precision calibration: bisect beta until the conditional
// distribution p(.|i) = exp(-beta * D_i.) has the target perplexity. Rows
// with (numerically) constant distances get uniform affinities, matching
// the beta -> 0 limit.
void calibrate_row(const double* dist, Index n, Index i, double log_perp, double* p_row) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double beta = 1.0;

  double min_d = std::numeric_limits<double>::infinity();
  double max_d = -std::numeric_limits<double>::infinity();
  Index min_count = 0;
  for (Index j = 0; j < n; ++j) {
    if (j == i) continue;
    if (dist[j] < min_d) {
      min_d = dist[j];
      min_count = 1;
    } else if (dist[j] == min_d) {
      ++min_count;
    }
    max_d = std::max(max_d, dist[j]);
  }
  // The row entropy decreases from log(n-1) to log(#nearest ties) as beta
  // grows. When the target sits below that floor (discrete effects tie many
  // distances) the bisection cannot converge; use its limit, the uniform
  // distribution over the nearest ties.
  if (!(max_d - min_d > 1e-300) || std::log(static_cast<double>(min_count)) >= log_perp) {
    for (Index j = 0; j < n; ++j) {
      p_row[j] = (j != i && dist[j] == min_d) ? 1.0 / static_cast<double>(min_count) : 0.0;
    }
    return;
  }

  double sum_p = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    sum_p = 0.0;
    double sum_dp = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) {
        p_row[j] = 0.0;
        continue;
      }
      // Shift by min_d: rescales every weight by a constant, so the
      // normalized row is unchanged but exp never overflows to all-zero.
      const double w = std::exp(-beta * (dist[j] - min_d));
      p_row[j] = w;
      sum_p += w;
      sum_dp += dist[j] * w;
    }
    const double entropy = std::log(sum_p) + beta * (sum_dp / sum_p - min_d);
    const double diff = entropy - log_perp;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0.0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = std::isinf(lo) ? beta * 0.5 : 0.5 * (beta + lo);
    }
  }
  if (!(sum_p > 0.0) || !std::isfinite(sum_p)) {
    throw NumericError("perplexity calibration failed for point " + std::to_string(i));
  }
  for (Index j = 0; j < n; ++j) p_row[j] /= sum_p;
}

// Four-lane reduction with a fixed summation tree. The lane structure is
// what lets the compiler vectorize; the order of additions is part of the
// function's definition, so results do not depend on optimization level.
inline double dot_lanes(const double* a, const double* b, int m) {
  double acc[4] = {};
  const int full = m - m % 4;
  for (int t = 0; t < full; t += 4) {
    for (int l = 0; l < 4; ++l) acc[l] += a[t + l] * b[t + l];
  }
  for (int t = full; t < m; ++t) acc[0] += a[t] * b[t];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline double sum_lanes(const double* a, int m) {
  double acc[4] = {};
  const int full = m - m % 4;
  for (int t = 0; t < full; t += 4) {
    for (int l = 0; l < 4; ++l) acc[l] += a[t + l];
  }
  for (int t = full; t < m; ++t) acc[0] += a[t];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

// Coordinates are stored planar (all first coordinates, then all second,
// ...) and the pair loop runs over blocks: the kernel values land in small
// buffers through branch-free elementwise loops, then fold into the force
// sums as dot products. The i == j term contributes zero to every force
// and exactly 1 to each row's kernel sum, corrected below.
template <int DIM>
void exact_gradient(const std::vector<double>& p, const std::vector<double>& y, Index n,
                    std::vector<double>& grad, std::vector<double>& attr, std::vector<double>& rep) {
  constexpr int kBlock = 256;
  double delta[DIM][kBlock];
  double q[kBlock], pq[kBlock], q2[kBlock];

  double sum_q = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double* p_row = &p[static_cast<size_t>(i) * static_cast<size_t>(n)];
    double yi[DIM];
    for (int k = 0; k < DIM; ++k) yi[k] = y[static_cast<size_t>(k) * n + i];

    double a[DIM] = {};
    double r[DIM] = {};
    double qs = 0.0;

    for (Index j0 = 0; j0 < n; j0 += kBlock) {
      const int m = static_cast<int>(std::min<Index>(kBlock, n - j0));
      for (int k = 0; k < DIM; ++k) {
        const double* yk = &y[static_cast<size_t>(k) * n + j0];
        const double c = yi[k];
        for (int t = 0; t < m; ++t) delta[k][t] = c - yk[t];
      }
      for (int t = 0; t < m; ++t) {
        double d2 = 1.0;
        for (int k = 0; k < DIM; ++k) d2 += delta[k][t] * delta[k][t];
        q[t] = 1.0 / d2;
      }
      for (int t = 0; t < m; ++t) {
        pq[t] = p_row[j0 + t] * q[t];
        q2[t] = q[t] * q[t];
      }
      qs += sum_lanes(q, m);
      for (int k = 0; k < DIM; ++k) {
        a[k] += dot_lanes(pq, delta[k], m);
        r[k] += dot_lanes(q2, delta[k], m);
      }
    }

    for (int k = 0; k < DIM; ++k) {
      attr[static_cast<size_t>(k) * n + i] = a[k];
      rep[static_cast<size_t>(k) * n + i] = r[k];
    }
    sum_q += qs;
  }
  sum_q -= static_cast<double>(n);  // remove the i == j terms
  const double inv_z = 1.0 / sum_q;
  for (size_t t = 0; t < grad.size(); ++t) grad[t] = attr[t] - rep[t] * inv_z;
}

}  // namespace

Embedding project_tsne(const Matrix& distances, const TsneParams& params, std::uint64_t seed) {
  const Index n = distances.rows();
  if (distances.cols() != n || n < 2) throw ValidationError("distance matrix must be square");
  if (params.dim != 2 && params.dim != 3) throw ConfigError("projection dimension must be 2 or 3");
  if (params.iterations < 1) throw ConfigError("iterations must be >= 1");

  double perplexity = params.perplexity;
  if (perplexity <= 0.0) {
    perplexity = std::min(30.0, std::floor(static_cast<double>(n - 1) / 3.0));
  }
  if (perplexity < 1.0 || static_cast<double>(n - 1) < 3.0 * perplexity) {
    throw ConfigError("perplexity too large for " + std::to_string(n) + " points");
  }

  const size_t nn = static_cast<size_t>(n) * static_cast<size_t>(n);
  std::vector<double> p(nn);
  {
    std::vector<double> row(static_cast<size_t>(n));
    const double log_perp = std::log(perplexity);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) row[static_cast<size_t>(j)] = distances(i, j);
      calibrate_row(row.data(), n, i, log_perp, &p[static_cast<size_t>(i) * static_cast<size_t>(n)]);
    }
  }

  // Symmetrize and normalize to a joint distribution.
  double p_total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const size_t ij = static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j);
      const size_t ji = static_cast<size_t>(j) * static_cast<size_t>(n) + static_cast<size_t>(i);
      const double v = p[ij] + p[ji];
      p[ij] = v;
      p[ji] = v;
      p_total += 2.0 * v;
    }
  }
  // Floor far-pair affinities: the Gaussian tails underflow into
  // subnormals, which cost two orders of magnitude per multiply in the
  // gradient loop and contribute nothing to the embedding.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      auto& v = p[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
      v = i == j ? 0.0 : std::max(v / p_total, 1e-100);
    }
  }

  for (auto& v : p) v *= params.early_exaggeration;

  const int dim = params.dim;
  const size_t total = static_cast<size_t>(n) * static_cast<size_t>(dim);
  std::vector<double> y(total), grad(total), inc(total, 0.0), gains(total, 1.0);
  std::vector<double> attr(total), rep(total);

  // Coordinates live planar: y[k * n + i]. Point i is drawn coordinate by
  // coordinate so the initialization matches an interleaved layout.
  Rng rng(derive_seed(seed, rng_tag::tsne));
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) y[static_cast<size_t>(k) * n + i] = 1e-4 * rng.normal();
  }

  double momentum = params.initial_momentum;
  for (int iter = 0; iter < params.iterations; ++iter) {
    if (iter == params.exaggeration_iters) {
      for (auto& v : p) v /= params.early_exaggeration;
    }
    if (iter == params.momentum_switch_iter) momentum = params.final_momentum;

    if (dim == 2) {
      exact_gradient<2>(p, y, n, grad, attr, rep);
    } else {
      exact_gradient<3>(p, y, n, grad, attr, rep);
    }

    for (size_t t = 0; t < total; ++t) {
      const bool same_sign = (grad[t] > 0.0) == (inc[t] > 0.0);
      gains[t] = std::max(0.01, same_sign ? gains[t] * 0.8 : gains[t] + 0.2);
      inc[t] = momentum * inc[t] - params.learning_rate * gains[t] * grad[t];
      y[t] += inc[t];
    }

    // Keep the embedding centered.
    for (int k = 0; k < dim; ++k) {
      double mean = 0.0;
      for (Index i = 0; i < n; ++i) mean += y[static_cast<size_t>(k) * n + i];
      mean /= static_cast<double>(n);
      for (Index i = 0; i < n; ++i) y[static_cast<size_t>(k) * n + i] -= mean;
    }
  }

  Embedding emb;
  emb.params = params;
  emb.params.perplexity = perplexity;
  emb.seed = seed;
  emb.coords.resize(n, dim);
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < dim; ++k) emb.coords(i, k) = y[static_cast<size_t>(k) * n + i];
  }
  if (!emb.coords.allFinite()) throw NumericError("t-SNE produced non-finite coordinates");
  return emb;
}

}  // namespace medlearn
