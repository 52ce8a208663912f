#include "medlearn/learners.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

namespace medlearn {

namespace {

struct SplitChoice {
  int column = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

// Leaf value: mean of the node's targets, summed in sorted order so the
// result is identical under row permutations.
struct NodeStats {
  double mean = 0.0;
  bool constant = false;
};

NodeStats node_stats(const Vector& y, const std::vector<Index>& idx) {
  std::vector<double> vals;
  vals.reserve(idx.size());
  for (Index i : idx) vals.push_back(y[i]);
  std::sort(vals.begin(), vals.end());
  double sum = 0.0;
  for (double v : vals) sum += v;
  return {sum / static_cast<double>(vals.size()), vals.front() == vals.back()};
}

class CartBuilder {
 public:
  CartBuilder(const Matrix& X, const Vector& y, const CartParams& params)
      : X_(X), y_(y), params_(params) {}

  // columns: candidate split columns for every node (sorted ascending);
  // forests pass a fresh subsample per node via `resample_columns`.
  TreePtr build(std::vector<Index> idx, const std::vector<int>& columns,
                const std::function<std::vector<int>()>& resample_columns) {
    resample_columns_ = resample_columns;
    fixed_columns_ = &columns;
    return grow(std::move(idx), 0);
  }

 private:
  TreePtr grow(std::vector<Index> idx, int depth) {
    auto node = std::make_unique<TreeNode>();
    node->n_samples = static_cast<Index>(idx.size());
    const NodeStats stats = node_stats(y_, idx);
    node->value = stats.mean;

    const Index n = node->n_samples;
    if (stats.constant || n < params_.min_split || n < 2 * params_.min_leaf ||
        (params_.max_depth >= 0 && depth >= params_.max_depth)) {
      return node;
    }

    const std::vector<int> columns = resample_columns_ ? resample_columns_() : *fixed_columns_;
    SplitChoice best = best_split(idx, columns);
    if (best.column < 0) return node;

    std::vector<Index> left_idx, right_idx;
    left_idx.reserve(idx.size());
    for (Index i : idx) {
      (X_(i, best.column) <= best.threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    node->split_column = best.column;
    node->threshold = best.threshold;
    node->left = grow(std::move(left_idx), depth + 1);
    node->right = grow(std::move(right_idx), depth + 1);
    return node;
  }

  SplitChoice best_split(const std::vector<Index>& idx, const std::vector<int>& columns) {
    const Index n = static_cast<Index>(idx.size());
    SplitChoice best;
    for (int j : columns) {
      pairs_.clear();
      for (Index i : idx) pairs_.emplace_back(X_(i, j), y_[i]);
      std::sort(pairs_.begin(), pairs_.end());

      double total = 0.0;
      for (const auto& p : pairs_) total += p.second;

      double left_sum = 0.0;
      for (Index k = 0; k + 1 < n; ++k) {
        left_sum += pairs_[static_cast<size_t>(k)].second;
        const double a = pairs_[static_cast<size_t>(k)].first;
        const double b = pairs_[static_cast<size_t>(k + 1)].first;
        if (a == b) continue;
        const Index left_n = k + 1;
        const Index right_n = n - left_n;
        if (left_n < params_.min_leaf || right_n < params_.min_leaf) continue;
        const double right_sum = total - left_sum;
        // Maximizing sum of (sum^2 / n) over the children minimizes SSE.
        const double score = left_sum * left_sum / static_cast<double>(left_n) +
                             right_sum * right_sum / static_cast<double>(right_n);
        if (score > best.score) {
          double thr = a + (b - a) / 2.0;
          if (thr >= b) thr = a;  // keep the scanned partition under rounding
          best = {j, thr, score};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  const Vector& y_;
  CartParams params_;
  const std::vector<int>* fixed_columns_ = nullptr;
  std::function<std::vector<int>()> resample_columns_;
  std::vector<std::pair<double, double>> pairs_;
};

std::vector<int> all_columns(Index d) {
  std::vector<int> columns(static_cast<size_t>(d));
  std::iota(columns.begin(), columns.end(), 0);
  return columns;
}

void check_training_input(const Matrix& X, const Vector& y) {
  if (X.rows() == 0 || X.cols() == 0) throw ValidationError("empty training input");
  if (y.size() != X.rows()) throw ValidationError("target length != row count");
  if (!X.allFinite() || !y.allFinite()) throw NumericError("non-finite training value");
}

}  // namespace

TreePtr fit_cart(const Matrix& X, const Vector& y, const CartParams& params) {
  check_training_input(X, y);
  std::vector<Index> idx(static_cast<size_t>(X.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  CartBuilder builder(X, y, params);
  return builder.build(std::move(idx), all_columns(X.cols()), nullptr);
}

double predict_row(const TreeNode& tree, const ConstRowRef& x) {
  const TreeNode* node = &tree;
  while (!node->is_leaf()) {
    node = x[node->split_column] <= node->threshold ? node->left.get() : node->right.get();
  }
  return node->value;
}

Vector predict(const TreeNode& tree, const Matrix& X) {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = predict_row(tree, X.row(i));
  return out;
}

ForestModel fit_random_forest(const Matrix& X, const Vector& y, const ForestParams& params,
                              std::uint64_t seed) {
  check_training_input(X, y);
  if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  const Index n = X.rows();
  const Index d = X.cols();
  int mtry = params.mtry > 0 ? params.mtry : std::max<int>(1, static_cast<int>(d / 3));
  if (mtry > d) throw ConfigError("mtry exceeds the column count");

  ForestModel model;
  model.params = params;
  model.params.mtry = mtry;
  model.seed = seed;
  model.trees.resize(static_cast<size_t>(params.n_trees));

  CartParams tree_params;
  tree_params.max_depth = -1;
  tree_params.min_leaf = params.min_leaf;
  tree_params.min_split = 2 * params.min_leaf;

  const std::uint64_t forest_seed = derive_seed(seed, rng_tag::tree);
  auto fit_one = [&](int t) {
    Rng rng(derive_seed(forest_seed, static_cast<std::uint64_t>(t)));
    std::vector<Index> idx(static_cast<size_t>(n));
    if (params.bootstrap) {
      for (auto& i : idx) i = static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    } else {
      std::iota(idx.begin(), idx.end(), Index{0});
    }
    auto sample_columns = [&rng, d, mtry]() {
      std::vector<int> cols(static_cast<size_t>(d));
      std::iota(cols.begin(), cols.end(), 0);
      for (int i = 0; i < mtry; ++i) {
        const auto j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d - i)));
        std::swap(cols[static_cast<size_t>(i)], cols[static_cast<size_t>(j)]);
      }
      cols.resize(static_cast<size_t>(mtry));
      std::sort(cols.begin(), cols.end());
      return cols;
    };
    CartBuilder builder(X, y, tree_params);
    model.trees[static_cast<size_t>(t)] = builder.build(std::move(idx), {}, sample_columns);
  };

  const int jobs = std::max(1, params.jobs);
  if (jobs == 1) {
    for (int t = 0; t < params.n_trees; ++t) fit_one(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const int t = next.fetch_add(1);
          if (t >= params.n_trees) return;
          fit_one(t);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }
  return model;
}

Vector predict(const ForestModel& model, const Matrix& X) {
  Vector out = Vector::Zero(X.rows());
  for (const auto& tree : model.trees) {
    for (Index i = 0; i < X.rows(); ++i) out[i] += predict_row(*tree, X.row(i));
  }
  return out / static_cast<double>(model.trees.size());
}

BoostModel fit_gradient_boost(const Matrix& X, const Vector& y, const BoostParams& params,
                              std::uint64_t /*seed*/) {
  check_training_input(X, y);
  if (params.n_rounds < 1) throw ConfigError("n_rounds must be >= 1");
  if (params.learning_rate <= 0.0 || params.learning_rate > 1.0) {
    throw ConfigError("learning_rate must be in (0, 1]");
  }

  BoostModel model;
  model.learning_rate = params.learning_rate;
  model.base_score = y.mean();

  CartParams tree_params;
  tree_params.max_depth = params.max_depth;
  tree_params.min_leaf = params.min_child;
  tree_params.min_split = std::max<Index>(2, 2 * params.min_child);

  Vector residual = y.array() - model.base_score;
  const auto columns = all_columns(X.cols());
  for (int round = 0; round < params.n_rounds; ++round) {
    CartBuilder builder(X, residual, tree_params);
    std::vector<Index> idx(static_cast<size_t>(X.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    TreePtr tree = builder.build(std::move(idx), columns, nullptr);
    for (Index i = 0; i < X.rows(); ++i) {
      residual[i] -= params.learning_rate * predict_row(*tree, X.row(i));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Vector predict(const BoostModel& model, const Matrix& X) {
  Vector out = Vector::Constant(X.rows(), model.base_score);
  for (const auto& tree : model.trees) {
    for (Index i = 0; i < X.rows(); ++i) out[i] += model.learning_rate * predict_row(*tree, X.row(i));
  }
  return out;
}

namespace {

void dump_nodes(const TreeNode& node, std::ostream& out, int tree_id, int parent, int& next_id) {
  const int id = next_id++;
  out << tree_id << '\t' << id << '\t' << parent << '\t' << (node.is_leaf() ? "leaf" : "split")
      << '\t' << node.split_column << '\t' << node.threshold << '\t' << node.value << '\t'
      << node.n_samples << '\n';
  if (!node.is_leaf()) {
    dump_nodes(*node.left, out, tree_id, id, next_id);
    dump_nodes(*node.right, out, tree_id, id, next_id);
  }
}

}  // namespace

void dump_tree(const TreeNode& tree, std::ostream& out, int tree_id) {
  int next_id = 0;
  dump_nodes(tree, out, tree_id, -1, next_id);
}

void dump_model(const ForestModel& model, std::ostream& out) {
  for (size_t t = 0; t < model.trees.size(); ++t) dump_tree(*model.trees[t], out, static_cast<int>(t));
}

void dump_model(const BoostModel& model, std::ostream& out) {
  out << "base_score\t" << model.base_score << "\tlearning_rate\t" << model.learning_rate << '\n';
  for (size_t t = 0; t < model.trees.size(); ++t) dump_tree(*model.trees[t], out, static_cast<int>(t));
}

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "cart") return LearnerKind::cart;
  if (name == "rf" || name == "random_forest") return LearnerKind::random_forest;
  if (name == "gb" || name == "gradient_boost") return LearnerKind::gradient_boost;
  if (name == "oracle") return LearnerKind::oracle;
  throw ConfigError("unknown learner '" + name + "'");
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::cart: return "cart";
    case LearnerKind::random_forest: return "rf";
    case LearnerKind::gradient_boost: return "gb";
    case LearnerKind::oracle: return "oracle";
  }
  return "?";
}

std::uint64_t fingerprint(const LearnerSpec& spec) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    h = splitmix64(s);
  };
  mix(static_cast<std::uint64_t>(spec.kind));
  mix(static_cast<std::uint64_t>(spec.cart.max_depth));
  mix(static_cast<std::uint64_t>(spec.cart.min_split));
  mix(static_cast<std::uint64_t>(spec.cart.min_leaf));
  mix(static_cast<std::uint64_t>(spec.forest.n_trees));
  mix(static_cast<std::uint64_t>(spec.forest.mtry));
  mix(static_cast<std::uint64_t>(spec.forest.min_leaf));
  mix(static_cast<std::uint64_t>(spec.forest.bootstrap));
  mix(static_cast<std::uint64_t>(spec.boost.n_rounds));
  mix(std::bit_cast<std::uint64_t>(spec.boost.learning_rate));
  mix(static_cast<std::uint64_t>(spec.boost.max_depth));
  mix(static_cast<std::uint64_t>(spec.boost.min_child));
  mix(spec.seed);
  return h;
}

namespace {

class TreeModel : public RegressionModel {
 public:
  TreeModel(TreePtr tree, Index dim) : tree_(std::move(tree)) { input_dim_ = dim; }
  double predict_row(const ConstRowRef& x) const override {
    return medlearn::predict_row(*tree_, x);
  }

 private:
  TreePtr tree_;
};

class ForestRegressionModel : public RegressionModel {
 public:
  ForestRegressionModel(ForestModel model, Index dim) : model_(std::move(model)) { input_dim_ = dim; }
  double predict_row(const ConstRowRef& x) const override {
    double sum = 0.0;
    for (const auto& tree : model_.trees) sum += medlearn::predict_row(*tree, x);
    return sum / static_cast<double>(model_.trees.size());
  }

 private:
  ForestModel model_;
};

class BoostRegressionModel : public RegressionModel {
 public:
  BoostRegressionModel(BoostModel model, Index dim) : model_(std::move(model)) { input_dim_ = dim; }
  double predict_row(const ConstRowRef& x) const override {
    double out = model_.base_score;
    for (const auto& tree : model_.trees) out += model_.learning_rate * medlearn::predict_row(*tree, x);
    return out;
  }

 private:
  BoostModel model_;
};

class OracleModel : public RegressionModel {
 public:
  OracleModel(OracleFn fn, Index dim) : fn_(std::move(fn)) { input_dim_ = dim; }
  double predict_row(const ConstRowRef& x) const override { return fn_(x); }

 private:
  OracleFn fn_;
};

}  // namespace

Vector RegressionModel::predict(const Matrix& X) const {
  if (X.cols() != input_dim_) {
    throw ValidationError("prediction input has " + std::to_string(X.cols()) +
                          " columns, model expects " + std::to_string(input_dim_));
  }
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    out[i] = predict_row(X.row(i));
    if (!std::isfinite(out[i])) throw NumericError("non-finite prediction");
  }
  return out;
}

std::unique_ptr<RegressionModel> fit_model(const Matrix& X, const Vector& y,
                                           const LearnerSpec& spec, ModelRole role) {
  std::uint64_t role_tag = 0;
  switch (role) {
    case ModelRole::outcome_control: role_tag = rng_tag::model_g0; break;
    case ModelRole::outcome_treated: role_tag = rng_tag::model_g1; break;
    case ModelRole::mediator_control: role_tag = rng_tag::model_gm0; break;
    case ModelRole::mediator_treated: role_tag = rng_tag::model_gm1; break;
    case ModelRole::outcome_given_mediator: role_tag = rng_tag::model_gy1; break;
  }
  const std::uint64_t seed = derive_seed(spec.seed, role_tag);

  switch (spec.kind) {
    case LearnerKind::cart:
      return std::make_unique<TreeModel>(fit_cart(X, y, spec.cart), X.cols());
    case LearnerKind::random_forest:
      return std::make_unique<ForestRegressionModel>(fit_random_forest(X, y, spec.forest, seed),
                                                     X.cols());
    case LearnerKind::gradient_boost:
      return std::make_unique<BoostRegressionModel>(fit_gradient_boost(X, y, spec.boost, seed),
                                                    X.cols());
    case LearnerKind::oracle: {
      if (!spec.oracle) throw ConfigError("oracle learner needs oracle functions");
      const OracleFn* fn = nullptr;
      switch (role) {
        case ModelRole::outcome_control: fn = &spec.oracle->g0; break;
        case ModelRole::outcome_treated: fn = &spec.oracle->g1; break;
        case ModelRole::mediator_control: fn = &spec.oracle->gm0; break;
        case ModelRole::mediator_treated: fn = &spec.oracle->gm1; break;
        case ModelRole::outcome_given_mediator: fn = &spec.oracle->gy1; break;
      }
      if (!fn || !*fn) throw ConfigError("oracle function for this model role is missing");
      return std::make_unique<OracleModel>(*fn, X.cols());
    }
  }
  throw ConfigError("unknown learner kind");
}

}  // namespace medlearn
