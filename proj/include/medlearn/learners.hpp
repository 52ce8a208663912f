#pragma once

#include "medlearn/common.hpp"
#include "medlearn/rng.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace medlearn {

// Binary regression/classification tree node. split_column < 0 marks a leaf.
// Routing rule: x[split_column] <= threshold goes left.
struct TreeNode {
  int split_column = -1;
  double threshold = 0.0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  double value = 0.0;
  Index n_samples = 0;

  bool is_leaf() const { return split_column < 0; }
};

using TreePtr = std::unique_ptr<TreeNode>;

struct CartParams {
  int max_depth = -1;   // -1: unlimited
  Index min_split = 2;  // a node smaller than this is never split
  Index min_leaf = 1;   // children must stay at least this large
};

// Greedy variance-reduction CART. Split candidates are midpoints between
// consecutive distinct sorted values; ties in gain go to the lowest column
// index, then the lowest threshold. Scans run in (value, target)-sorted
// order so the fit does not depend on row order.
TreePtr fit_cart(const Matrix& X, const Vector& y, const CartParams& params);

double predict_row(const TreeNode& tree, const ConstRowRef& x);
Vector predict(const TreeNode& tree, const Matrix& X);

struct ForestParams {
  int n_trees = 2000;
  int mtry = 0;  // 0: max(1, d/3)
  Index min_leaf = 5;
  bool bootstrap = true;
  int jobs = 1;  // tree-level parallelism; results do not depend on it
};

struct ForestModel {
  std::vector<TreePtr> trees;
  ForestParams params;
  std::uint64_t seed = 0;
};

// Bagged CART with per-split feature subsampling. Tree t draws its PRNG
// stream from (seed, t), so fits are reproducible under any scheduling.
ForestModel fit_random_forest(const Matrix& X, const Vector& y, const ForestParams& params,
                              std::uint64_t seed);
Vector predict(const ForestModel& model, const Matrix& X);

struct BoostParams {
  int n_rounds = 100;
  double learning_rate = 0.3;
  int max_depth = 6;
  Index min_child = 1;
};

struct BoostModel {
  double base_score = 0.0;
  std::vector<TreePtr> trees;
  double learning_rate = 0.3;
};

// Squared-error gradient boosting: base score is mean(y), each round fits a
// depth-limited CART to the residuals.
BoostModel fit_gradient_boost(const Matrix& X, const Vector& y, const BoostParams& params,
                              std::uint64_t seed);
Vector predict(const BoostModel& model, const Matrix& X);

// Debug dump: one node per line, tab-separated
// (tree, node, parent, kind, column, threshold, value, n).
void dump_tree(const TreeNode& tree, std::ostream& out, int tree_id = 0);
void dump_model(const ForestModel& model, std::ostream& out);
void dump_model(const BoostModel& model, std::ostream& out);

enum class LearnerKind { cart, random_forest, gradient_boost, oracle };

enum class ModelRole { outcome_control, outcome_treated, mediator_control, mediator_treated, outcome_given_mediator };

// Closed-form stand-ins used by tests; each receives the same design row the
// fitted model would see (for outcome_given_mediator the mediator is the
// last column).
using OracleFn = std::function<double(const ConstRowRef&)>;
struct OracleFunctions {
  OracleFn g0, g1, gm0, gm1, gy1;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::random_forest;
  CartParams cart{-1, 20, 7};
  ForestParams forest{};
  BoostParams boost{};
  std::uint64_t seed = 0;
  std::shared_ptr<const OracleFunctions> oracle;  // tests only, never CLI-reachable
};

LearnerKind parse_learner_kind(const std::string& name);
std::string to_string(LearnerKind kind);
std::uint64_t fingerprint(const LearnerSpec& spec);

// Fitted model behind a uniform prediction surface.
class RegressionModel {
 public:
  virtual ~RegressionModel() = default;
  virtual double predict_row(const ConstRowRef& x) const = 0;
  Vector predict(const Matrix& X) const;
  Index input_dim() const { return input_dim_; }

 protected:
  Index input_dim_ = 0;
};

// Fits the learner named by `spec` to (X, y); `role` selects the closed form
// when the learner kind is oracle and salts the seed otherwise.
std::unique_ptr<RegressionModel> fit_model(const Matrix& X, const Vector& y,
                                           const LearnerSpec& spec, ModelRole role);

}  // namespace medlearn
