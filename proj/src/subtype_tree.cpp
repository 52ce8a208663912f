#include "medlearn/discovery.hpp"

#include <algorithm>
#include <map>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace medlearn {

namespace {

// Weighted Gini impurity: n * (1 - sum (c/n)^2) = n - sum c^2 / n.
double weighted_gini(const std::vector<Index>& counts, Index n) {
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (Index c : counts) sum_sq += static_cast<double>(c) * static_cast<double>(c);
  return static_cast<double>(n) - sum_sq / static_cast<double>(n);
}

struct ClassSplit {
  int column = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class SubtypeBuilder {
 public:
  SubtypeBuilder(const Matrix& X, const std::vector<int>& labels, int n_classes,
                 const SubtypeParams& params)
      : X_(X), labels_(labels), n_classes_(n_classes), params_(params) {}

  TreePtr build() {
    std::vector<Index> idx(static_cast<size_t>(X_.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    const auto root_counts = count_classes(idx);
    Index root_majority = 0;
    for (Index c : root_counts) root_majority = std::max(root_majority, c);
    // rpart semantics: a split is attempted only when it improves the fit
    // by cp relative to the root, and the grown tree is then pruned at the
    // same complexity level (risk = misclassification count).
    min_split_gain_ = params_.cp * static_cast<double>(static_cast<Index>(idx.size()) - root_majority);
    TreePtr root = grow(std::move(idx), 0);
    prune(*root, min_split_gain_);
    return root;
  }

 private:
  std::vector<Index> count_classes(const std::vector<Index>& idx) const {
    std::vector<Index> counts(static_cast<size_t>(n_classes_), 0);
    for (Index i : idx) ++counts[static_cast<size_t>(labels_[static_cast<size_t>(i)] - 1)];
    return counts;
  }

  TreePtr grow(std::vector<Index> idx, int depth) {
    auto node = std::make_unique<TreeNode>();
    node->n_samples = static_cast<Index>(idx.size());
    const auto counts = count_classes(idx);
    // Majority cluster; ties go to the lowest label. Stored in `value`
    // until leaves are renumbered into subtype ids.
    int majority = 1;
    for (int c = 1; c < n_classes_; ++c) {
      if (counts[static_cast<size_t>(c)] > counts[static_cast<size_t>(majority - 1)]) majority = c + 1;
    }
    node->value = static_cast<double>(majority);

    const Index n = node->n_samples;
    // Risk (misclassification count) feeds the cost-complexity prune.
    Index majority_count = 0;
    for (Index c : counts) majority_count = std::max(majority_count, c);
    risk_[node.get()] = n - majority_count;

    const double impurity = weighted_gini(counts, n);
    if (impurity <= 0.0 || n < params_.min_split || n < 2 * params_.min_leaf ||
        depth >= params_.max_depth) {
      return node;
    }

    const ClassSplit best = best_split(idx, impurity);
    if (best.column < 0 || best.gain < min_split_gain_) return node;

    std::vector<Index> left_idx, right_idx;
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

  ClassSplit best_split(const std::vector<Index>& idx, double node_impurity) {
    const Index n = static_cast<Index>(idx.size());
    ClassSplit best;
    std::vector<std::pair<double, int>> pairs;
    std::vector<Index> left_counts(static_cast<size_t>(n_classes_));
    std::vector<Index> total_counts(static_cast<size_t>(n_classes_));
    for (int j = 0; j < X_.cols(); ++j) {
      pairs.clear();
      for (Index i : idx) pairs.emplace_back(X_(i, j), labels_[static_cast<size_t>(i)]);
      std::sort(pairs.begin(), pairs.end());

      std::fill(left_counts.begin(), left_counts.end(), Index{0});
      std::fill(total_counts.begin(), total_counts.end(), Index{0});
      for (const auto& pr : pairs) ++total_counts[static_cast<size_t>(pr.second - 1)];

      for (Index k = 0; k + 1 < n; ++k) {
        ++left_counts[static_cast<size_t>(pairs[static_cast<size_t>(k)].second - 1)];
        const double a = pairs[static_cast<size_t>(k)].first;
        const double b = pairs[static_cast<size_t>(k + 1)].first;
        if (a == b) continue;
        const Index left_n = k + 1;
        const Index right_n = n - left_n;
        if (left_n < params_.min_leaf || right_n < params_.min_leaf) continue;

        double left_sq = 0.0, right_sq = 0.0;
        for (int c = 0; c < n_classes_; ++c) {
          const double lc = static_cast<double>(left_counts[static_cast<size_t>(c)]);
          const double rc = static_cast<double>(total_counts[static_cast<size_t>(c)] -
                                                left_counts[static_cast<size_t>(c)]);
          left_sq += lc * lc;
          right_sq += rc * rc;
        }
        const double child_impurity = static_cast<double>(left_n) - left_sq / static_cast<double>(left_n) +
                                      static_cast<double>(right_n) - right_sq / static_cast<double>(right_n);
        const double gain = node_impurity - child_impurity;
        if (gain > best.gain) {
          double thr = a + (b - a) / 2.0;
          if (thr >= b) thr = a;
          best = {j, thr, gain};
        }
      }
    }
    return best;
  }

  struct SubtreeStats {
    Index risk = 0;
    int leaves = 0;
  };

  SubtreeStats prune(TreeNode& node, double min_gain_per_leaf) {
    if (node.is_leaf()) return {risk_[&node], 1};
    const SubtreeStats left = prune(*node.left, min_gain_per_leaf);
    const SubtreeStats right = prune(*node.right, min_gain_per_leaf);
    const Index subtree_risk = left.risk + right.risk;
    const int leaves = left.leaves + right.leaves;
    const Index own_risk = risk_[&node];
    if (static_cast<double>(own_risk - subtree_risk) <
        min_gain_per_leaf * static_cast<double>(leaves - 1)) {
      node.split_column = -1;
      node.left.reset();
      node.right.reset();
      return {own_risk, 1};
    }
    return {subtree_risk, leaves};
  }

  const Matrix& X_;
  const std::vector<int>& labels_;
  int n_classes_;
  SubtypeParams params_;
  double min_split_gain_ = 0.0;
  std::map<const TreeNode*, Index> risk_;
};

// Left-to-right leaf numbering; rewrites leaf values to subtype ids.
void number_leaves(TreeNode& node, std::vector<SubtypeLeafInfo>& leaves) {
  if (node.is_leaf()) {
    const int id = static_cast<int>(leaves.size()) + 1;
    leaves.push_back({id, static_cast<int>(node.value), node.n_samples});
    node.value = static_cast<double>(id);
    return;
  }
  number_leaves(*node.left, leaves);
  number_leaves(*node.right, leaves);
}

}  // namespace

std::vector<int> SubtypeTree::assign(const Matrix& X) const {
  std::vector<int> out(static_cast<size_t>(X.rows()));
  for (Index i = 0; i < X.rows(); ++i) {
    out[static_cast<size_t>(i)] = static_cast<int>(predict_row(*root, X.row(i)));
  }
  return out;
}

SubtypeTree fit_subtype_tree(const Matrix& X, const ClusterAssignment& labels,
                             const SubtypeParams& params, int k_source) {
  if (static_cast<Index>(labels.labels.size()) != X.rows()) {
    throw ValidationError("label count != row count");
  }
  if (labels.k < 1) throw ValidationError("cluster assignment has no clusters");
  for (int lab : labels.labels) {
    if (lab < 1 || lab > labels.k) throw ValidationError("cluster label out of range");
  }

  SubtypeBuilder builder(X, labels.labels, labels.k, params);
  SubtypeTree tree;
  tree.root = builder.build();
  tree.k_source = k_source > 0 ? k_source : labels.k;
  number_leaves(*tree.root, tree.leaves);
  tree.train_assignment = tree.assign(X);
  return tree;
}

namespace {

struct PathStep {
  int column;
  double threshold;
  bool right;  // true: x > threshold
};

void collect_profiles(const TreeNode& node, const Dataset& ds, std::vector<PathStep>& path,
                      std::vector<LeafProfile>& out, const std::vector<SubtypeLeafInfo>& leaves) {
  if (node.is_leaf()) {
    LeafProfile profile;
    profile.subtype_id = static_cast<int>(node.value);
    profile.n_samples = node.n_samples;
    profile.majority_cluster = leaves[static_cast<size_t>(profile.subtype_id - 1)].majority_cluster;

    // Continuous columns fold into one interval per column; one-hot
    // indicator steps fold into the group's surviving level set.
    std::vector<ProfileCondition> intervals;
    std::vector<std::pair<int, std::vector<bool>>> group_sets;  // group -> allowed levels
    for (const auto& step : path) {
      const auto& col = ds.columns()[static_cast<size_t>(step.column)];
      if (col.kind == ColumnKind::continuous) {
        ProfileCondition* cond = nullptr;
        for (auto& c : intervals) {
          if (c.column == step.column) cond = &c;
        }
        if (!cond) {
          intervals.push_back({});
          cond = &intervals.back();
          cond->kind = ConditionKind::interval;
          cond->column = step.column;
          cond->name = col.name;
        }
        if (step.right) {
          if (!cond->has_lower || step.threshold > cond->lower) {
            cond->has_lower = true;
            cond->lower = step.threshold;
          }
        } else {
          if (!cond->has_upper || step.threshold < cond->upper) {
            cond->has_upper = true;
            cond->upper = step.threshold;
          }
        }
      } else {
        const auto& group = ds.groups()[static_cast<size_t>(col.group)];
        std::vector<bool>* allowed = nullptr;
        for (auto& [g, set] : group_sets) {
          if (g == col.group) allowed = &set;
        }
        if (!allowed) {
          group_sets.emplace_back(col.group, std::vector<bool>(group.levels.size(), true));
          allowed = &group_sets.back().second;
        }
        // Indicator split at a threshold inside (0,1): right means the
        // level is on, left means it is off.
        for (size_t l = 0; l < group.levels.size(); ++l) {
          const bool is_this = group.columns[l] == step.column;
          if (step.right && !is_this) (*allowed)[l] = false;
          if (!step.right && is_this) (*allowed)[l] = false;
        }
      }
    }

    std::sort(intervals.begin(), intervals.end(),
              [](const ProfileCondition& a, const ProfileCondition& b) { return a.column < b.column; });
    std::sort(group_sets.begin(), group_sets.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    profile.conditions = std::move(intervals);
    for (const auto& [g, allowed] : group_sets) {
      const auto& group = ds.groups()[static_cast<size_t>(g)];
      ProfileCondition cond;
      cond.kind = ConditionKind::in_set;
      cond.group = g;
      cond.name = group.name;
      for (size_t l = 0; l < group.levels.size(); ++l) {
        if (allowed[l]) cond.levels.push_back(group.levels[l]);
      }
      if (cond.levels.size() < group.levels.size()) profile.conditions.push_back(std::move(cond));
    }
    out.push_back(std::move(profile));
    return;
  }

  path.push_back({node.split_column, node.threshold, false});
  collect_profiles(*node.left, ds, path, out, leaves);
  path.back().right = true;
  collect_profiles(*node.right, ds, path, out, leaves);
  path.pop_back();
}

}  // namespace

std::vector<LeafProfile> extract_leaf_profiles(const SubtypeTree& tree, const Dataset& ds) {
  std::vector<LeafProfile> out;
  std::vector<PathStep> path;
  collect_profiles(*tree.root, ds, path, out, tree.leaves);
  return out;
}

bool profile_matches(const LeafProfile& profile, const Dataset& ds, Index row) {
  for (const auto& cond : profile.conditions) {
    if (cond.kind == ConditionKind::interval) {
      const double v = ds.covariates()(row, cond.column);
      if (cond.has_lower && !(v > cond.lower)) return false;
      if (cond.has_upper && !(v <= cond.upper)) return false;
    } else {
      const auto& group = ds.groups()[static_cast<size_t>(cond.group)];
      std::string active;
      for (size_t l = 0; l < group.levels.size(); ++l) {
        if (ds.covariates()(row, group.columns[l]) == 1.0) {
          active = group.levels[l];
          break;
        }
      }
      if (std::find(cond.levels.begin(), cond.levels.end(), active) == cond.levels.end()) {
        return false;
      }
    }
  }
  return true;
}

std::string to_string(const ProfileCondition& cond) {
  std::ostringstream out;
  if (cond.kind == ConditionKind::interval) {
    if (cond.has_lower && cond.has_upper) {
      out << cond.name << " in (" << format_double(cond.lower) << ", " << format_double(cond.upper)
          << "]";
    } else if (cond.has_lower) {
      out << cond.name << " > " << format_double(cond.lower);
    } else {
      out << cond.name << " <= " << format_double(cond.upper);
    }
  } else {
    out << cond.name << " in {";
    for (size_t l = 0; l < cond.levels.size(); ++l) out << (l ? ", " : "") << cond.levels[l];
    out << "}";
  }
  return out.str();
}

std::string to_string(const LeafProfile& profile) {
  std::ostringstream out;
  out << "subtype " << profile.subtype_id << " (n=" << profile.n_samples << ", cluster "
      << profile.majority_cluster << "): ";
  if (profile.conditions.empty()) {
    out << "all units";
  } else {
    for (size_t i = 0; i < profile.conditions.size(); ++i) {
      if (i) out << " & ";
      out << to_string(profile.conditions[i]);
    }
  }
  return out.str();
}

void write_embedding_csv(const Embedding& emb, const ClusterAssignment& labels,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "unit_index";
  for (int k = 0; k < emb.params.dim; ++k) out << ",coord" << (k + 1);
  out << ",label\n";
  for (Index i = 0; i < emb.coords.rows(); ++i) {
    out << i;
    for (int k = 0; k < emb.params.dim; ++k) out << ',' << format_double(emb.coords(i, k));
    out << ',' << labels.labels[static_cast<size_t>(i)] << '\n';
  }
}

}  // namespace medlearn
