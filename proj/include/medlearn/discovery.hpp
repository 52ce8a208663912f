#pragma once

#include "medlearn/dataset.hpp"
#include "medlearn/effects.hpp"
#include "medlearn/learners.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace medlearn {

// Pairwise squared effect differences: D(i,j) = (tau_i - tau_j)^2.
Matrix distance_matrix(const EffectVector& tau);

struct TsneParams {
  int dim = 2;             // 2 or 3
  double perplexity = 0.0;  // 0: min(30, floor((n-1)/3))
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iters = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch_iter = 250;
};

struct Embedding {
  Matrix coords;  // n x dim
  TsneParams params;
  std::uint64_t seed = 0;
};

// Exact t-SNE over a precomputed distance matrix: the Gaussian affinity
// exponent is -beta * D(i,j) with beta calibrated per point by bisection to
// the target perplexity. Gaussian random init scaled by 1e-4, seeded.
Embedding project_tsne(const Matrix& distances, const TsneParams& params, std::uint64_t seed);

struct KmeansParams {
  int restarts = 10;
  int max_iters = 300;
  double tol = 1e-8;  // centroid shift below this stops Lloyd iterations
};

struct ClusterAssignment {
  std::vector<int> labels;  // values in 1..k
  int k = 0;
  double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding; best inertia over `restarts`
// seeded restarts, ties to the lowest restart index. Empty clusters are
// repaired by promoting the point farthest from its centroid.
ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed,
                         const KmeansParams& params = {});

// Candidate cluster counts: 2..floor(sqrt(d))+2 unless overridden.
std::vector<int> candidate_ks(Index d, std::optional<std::pair<int, int>> override = std::nullopt);

struct SubtypeParams {
  Index min_split = 20;
  Index min_leaf = 7;
  double cp = 0.01;  // a split must reduce root impurity by this fraction
  int max_depth = 30;
};

struct SubtypeLeafInfo {
  int subtype_id = 0;  // 1..L in left-to-right order
  int majority_cluster = 0;
  Index n_samples = 0;
};

// Gini classification tree mapping cluster labels back to covariate space.
// Every leaf is one subtype, even when two leaves share a majority cluster.
struct SubtypeTree {
  TreePtr root;  // leaf value stores the subtype id
  int k_source = 0;
  std::vector<SubtypeLeafInfo> leaves;
  std::vector<int> train_assignment;  // subtype id per training row

  int leaf_count() const { return static_cast<int>(leaves.size()); }
  std::vector<int> assign(const Matrix& X) const;
};

SubtypeTree fit_subtype_tree(const Matrix& X, const ClusterAssignment& labels,
                             const SubtypeParams& params, int k_source = 0);

enum class ConditionKind { interval, in_set };

struct ProfileCondition {
  ConditionKind kind = ConditionKind::interval;
  std::string name;  // covariate display name
  int column = -1;   // continuous column
  bool has_lower = false;
  bool has_upper = false;
  double lower = 0.0;  // x > lower
  double upper = 0.0;  // x <= upper
  int group = -1;      // one-hot group
  std::vector<std::string> levels;
};

struct LeafProfile {
  int subtype_id = 0;
  int majority_cluster = 0;
  Index n_samples = 0;
  std::vector<ProfileCondition> conditions;
};

// One profile per leaf; repeated splits on a column merge into one interval
// and one-hot indicator splits aggregate into set-membership conditions.
std::vector<LeafProfile> extract_leaf_profiles(const SubtypeTree& tree, const Dataset& ds);

bool profile_matches(const LeafProfile& profile, const Dataset& ds, Index row);
std::string to_string(const ProfileCondition& cond);
std::string to_string(const LeafProfile& profile);

void write_embedding_csv(const Embedding& emb, const ClusterAssignment& labels,
                         const std::string& path);

}  // namespace medlearn
