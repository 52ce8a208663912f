#pragma once

#include "medlearn/dataset.hpp"
#include "medlearn/discovery.hpp"

#include <limits>
#include <string>
#include <vector>

namespace medlearn {

enum class LrtTarget { outcome, mediator };
enum class LeafCoding { categorical, scalar };

LrtTarget parse_target(const std::string& name);
std::string to_string(LrtTarget target);

// Likelihood-ratio comparison of target ~ leaf + W against
// target ~ leaf + W + leaf:W, with Gaussian maximum-likelihood fits.
struct LrtResult {
  Vector beta_reduced;
  Vector beta_full;
  double logL0 = 0.0;
  double logL1 = 0.0;
  double statistic = 0.0;
  int df = 0;
  double p_leaf = 1.0;
  int leaf_count = 1;
  bool rank_deficient = false;  // unidentifiable interaction columns were dropped
};

// `leaf_ids` is the per-unit subtype id. The leaf factor enters as L-1
// dummy contrasts by default; the scalar coding keeps it as one numeric
// regressor for sensitivity runs. Single-leaf input returns p_leaf = 1.
LrtResult p_leaf_test(const Dataset& ds, const std::vector<int>& leaf_ids, LrtTarget target,
                      LeafCoding coding = LeafCoding::categorical);

struct CandidateEval {
  int k = 0;
  int leaf_count = 0;
  double p_leaf = 1.0;
};

struct SubtypeSelection {
  enum class Decision { undecided, accepted, rejected };

  SubtypeTree tree;
  LrtResult lrt;
  std::vector<CandidateEval> per_k;
  Decision decision = Decision::undecided;
  double threshold_used = std::numeric_limits<double>::quiet_NaN();
};

// Evaluates p_leaf for every candidate tree and keeps the minimum; ties go
// to the smallest k, then the smallest leaf count. Decision stays pending
// until a threshold is applied.
SubtypeSelection select_subtype(const Dataset& ds, std::vector<SubtypeTree> candidates,
                                LrtTarget target, LeafCoding coding = LeafCoding::categorical);

struct CalibrationThreshold {
  double alpha = 0.10;
  double threshold = 0.0;
  std::vector<double> null_pvalues;
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  bool degenerate_support = false;  // threshold fell back to alpha
};

// Lower empirical alpha-quantile of the null p values. Needs >= 20
// replications; a quantile of 1 (degenerate null support) falls back to
// alpha so that nothing inside the observed support is ever accepted.
CalibrationThreshold calibrate_threshold(std::vector<double> null_ps, double alpha = 0.10,
                                         const std::string& scenario = "",
                                         std::vector<std::uint64_t> seeds = {});

void decide(SubtypeSelection& selection, const CalibrationThreshold& threshold);

void save_threshold(const CalibrationThreshold& thr, const std::string& path);
CalibrationThreshold load_threshold(const std::string& path);

// Upper tail of the chi-squared distribution.
double chi_squared_upper_tail(double x, int df);

}  // namespace medlearn
