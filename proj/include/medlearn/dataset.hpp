#pragma once

#include "medlearn/common.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace medlearn {

enum class ColumnKind { continuous, one_hot };

// One expanded covariate column. One-hot indicator columns remember the
// group they came from and the category level they encode.
struct CovariateColumn {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  int group = -1;
  std::string level;
};

// A categorical source column after one-hot expansion. Levels are sorted
// lexicographically; `columns` are contiguous indices into the covariate
// matrix in level order.
struct OneHotGroup {
  std::string name;
  std::vector<std::string> levels;
  std::vector<int> columns;
};

// Immutable unit of analysis: covariates X, binary treatment W, outcome Y
// and an optional mediator M. Construction validates every invariant; all
// downstream code can assume finite values and consistent lengths.
class Dataset {
 public:
  Dataset(Matrix covariates, std::vector<int> treatment, Vector outcome,
          std::optional<Vector> mediator, std::vector<CovariateColumn> columns,
          std::vector<OneHotGroup> groups);

  // Convenience constructor for all-continuous covariates named x1..xd.
  Dataset(Matrix covariates, std::vector<int> treatment, Vector outcome,
          std::optional<Vector> mediator = std::nullopt);

  Index n() const { return covariates_.rows(); }
  Index dim() const { return covariates_.cols(); }
  const Matrix& covariates() const { return covariates_; }
  const std::vector<int>& treatment() const { return treatment_; }
  const Vector& outcome() const { return outcome_; }
  bool has_mediator() const { return mediator_.has_value(); }
  const Vector& mediator() const;

  const std::vector<CovariateColumn>& columns() const { return columns_; }
  const std::vector<OneHotGroup>& groups() const { return groups_; }
  const std::string& column_name(Index j) const { return columns_[static_cast<size_t>(j)].name; }
  // Covariate name as a user sees it: the group name for indicator columns.
  const std::string& display_name(Index j) const;
  int column_index(const std::string& name) const;  // -1 when absent

 private:
  Matrix covariates_;
  std::vector<int> treatment_;
  Vector outcome_;
  std::optional<Vector> mediator_;
  std::vector<CovariateColumn> columns_;
  std::vector<OneHotGroup> groups_;
};

// Read-only view of one treatment arm.
struct ArmView {
  const Dataset* parent = nullptr;
  int arm = 0;
  std::vector<Index> rows;

  Index size() const { return static_cast<Index>(rows.size()); }
  Matrix covariates() const;
  Vector outcome() const;
  Vector mediator() const;
};

// Partition into (control, treated). Throws DegenerateArmError if either
// arm is empty.
std::pair<ArmView, ArmView> split_by_treatment(const Dataset& ds);

// Column-role map for CSV ingestion. Unlisted header columns are covariates
// unless an explicit covariate list is given. `recodes` maps raw categorical
// values to replacement values before one-hot expansion.
struct CsvSchema {
  std::string treatment;
  std::string outcome;
  std::optional<std::string> mediator;
  std::vector<std::string> covariates;  // empty: every remaining column
  std::map<std::string, std::map<std::string, std::string>> recodes;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema);

// Writes a dataset back to CSV with one-hot groups collapsed to their level
// strings; reloading with the same schema reproduces the dataset bit for bit.
void write_csv(const Dataset& ds, const std::string& path, const CsvSchema& schema);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace medlearn
