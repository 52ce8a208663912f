#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace medlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Binds matrix rows (any inner stride) without copying.
using ConstRowRef = Eigen::Ref<const Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

// Error classes map 1:1 onto CLI exit codes (see tools/).
enum class ErrorCode : int {
  config = 2,      // bad flags, bad config file, invalid parameter combination
  schema = 3,      // column-role map does not match the file
  ingestion = 4,   // unparseable or missing cell
  validation = 5,  // data violates a dataset invariant
  degenerate = 6,  // an operation needs both treatment arms and one is empty
  numeric = 7,     // non-finite value or failed numeric routine
  io = 8,          // file system failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }
  int exit_code() const { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error(ErrorCode::schema, what) {}
};
struct IngestionError : Error {
  explicit IngestionError(const std::string& what) : Error(ErrorCode::ingestion, what) {}
};
struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorCode::validation, what) {}
};
struct DegenerateArmError : Error {
  explicit DegenerateArmError(const std::string& what) : Error(ErrorCode::degenerate, what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

}  // namespace medlearn
