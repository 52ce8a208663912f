#include "medlearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace medlearn {

namespace {

void validate(const Matrix& covariates, const std::vector<int>& treatment, const Vector& outcome,
              const std::optional<Vector>& mediator, const std::vector<CovariateColumn>& columns,
              const std::vector<OneHotGroup>& groups) {
  const Index n = covariates.rows();
  const Index d = covariates.cols();
  if (n < 1) throw ValidationError("dataset needs at least one row");
  if (d < 1) throw ValidationError("dataset needs at least one covariate column");
  if (static_cast<Index>(treatment.size()) != n) throw ValidationError("treatment length != n");
  if (outcome.size() != n) throw ValidationError("outcome length != n");
  if (mediator && mediator->size() != n) throw ValidationError("mediator length != n");
  if (static_cast<Index>(columns.size()) != d) throw ValidationError("column metadata length != d");

  for (int w : treatment) {
    if (w != 0 && w != 1) throw ValidationError("treatment values must be 0 or 1");
  }
  if (!covariates.allFinite()) throw ValidationError("non-finite covariate value");
  if (!outcome.allFinite()) throw ValidationError("non-finite outcome value");
  if (mediator && !mediator->allFinite()) throw ValidationError("non-finite mediator value");

  for (const auto& g : groups) {
    for (Index i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (int c : g.columns) row_sum += covariates(i, c);
      if (row_sum != 1.0) {
        throw ValidationError("one-hot group '" + g.name + "' does not sum to 1 in row " +
                              std::to_string(i));
      }
    }
  }
}

}  // namespace

Dataset::Dataset(Matrix covariates, std::vector<int> treatment, Vector outcome,
                 std::optional<Vector> mediator, std::vector<CovariateColumn> columns,
                 std::vector<OneHotGroup> groups)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      mediator_(std::move(mediator)),
      columns_(std::move(columns)),
      groups_(std::move(groups)) {
  validate(covariates_, treatment_, outcome_, mediator_, columns_, groups_);
}

Dataset::Dataset(Matrix covariates, std::vector<int> treatment, Vector outcome,
                 std::optional<Vector> mediator)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      mediator_(std::move(mediator)) {
  for (Index j = 0; j < covariates_.cols(); ++j) {
    columns_.push_back({"x" + std::to_string(j + 1), ColumnKind::continuous, -1, ""});
  }
  validate(covariates_, treatment_, outcome_, mediator_, columns_, groups_);
}

const Vector& Dataset::mediator() const {
  if (!mediator_) throw ValidationError("dataset has no mediator column");
  return *mediator_;
}

const std::string& Dataset::display_name(Index j) const {
  const auto& col = columns_[static_cast<size_t>(j)];
  if (col.kind == ColumnKind::one_hot) return groups_[static_cast<size_t>(col.group)].name;
  return col.name;
}

int Dataset::column_index(const std::string& name) const {
  for (size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name == name) return static_cast<int>(j);
  }
  return -1;
}

Matrix ArmView::covariates() const {
  Matrix out(size(), parent->dim());
  for (Index i = 0; i < size(); ++i) out.row(i) = parent->covariates().row(rows[static_cast<size_t>(i)]);
  return out;
}

Vector ArmView::outcome() const {
  Vector out(size());
  for (Index i = 0; i < size(); ++i) out[i] = parent->outcome()[rows[static_cast<size_t>(i)]];
  return out;
}

Vector ArmView::mediator() const {
  Vector out(size());
  for (Index i = 0; i < size(); ++i) out[i] = parent->mediator()[rows[static_cast<size_t>(i)]];
  return out;
}

std::pair<ArmView, ArmView> split_by_treatment(const Dataset& ds) {
  ArmView control{&ds, 0, {}};
  ArmView treated{&ds, 1, {}};
  for (Index i = 0; i < ds.n(); ++i) {
    (ds.treatment()[static_cast<size_t>(i)] == 0 ? control : treated).rows.push_back(i);
  }
  if (control.rows.empty()) throw DegenerateArmError("control arm is empty");
  if (treated.rows.empty()) throw DegenerateArmError("treated arm is empty");
  return {std::move(control), std::move(treated)};
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

namespace {

// RFC-4180-ish field splitting with quoted fields.
std::vector<std::string> split_csv_line(const std::string& line, size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (in_quotes) throw IngestionError("unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(field));
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
  if (first == last) return false;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  RawTable table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      table.header = split_csv_line(line, line_no);
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != table.header.size()) {
      throw IngestionError("line " + std::to_string(line_no) + " has " +
                           std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw IngestionError("'" + path + "' has no header row");
  return table;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  RawTable table = read_table(path);
  const size_t n = table.rows.size();
  if (n == 0) throw IngestionError("'" + path + "' has no data rows");

  auto find_col = [&](const std::string& name) {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw SchemaError("column '" + name + "' not in header");
    return static_cast<size_t>(it - table.header.begin());
  };

  if (schema.treatment.empty()) throw SchemaError("schema names no treatment column");
  if (schema.outcome.empty()) throw SchemaError("schema names no outcome column");
  const size_t w_col = find_col(schema.treatment);
  const size_t y_col = find_col(schema.outcome);
  std::optional<size_t> m_col;
  if (schema.mediator) m_col = find_col(*schema.mediator);

  // Source covariate columns, in header order.
  std::vector<size_t> cov_cols;
  if (!schema.covariates.empty()) {
    for (const auto& name : schema.covariates) {
      size_t c = find_col(name);
      if (c == w_col || c == y_col || (m_col && c == *m_col)) {
        throw SchemaError("column '" + name + "' mapped to two roles");
      }
      cov_cols.push_back(c);
    }
  } else {
    for (size_t c = 0; c < table.header.size(); ++c) {
      if (c == w_col || c == y_col || (m_col && c == *m_col)) continue;
      cov_cols.push_back(c);
    }
  }
  if (cov_cols.empty()) throw SchemaError("schema leaves no covariate columns");

  auto cell = [&](size_t row, size_t col) -> const std::string& { return table.rows[row][col]; };
  auto recoded = [&](const std::string& col_name, const std::string& value) -> std::string {
    auto git = schema.recodes.find(col_name);
    if (git == schema.recodes.end()) return value;
    auto vit = git->second.find(value);
    return vit == git->second.end() ? value : vit->second;
  };
  auto bad_cell = [&](size_t row, size_t col, const std::string& why) -> IngestionError {
    return IngestionError(why + " in row " + std::to_string(row + 2) + ", column '" +
                          table.header[col] + "'");
  };

  // Column type follows the first data row: a numeric first cell makes the
  // column numeric (later unparseable cells are errors), a string makes it
  // categorical and one-hot expanded.
  std::vector<bool> numeric(cov_cols.size(), true);
  for (size_t j = 0; j < cov_cols.size(); ++j) {
    const std::string& raw = cell(0, cov_cols[j]);
    if (raw.empty()) throw bad_cell(0, cov_cols[j], "missing value");
    double v;
    numeric[j] = parse_double(raw, v);
  }

  std::vector<CovariateColumn> columns;
  std::vector<OneHotGroup> groups;
  std::vector<std::vector<double>> data;  // per expanded column

  for (size_t j = 0; j < cov_cols.size(); ++j) {
    const size_t src = cov_cols[j];
    const std::string& name = table.header[src];
    if (numeric[j]) {
      std::vector<double> col(n);
      for (size_t i = 0; i < n; ++i) {
        double v;
        if (!parse_double(cell(i, src), v)) throw bad_cell(i, src, "unparseable value");
        if (!std::isfinite(v)) throw bad_cell(i, src, "non-finite value");
        col[i] = v;
      }
      columns.push_back({name, ColumnKind::continuous, -1, ""});
      data.push_back(std::move(col));
    } else {
      std::set<std::string> level_set;
      std::vector<std::string> values(n);
      for (size_t i = 0; i < n; ++i) {
        const std::string& raw = cell(i, src);
        if (raw.empty()) throw bad_cell(i, src, "missing value");
        values[i] = recoded(name, raw);
        level_set.insert(values[i]);
      }
      OneHotGroup group;
      group.name = name;
      group.levels.assign(level_set.begin(), level_set.end());  // lexicographic
      const int group_id = static_cast<int>(groups.size());
      for (const auto& level : group.levels) {
        std::vector<double> col(n);
        for (size_t i = 0; i < n; ++i) col[i] = values[i] == level ? 1.0 : 0.0;
        group.columns.push_back(static_cast<int>(columns.size()));
        columns.push_back({name + "=" + level, ColumnKind::one_hot, group_id, level});
        data.push_back(std::move(col));
      }
      groups.push_back(std::move(group));
    }
  }

  Matrix covariates(static_cast<Index>(n), static_cast<Index>(columns.size()));
  for (size_t j = 0; j < data.size(); ++j) {
    for (size_t i = 0; i < n; ++i) covariates(static_cast<Index>(i), static_cast<Index>(j)) = data[j][i];
  }

  std::vector<int> treatment(n);
  for (size_t i = 0; i < n; ++i) {
    double v;
    if (!parse_double(cell(i, w_col), v)) throw bad_cell(i, w_col, "unparseable value");
    if (v != 0.0 && v != 1.0) {
      throw ValidationError("treatment value " + cell(i, w_col) + " in row " +
                            std::to_string(i + 2) + " is not 0 or 1");
    }
    treatment[i] = static_cast<int>(v);
  }

  Vector outcome(static_cast<Index>(n));
  for (size_t i = 0; i < n; ++i) {
    double v;
    if (!parse_double(cell(i, y_col), v)) throw bad_cell(i, y_col, "unparseable value");
    if (!std::isfinite(v)) throw bad_cell(i, y_col, "non-finite value");
    outcome[static_cast<Index>(i)] = v;
  }

  std::optional<Vector> mediator;
  if (m_col) {
    Vector m(static_cast<Index>(n));
    for (size_t i = 0; i < n; ++i) {
      double v;
      if (!parse_double(cell(i, *m_col), v)) throw bad_cell(i, *m_col, "unparseable value");
      if (!std::isfinite(v)) throw bad_cell(i, *m_col, "non-finite value");
      m[static_cast<Index>(i)] = v;
    }
    mediator = std::move(m);
  }

  return Dataset(std::move(covariates), std::move(treatment), std::move(outcome),
                 std::move(mediator), std::move(columns), std::move(groups));
}

void write_csv(const Dataset& ds, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");

  // Header: covariates (groups collapsed), then treatment/outcome/mediator.
  std::vector<std::string> header;
  std::vector<std::pair<bool, int>> emit;  // (is_group, column-or-group index)
  for (Index j = 0; j < ds.dim(); ++j) {
    const auto& col = ds.columns()[static_cast<size_t>(j)];
    if (col.kind == ColumnKind::continuous) {
      header.push_back(col.name);
      emit.push_back({false, static_cast<int>(j)});
    } else if (ds.groups()[static_cast<size_t>(col.group)].columns.front() == static_cast<int>(j)) {
      header.push_back(ds.groups()[static_cast<size_t>(col.group)].name);
      emit.push_back({true, col.group});
    }
  }
  header.push_back(schema.treatment);
  header.push_back(schema.outcome);
  if (ds.has_mediator()) {
    header.push_back(schema.mediator.value_or("m"));
  }
  for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << "\n";

  for (Index i = 0; i < ds.n(); ++i) {
    bool first = true;
    auto sep = [&] {
      if (!first) out << ",";
      first = false;
    };
    for (const auto& [is_group, idx] : emit) {
      sep();
      if (is_group) {
        const auto& g = ds.groups()[static_cast<size_t>(idx)];
        for (size_t l = 0; l < g.levels.size(); ++l) {
          if (ds.covariates()(i, g.columns[l]) == 1.0) {
            out << g.levels[l];
            break;
          }
        }
      } else {
        out << format_double(ds.covariates()(i, idx));
      }
    }
    sep();
    out << ds.treatment()[static_cast<size_t>(i)];
    sep();
    out << format_double(ds.outcome()[i]);
    if (ds.has_mediator()) {
      sep();
      out << format_double(ds.mediator()[i]);
    }
    out << "\n";
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace medlearn
