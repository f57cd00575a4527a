#include "rankalign/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "rankalign/error.hpp"

namespace rankalign {
namespace {

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  if (quoted) throw DataError(where + ": unterminated quoted field");
  cells.push_back(std::move(cell));
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    auto cells = split_csv_line(line, where);
    for (auto& c : cells) c = trim(std::move(c));
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      std::unordered_set<std::string> seen;
      for (const auto& h : table.header) {
        if (!seen.insert(h).second) throw DataError(where + ": duplicate column name '" + h + "'");
      }
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(where + ": expected " + std::to_string(table.header.size()) +
                      " fields, found " + std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw DataError(source + ": missing header row");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, path.string());
}

void Cohort::validate() const {
  const std::size_t n = ids.size();
  if (features.rows() != n || rating.size() != n) {
    throw DataError("cohort row counts disagree");
  }
  if (features.cols() != feature_names.size()) {
    throw DataError("feature_names length does not match feature matrix width");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen.insert(ids[i]).second) throw DataError("duplicate id '" + ids[i] + "'");
    if (!(rating[i] >= 0.0 && rating[i] <= 100.0)) {
      throw DataError("rating of '" + ids[i] + "' outside [0,100]: " + format_double(rating[i]));
    }
    for (double v : features.row(i)) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value for '" + ids[i] + "'");
    }
  }
  if (binary_label) {
    if (binary_label->size() != n) throw DataError("binary_label length does not match cohort");
    for (std::size_t i = 0; i < n; ++i) {
      const int v = (*binary_label)[i];
      if (v != 0 && v != 1) throw DataError("label of '" + ids[i] + "' not in {0,1}");
    }
  }
}

RowIndices Cohort::all_rows() const {
  RowIndices rows(size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

Cohort parse_cohort(std::istream& in, const ColumnRoles& roles, const std::string& source) {
  const CsvTable table = read_csv(in, source);

  const auto id_col = table.column(roles.id);
  if (!id_col) throw DataError(source + ": id column '" + roles.id + "' not found");
  const auto rating_col = table.column(roles.rating);
  if (!rating_col) throw DataError(source + ": rating column '" + roles.rating + "' not found");
  if (*rating_col == *id_col) throw DataError(source + ": id and rating roles name the same column");
  std::optional<std::size_t> label_col;
  if (!roles.label.empty()) {
    label_col = table.column(roles.label);
    if (!label_col && roles.label_required) {
      throw DataError(source + ": label column '" + roles.label + "' not found");
    }
    if (label_col && (*label_col == *id_col || *label_col == *rating_col)) {
      throw DataError(source + ": label role overlaps another role");
    }
  }

  std::vector<std::size_t> feature_cols;
  Cohort cohort;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *id_col || c == *rating_col || (label_col && c == *label_col)) continue;
    feature_cols.push_back(c);
    cohort.feature_names.push_back(table.header[c]);
  }

  const std::size_t n = table.rows.size();
  cohort.features = Matrix(n, feature_cols.size());
  cohort.rating.resize(n);
  if (label_col) cohort.binary_label.emplace(n);
  std::unordered_set<std::string> seen;

  for (std::size_t r = 0; r < n; ++r) {
    const auto& cells = table.rows[r];
    const std::string where = source + ": data row " + std::to_string(r + 1);
    const std::string& id = cells[*id_col];
    if (id.empty()) throw DataError(where + ": empty id");
    if (!seen.insert(id).second) throw DataError(where + ": duplicate id '" + id + "'");
    cohort.ids.push_back(id);

    const auto rating = parse_double(cells[*rating_col]);
    if (!rating) {
      throw DataError(where + ": rating '" + cells[*rating_col] + "' is not a finite number");
    }
    if (*rating < 0.0 || *rating > 100.0) {
      throw DataError(where + ": rating " + cells[*rating_col] + " outside [0,100]");
    }
    cohort.rating[r] = *rating;

    if (label_col) {
      const auto label = parse_double(cells[*label_col]);
      if (!label || (*label != 0.0 && *label != 1.0)) {
        throw DataError(where + ": label '" + cells[*label_col] + "' not in {0,1}");
      }
      (*cohort.binary_label)[r] = *label == 1.0 ? 1 : 0;
    }

    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::string& cell = cells[feature_cols[f]];
      const auto value = parse_double(cell);
      if (!value) {
        throw DataError(where + ": feature '" + cohort.feature_names[f] + "' value '" + cell +
                        "' is not a finite number");
      }
      cohort.features(r, f) = *value;
    }
  }
  cohort.validate();
  return cohort;
}

Cohort load_cohort(const std::filesystem::path& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_cohort(in, roles, path.string());
}

void write_cohort_csv(const Cohort& cohort, std::ostream& out) {
  out << "id";
  for (const auto& name : cohort.feature_names) out << ',' << quote_if_needed(name);
  out << ",da";
  if (cohort.binary_label) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out << quote_if_needed(cohort.ids[i]);
    for (double v : cohort.features.row(i)) out << ',' << format_double(v);
    out << ',' << format_double(cohort.rating[i]);
    if (cohort.binary_label) out << ',' << (*cohort.binary_label)[i];
    out << '\n';
  }
}

void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_cohort_csv(cohort, out);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::string cohort_fingerprint(const Cohort& cohort) {
  std::ostringstream canon;
  write_cohort_csv(cohort, canon);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon.str()) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return std::string("fnv1a64:") + buf;
}

NormStats fit_norm_stats(const Matrix& features, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("fit_norm_stats: empty row subset");
  const std::size_t m = features.cols();
  NormStats stats;
  stats.means.assign(m, 0.0);
  stats.stds.assign(m, 0.0);
  stats.constant.assign(m, false);
  const double count = static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    const auto x = features.row(r);
    for (std::size_t j = 0; j < m; ++j) stats.means[j] += x[j];
  }
  for (auto& mean : stats.means) mean /= count;
  // Two-pass variance; a column of identical values gives exactly 0.
  std::vector<double> ss(m, 0.0);
  for (std::size_t r : rows) {
    const auto x = features.row(r);
    for (std::size_t j = 0; j < m; ++j) {
      const double d = x[j] - stats.means[j];
      ss[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    stats.stds[j] = std::sqrt(ss[j] / count);
    const double scale = std::max(1.0, std::fabs(stats.means[j]));
    if (stats.stds[j] <= 1e-12 * scale) {
      stats.constant[j] = true;
    }
  }
  return stats;
}

NormStats fit_norm_stats(const Cohort& cohort, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    if (r >= cohort.size()) throw DataError("fit_norm_stats: row index out of range");
  }
  return fit_norm_stats(cohort.features, rows);
}

Matrix apply_norm(const Matrix& features, const NormStats& stats) {
  if (stats.size() != features.cols()) {
    throw DataError("apply_norm: stats have " + std::to_string(stats.size()) +
                    " features, data has " + std::to_string(features.cols()));
  }
  Matrix out(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto x = features.row(i);
    auto z = out.row(i);
    for (std::size_t j = 0; j < features.cols(); ++j) {
      z[j] = stats.constant[j] ? 0.0 : (x[j] - stats.means[j]) / stats.stds[j];
    }
  }
  return out;
}

Cohort apply_norm(const Cohort& cohort, const NormStats& stats) {
  Cohort out = cohort;
  out.features = apply_norm(cohort.features, stats);
  return out;
}

}  // namespace rankalign
