#pragma once
// Dataset representation, CSV ingestion, and leakage-free z-score
// normalization.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankalign/matrix.hpp"

namespace rankalign {

using RowIndices = std::vector<std::size_t>;

// A set of patients: features (n x m), a 0-100 rating, and an optional
// binary label. Treated as immutable once built.
struct Cohort {
  std::vector<std::string> ids;
  Matrix features;
  std::vector<std::string> feature_names;
  std::vector<double> rating;
  std::optional<std::vector<int>> binary_label;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t num_features() const noexcept { return feature_names.size(); }
  bool has_label() const noexcept { return binary_label.has_value(); }

  // Throws DataError naming the first violated invariant.
  void validate() const;

  RowIndices all_rows() const;

  friend bool operator==(const Cohort&, const Cohort&) = default;
};

// Which CSV columns play which role. Every other column is a feature.
struct ColumnRoles {
  std::string id = "id";
  std::string rating = "da";
  // Empty disables the label. A missing label column is only an error when
  // label_required is set.
  std::string label = "label";
  bool label_required = false;
};

Cohort load_cohort(const std::filesystem::path& path, const ColumnRoles& roles = {});
Cohort parse_cohort(std::istream& in, const ColumnRoles& roles = {},
                    const std::string& source = "<stream>");

// Writes `id,<features...>,da[,label]` with shortest round-trip number
// formatting, so load_cohort reproduces finite values bit for bit.
void write_cohort_csv(const Cohort& cohort, const std::filesystem::path& path);
void write_cohort_csv(const Cohort& cohort, std::ostream& out);

// Content hash of the canonical CSV serialization ("fnv1a64:<hex>").
std::string cohort_fingerprint(const Cohort& cohort);

// Generic CSV table: header plus raw string cells. Used for scoring files
// that carry features but no rating.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

// Per-feature mean and population standard deviation.
struct NormStats {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> constant;  // zero-variance columns map to 0

  std::size_t size() const noexcept { return means.size(); }
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

NormStats fit_norm_stats(const Cohort& cohort, std::span<const std::size_t> rows);
NormStats fit_norm_stats(const Matrix& features, std::span<const std::size_t> rows);

// (x - mean) / std per column; constant columns become 0. Rating and label
// pass through untouched.
Cohort apply_norm(const Cohort& cohort, const NormStats& stats);
Matrix apply_norm(const Matrix& features, const NormStats& stats);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
// Strict full-string parse; nullopt on any trailing garbage or non-finite.
std::optional<double> parse_double(std::string_view text);

}  // namespace rankalign
