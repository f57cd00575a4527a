#pragma once
// Deterministic serialization of evaluation reports: stable key order,
// shortest round-trip number formatting, no timestamps.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "rankalign/eval.hpp"

namespace rankalign {

enum class ReportFormat { json, csv };

nlohmann::json report_to_json(const EvalReport& report);
// Inverse of report_to_json (out-of-fold scores are not part of the document).
EvalReport report_from_json(const nlohmann::json& doc);

std::string report_to_string(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format);
EvalReport load_report(const std::filesystem::path& path);

// One row per RunRecord.
void write_records_csv(const EvalReport& report, std::ostream& out);
// id,method,run,score for every kept out-of-fold score vector. In sweep
// reports the method is tagged with its δ, e.g. "ranking_svm@20".
void write_oof_csv(const EvalReport& report, const Cohort& cohort,
                   const std::filesystem::path& path);

}  // namespace rankalign
