#include "rankalign/report_io.hpp"

#include <fstream>
#include <sstream>

#include "rankalign/error.hpp"

namespace rankalign {
namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(); }

std::optional<double> opt_double(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  return doc.at(key).get<double>();
}

json summary_json(const std::optional<MetricSummary>& s) {
  if (!s) return json();
  return {{"mean", s->mean}, {"std", s->std}, {"count", s->count}};
}

std::optional<MetricSummary> summary_from(const json& doc, const char* key) {
  if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
  const auto& s = doc.at(key);
  return MetricSummary{s.at("mean").get<double>(), s.at("std").get<double>(),
                       s.at("count").get<std::size_t>()};
}

std::string csv_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

json report_to_json(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"method", r.method},
                       {"run_index", r.run_index},
                       {"seed", r.seed},
                       {"delta", opt(r.delta)},
                       {"correlation", opt(r.correlation)},
                       {"spearman", opt(r.spearman)},
                       {"auc", opt(r.auc)},
                       {"mean_nonzero", opt(r.mean_nonzero)}});
  }
  json aggregates = json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back({{"method", a.method},
                          {"delta", opt(a.delta)},
                          {"correlation", summary_json(a.correlation)},
                          {"spearman", summary_json(a.spearman)},
                          {"auc", summary_json(a.auc)},
                          {"mean_nonzero", summary_json(a.mean_nonzero)}});
  }
  json errors = json::array();
  for (const auto& e : report.errors) errors.push_back({{"delta", e.delta}, {"message", e.message}});
  json doc;
  doc["cohort_fingerprint"] = report.cohort_fingerprint;
  doc["config"] = report.config_echo;
  doc["records"] = std::move(records);
  doc["aggregates"] = std::move(aggregates);
  doc["errors"] = std::move(errors);
  return doc;
}

EvalReport report_from_json(const json& doc) {
  try {
    EvalReport report;
    report.cohort_fingerprint = doc.at("cohort_fingerprint").get<std::string>();
    report.config_echo = doc.at("config");
    for (const auto& r : doc.at("records")) {
      RunRecord rec;
      rec.method = r.at("method").get<std::string>();
      rec.run_index = r.at("run_index").get<std::size_t>();
      rec.seed = r.at("seed").get<std::uint64_t>();
      rec.delta = opt_double(r, "delta");
      rec.correlation = opt_double(r, "correlation");
      rec.spearman = opt_double(r, "spearman");
      rec.auc = opt_double(r, "auc");
      rec.mean_nonzero = opt_double(r, "mean_nonzero");
      report.records.push_back(std::move(rec));
    }
    for (const auto& a : doc.at("aggregates")) {
      Aggregate agg;
      agg.method = a.at("method").get<std::string>();
      agg.delta = opt_double(a, "delta");
      agg.correlation = summary_from(a, "correlation");
      agg.spearman = summary_from(a, "spearman");
      agg.auc = summary_from(a, "auc");
      agg.mean_nonzero = summary_from(a, "mean_nonzero");
      report.aggregates.push_back(std::move(agg));
    }
    for (const auto& e : doc.at("errors")) {
      report.errors.push_back({e.at("delta").get<double>(), e.at("message").get<std::string>()});
    }
    return report;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report document: ") + e.what());
  }
}

void write_records_csv(const EvalReport& report, std::ostream& out) {
  out << "method,run_index,seed,delta,correlation,spearman,auc,mean_nonzero\n";
  for (const auto& r : report.records) {
    out << r.method << ',' << r.run_index << ',' << r.seed << ',' << csv_opt(r.delta) << ','
        << csv_opt(r.correlation) << ',' << csv_opt(r.spearman) << ',' << csv_opt(r.auc) << ','
        << csv_opt(r.mean_nonzero) << '\n';
  }
}

std::string report_to_string(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::json) return report_to_json(report).dump(2) + "\n";
  std::ostringstream out;
  write_records_csv(report, out);
  return out.str();
}

void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
  const std::string text = report_to_string(report, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_oof_csv(const EvalReport& report, const Cohort& cohort,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "id,method,run,score\n";
  for (const auto& s : report.oof) {
    // Sweep reports carry several δ per method; the tag keeps them apart.
    const std::string tag =
        s.delta && report.config_echo.contains("deltas") ? s.method + "@" + format_double(*s.delta)
                                                         : s.method;
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      out << cohort.ids[i] << ',' << tag << ',' << s.run_index << ',' << format_double(s.scores[i])
          << '\n';
    }
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace rankalign
