#pragma once
// Cross-validated evaluation: out-of-fold scores, repeated-split
// experiments, and the δ stability sweep.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rankalign/cohort.hpp"
#include "rankalign/models.hpp"

namespace rankalign {

inline constexpr std::string_view kRawRatingMethod = "raw_da";

struct CvResult {
  std::vector<double> scores;           // out-of-fold, indexed by cohort row
  std::vector<std::size_t> fold_of;     // held-out fold of each row
  std::vector<LinearModel> models;      // one per fold
};

// Seeded shuffled partition of n rows into `folds` parts. With labels,
// the partition is stratified by class.
std::vector<std::size_t> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed,
                                    const std::vector<int>* labels = nullptr);

struct CvOptions {
  std::size_t folds = 5;
  bool stratified = false;
  TrainOptions train;
};

// Every row is scored exactly once, by the model fitted on the other folds.
// An empty pair set in any fold is rethrown with the fold index.
CvResult cross_val_scores(const Cohort& cohort, Method method, double delta,
                          const HyperSearchSpec& search, std::uint64_t seed,
                          const CvOptions& options = {});

struct RunRecord {
  std::string method;
  std::size_t run_index = 0;
  std::uint64_t seed = 0;
  std::optional<double> delta;
  std::optional<double> correlation;  // Pearson; absent when the score is constant
  std::optional<double> spearman;
  std::optional<double> auc;           // absent without a binary label
  std::optional<double> mean_nonzero;  // absent for raw_da

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;

  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

struct Aggregate {
  std::string method;
  std::optional<double> delta;
  std::optional<MetricSummary> correlation;
  std::optional<MetricSummary> spearman;
  std::optional<MetricSummary> auc;
  std::optional<MetricSummary> mean_nonzero;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct SweepError {
  double delta = 0.0;
  std::string message;

  friend bool operator==(const SweepError&, const SweepError&) = default;
};

// Out-of-fold scores of one method in one run, kept for CSV export.
struct OofScores {
  std::string method;
  std::size_t run_index = 0;
  std::optional<double> delta;
  std::vector<double> scores;
};

struct EvalReport {
  std::vector<RunRecord> records;
  std::vector<Aggregate> aggregates;
  nlohmann::json config_echo;
  std::string cohort_fingerprint;
  std::vector<SweepError> errors;
  std::vector<OofScores> oof;  // filled only when requested; not serialized in JSON
};

// Per (method, delta) group, in order of first appearance.
std::vector<Aggregate> compute_aggregates(std::span<const RunRecord> records);

struct ExperimentConfig {
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  double delta = kDefaultDelta;
  HyperSearchSpec search;
  std::size_t folds = 5;
  std::size_t runs = 100;
  std::uint64_t base_seed = 42;
  bool stratified = false;
  // Select c once on the whole cohort instead of inside each training fold.
  bool global_tuning = false;
  TrainOptions train;
  unsigned jobs = 1;
  bool keep_oof = false;

  nlohmann::json to_json() const;
};

// For run r the split seed is base_seed + r; every method shares the split.
// raw_da is added whenever the cohort has a label.
EvalReport run_experiment(const Cohort& cohort, const ExperimentConfig& config);

// run_experiment for ranking_svm at each δ with shared seeds. A δ whose
// folds run out of pairs is recorded in `errors` and skipped.
EvalReport sweep_delta(const Cohort& cohort, std::span<const double> deltas,
                       const ExperimentConfig& config);

// Max minus min over δ of the mean ranking_svm AUC, when available.
std::optional<double> auc_spread(const EvalReport& report);

}  // namespace rankalign
