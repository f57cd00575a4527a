#include "rankalign/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <thread>

#include "rankalign/error.hpp"
#include "rankalign/metrics.hpp"
#include "rankalign/seeding.hpp"
#include "folds.hpp"

namespace rankalign {
namespace {

std::size_t method_tag(Method method) { return static_cast<std::size_t>(method) + 1; }

// Runs task(i) for i in [0, count) on up to `jobs` threads. Each index is
// an independent unit writing to its own slot, so the outcome does not
// depend on scheduling. The first failure (lowest index) is rethrown.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> failures(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

std::optional<double> safe_metric(double (*metric)(std::span<const double>, std::span<const double>),
                                  std::span<const double> a, std::span<const double> b) {
  try {
    return metric(a, b);
  } catch (const DataError&) {
    return std::nullopt;  // constant score
  }
}

std::optional<MetricSummary> summarize(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  MetricSummary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const EmptyPairSetError& e) {
    throw EmptyPairSetError(context + ": " + e.what(), e.delta());
  } catch (const DataError& e) {
    throw DataError(context + ": " + e.what());
  }
}

nlohmann::json search_json(const HyperSearchSpec& search) {
  nlohmann::json doc;
  doc["c_grid"] = search.c_grid;
  doc["inner_folds"] = search.inner_folds;
  doc["criterion"] = search.criterion ? nlohmann::json(criterion_name(*search.criterion))
                                      : nlohmann::json("method_default");
  return doc;
}

}  // namespace

std::vector<std::size_t> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed,
                                    const std::vector<int>* labels) {
  if (folds < 2) throw DataError("folds must be >= 2");
  if (n < folds) {
    throw DataError("cannot split " + std::to_string(n) + " rows into " + std::to_string(folds) +
                    " folds");
  }
  return detail::assign_folds(n, folds, seed, labels);
}

CvResult cross_val_scores(const Cohort& cohort, Method method, double delta,
                          const HyperSearchSpec& search, std::uint64_t seed,
                          const CvOptions& options) {
  const std::size_t n = cohort.size();
  if (options.stratified && !cohort.binary_label) {
    throw DataError("stratified folds need a binary label");
  }
  CvResult result;
  result.fold_of = make_folds(n, options.folds, seed,
                              options.stratified ? &*cohort.binary_label : nullptr);
  result.scores.assign(n, 0.0);
  for (std::size_t f = 0; f < options.folds; ++f) {
    RowIndices train, test;
    for (std::size_t i = 0; i < n; ++i) (result.fold_of[i] == f ? test : train).push_back(i);
    TrainOptions train_opts = options.train;
    train_opts.seed = seed_mix(seed, method_tag(method), f);
    LinearModel model;
    try {
      model = fit_model(cohort, train, method, delta, search, train_opts);
    } catch (...) {
      rethrow_with_context("fold " + std::to_string(f) + " (delta=" + format_double(delta) + ")");
    }
    const auto held_out = score(model, cohort, test);
    for (std::size_t k = 0; k < test.size(); ++k) result.scores[test[k]] = held_out[k];
    result.models.push_back(std::move(model));
  }
  return result;
}

std::vector<Aggregate> compute_aggregates(std::span<const RunRecord> records) {
  struct Bucket {
    std::vector<double> correlation, spearman, auc, nonzero;
  };
  std::vector<std::pair<std::string, std::optional<double>>> order;
  std::map<std::pair<std::string, std::optional<double>>, Bucket> buckets;
  for (const auto& rec : records) {
    const auto key = std::make_pair(rec.method, rec.delta);
    auto [it, inserted] = buckets.try_emplace(key);
    if (inserted) order.push_back(key);
    if (rec.correlation) it->second.correlation.push_back(*rec.correlation);
    if (rec.spearman) it->second.spearman.push_back(*rec.spearman);
    if (rec.auc) it->second.auc.push_back(*rec.auc);
    if (rec.mean_nonzero) it->second.nonzero.push_back(*rec.mean_nonzero);
  }
  std::vector<Aggregate> out;
  for (const auto& key : order) {
    const auto& b = buckets.at(key);
    Aggregate agg;
    agg.method = key.first;
    agg.delta = key.second;
    agg.correlation = summarize(b.correlation);
    agg.spearman = summarize(b.spearman);
    agg.auc = summarize(b.auc);
    agg.mean_nonzero = summarize(b.nonzero);
    out.push_back(std::move(agg));
  }
  return out;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json doc;
  nlohmann::json names = nlohmann::json::array();
  for (Method m : methods) names.push_back(method_name(m));
  doc["methods"] = names;
  doc["delta"] = delta;
  doc["search"] = search_json(search);
  doc["folds"] = folds;
  doc["runs"] = runs;
  doc["base_seed"] = base_seed;
  doc["stratified"] = stratified;
  doc["global_tuning"] = global_tuning;
  doc["train"] = {{"epsilon", train.epsilon},
                  {"pair_cap", train.pair_cap},
                  {"patient_split", train.patient_split},
                  {"tol", train.tol},
                  {"max_epochs", train.max_epochs}};
  // jobs is deliberately absent: output must not depend on it.
  return doc;
}

EvalReport run_experiment(const Cohort& cohort, const ExperimentConfig& config) {
  if (config.runs < 1) throw DataError("runs must be >= 1");
  if (config.methods.empty()) throw DataError("no methods requested");
  config.search.validate();
  const bool labelled = cohort.has_label();
  for (Method m : config.methods) {
    if (m == Method::classifier_svm && !labelled) {
      throw DataError("classifier_svm needs a binary label column");
    }
  }

  // Optional global tuning: one c per method from the whole cohort.
  std::vector<HyperSearchSpec> searches(config.methods.size(), config.search);
  if (config.global_tuning && config.search.c_grid.size() > 1) {
    parallel_for(config.methods.size(), config.jobs, [&](std::size_t k) {
      TrainOptions opts = config.train;
      opts.seed = seed_mix(config.base_seed, 999, method_tag(config.methods[k]));
      const auto all = cohort.all_rows();
      const auto sel = select_c(cohort, all, config.methods[k], config.delta, config.search, opts);
      searches[k].c_grid = {sel.c};
    });
  }

  const std::size_t per_run = config.methods.size();
  const std::size_t units = config.runs * per_run;
  std::vector<RunRecord> method_records(units);
  std::vector<std::vector<double>> oof(config.keep_oof ? units : 0);
  CvOptions cv;
  cv.folds = config.folds;
  cv.stratified = config.stratified;
  cv.train = config.train;

  parallel_for(units, config.jobs, [&](std::size_t u) {
    const std::size_t run = u / per_run;
    const Method method = config.methods[u % per_run];
    const std::uint64_t seed = config.base_seed + run;
    CvResult cvr;
    try {
      cvr = cross_val_scores(cohort, method, config.delta, searches[u % per_run], seed, cv);
    } catch (...) {
      rethrow_with_context("run " + std::to_string(run) + ", " + std::string(method_name(method)));
    }
    RunRecord rec;
    rec.method = method_name(method);
    rec.run_index = run;
    rec.seed = seed;
    if (method == Method::ranking_svm) rec.delta = config.delta;
    rec.correlation = safe_metric(pearson, cvr.scores, cohort.rating);
    rec.spearman = safe_metric(spearman, cvr.scores, cohort.rating);
    if (labelled) rec.auc = roc_auc(cvr.scores, *cohort.binary_label);
    double nz = 0.0;
    for (const auto& m : cvr.models) nz += static_cast<double>(nonzero_count(m));
    rec.mean_nonzero = nz / static_cast<double>(cvr.models.size());
    method_records[u] = std::move(rec);
    if (config.keep_oof) oof[u] = std::move(cvr.scores);
  });

  EvalReport report;
  std::optional<double> raw_auc;
  if (labelled) raw_auc = roc_auc(cohort.rating, *cohort.binary_label);
  for (std::size_t run = 0; run < config.runs; ++run) {
    for (std::size_t k = 0; k < per_run; ++k) {
      const std::size_t u = run * per_run + k;
      report.records.push_back(method_records[u]);
      if (config.keep_oof) {
        report.oof.push_back({method_records[u].method, run, method_records[u].delta, oof[u]});
      }
    }
    if (labelled) {
      RunRecord raw;
      raw.method = std::string(kRawRatingMethod);
      raw.run_index = run;
      raw.seed = config.base_seed + run;
      raw.correlation = 1.0;
      raw.spearman = 1.0;
      raw.auc = raw_auc;
      report.records.push_back(raw);
      if (config.keep_oof) report.oof.push_back({raw.method, run, std::nullopt, cohort.rating});
    }
  }
  report.aggregates = compute_aggregates(report.records);
  report.config_echo = config.to_json();
  report.cohort_fingerprint = cohort_fingerprint(cohort);
  return report;
}

EvalReport sweep_delta(const Cohort& cohort, std::span<const double> deltas,
                       const ExperimentConfig& config) {
  if (deltas.empty()) throw DataError("sweep_delta: no delta values");
  EvalReport report;
  bool raw_taken = false;
  for (double delta : deltas) {
    ExperimentConfig cfg = config;
    cfg.methods = {Method::ranking_svm};
    cfg.delta = delta;
    EvalReport part;
    try {
      part = run_experiment(cohort, cfg);
    } catch (const EmptyPairSetError& e) {
      report.errors.push_back({delta, e.what()});
      continue;
    }
    // raw_da does not depend on δ; keep it once.
    for (auto& rec : part.records) {
      if (rec.method == kRawRatingMethod && raw_taken) continue;
      report.records.push_back(std::move(rec));
    }
    for (auto& s : part.oof) {
      if (s.method == kRawRatingMethod && raw_taken) continue;
      report.oof.push_back(std::move(s));
    }
    raw_taken = true;
  }
  report.aggregates = compute_aggregates(report.records);
  ExperimentConfig echo = config;
  echo.methods = {Method::ranking_svm};
  report.config_echo = echo.to_json();
  report.config_echo.erase("delta");
  report.config_echo["deltas"] = std::vector<double>(deltas.begin(), deltas.end());
  report.cohort_fingerprint = cohort_fingerprint(cohort);
  return report;
}

std::optional<double> auc_spread(const EvalReport& report) {
  std::optional<double> lo, hi;
  for (const auto& agg : report.aggregates) {
    if (agg.method != method_name(Method::ranking_svm) || !agg.auc) continue;
    lo = lo ? std::min(*lo, agg.auc->mean) : agg.auc->mean;
    hi = hi ? std::max(*hi, agg.auc->mean) : agg.auc->mean;
  }
  if (!lo) return std::nullopt;
  return *hi - *lo;
}

}  // namespace rankalign
