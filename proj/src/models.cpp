#include "rankalign/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rankalign/error.hpp"
#include "rankalign/kernels.hpp"
#include "rankalign/metrics.hpp"
#include "rankalign/seeding.hpp"
#include "folds.hpp"

namespace rankalign {
namespace {

constexpr double kNonzeroGuard = 1e-10;

struct Problem {
  Matrix X;
  std::vector<double> y;
};

SolverConfig solver_config(Method method, double c, const TrainOptions& opts, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.c = c;
  cfg.tol = opts.tol;
  cfg.max_epochs = opts.max_epochs;
  cfg.seed = seed;
  switch (method) {
    case Method::ranking_svm:
      cfg.loss = Loss::squared_hinge;
      cfg.fit_intercept = false;
      break;
    case Method::linear_regression:
      cfg.loss = Loss::squared;
      cfg.fit_intercept = true;
      break;
    case Method::svr:
      cfg.loss = Loss::epsilon_insensitive;
      cfg.epsilon = opts.epsilon;
      cfg.fit_intercept = true;
      break;
    case Method::classifier_svm:
      cfg.loss = Loss::squared_hinge;
      cfg.fit_intercept = true;
      break;
  }
  return cfg;
}

Problem pair_problem(const PairSet& pairs) {
  Problem p{pairs.diffs, {}};
  p.y.reserve(pairs.size());
  for (int s : pairs.signs) p.y.push_back(static_cast<double>(s));
  return p;
}

// Rows of a normalized cohort as a regression or classification problem.
Problem row_problem(const Cohort& norm, std::span<const std::size_t> rows, Method method) {
  Problem p{norm.features.select_rows(rows), {}};
  p.y.reserve(rows.size());
  for (std::size_t r : rows) {
    if (method == Method::classifier_svm) {
      p.y.push_back((*norm.binary_label)[r] == 1 ? 1.0 : -1.0);
    } else {
      p.y.push_back(norm.rating[r]);
    }
  }
  return p;
}

Problem take(const Problem& src, std::span<const std::size_t> positions) {
  Problem p{src.X.select_rows(positions), {}};
  p.y.reserve(positions.size());
  for (std::size_t i : positions) p.y.push_back(src.y[i]);
  return p;
}

std::vector<double> predict(const Matrix& X, std::span<const double> w, double b) {
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = kernels::dot(X.row(i), w) + b;
  return out;
}

double pairwise_accuracy(const Problem& test, std::span<const double> w) {
  double hits = 0.0;
  for (std::size_t p = 0; p < test.X.rows(); ++p) {
    const double margin = kernels::dot(test.X.row(p), w) * test.y[p];
    hits += margin > 0.0 ? 1.0 : (margin == 0.0 ? 0.5 : 0.0);
  }
  return hits / static_cast<double>(test.X.rows());
}

// Higher is better for every criterion.
double evaluate(Criterion criterion, const Problem& test, const FitResult& fit) {
  switch (criterion) {
    case Criterion::pairwise_accuracy:
      return pairwise_accuracy(test, fit.weights);
    case Criterion::mse: {
      const auto pred = predict(test.X, fit.weights, fit.intercept);
      double sse = 0.0;
      for (std::size_t i = 0; i < pred.size(); ++i) sse += (pred[i] - test.y[i]) * (pred[i] - test.y[i]);
      return -sse / static_cast<double>(pred.size());
    }
    case Criterion::auc: {
      const auto pred = predict(test.X, fit.weights, fit.intercept);
      std::vector<int> labels;
      labels.reserve(test.y.size());
      for (double v : test.y) labels.push_back(v > 0.0 ? 1 : 0);
      return roc_auc(pred, labels);
    }
  }
  return 0.0;
}

std::vector<std::size_t> assign_folds(std::size_t count, int folds, std::uint64_t seed,
                                      const std::vector<int>* labels = nullptr) {
  return detail::assign_folds(count, static_cast<std::size_t>(folds), seed, labels);
}

struct InnerSplit {
  Problem train;
  Problem test;
};

struct PathResult {
  CSelection selection;
  std::optional<WarmStart> warm_at_choice;  // first fold's fit at the chosen c
};

// Fits the c path on every split (ascending c, warm started) and applies the
// one-standard-error rule. Splits with an empty side are skipped by callers.
PathResult run_path(const std::vector<InnerSplit>& splits, Method method, Criterion criterion,
                    const HyperSearchSpec& search, const TrainOptions& opts,
                    std::uint64_t seed) {
  const auto& grid = search.c_grid;
  PathResult out;
  if (splits.empty()) {
    // Nothing to validate on: fall back to the weakest regularization.
    out.selection.c = grid.back();
    out.selection.best_index = grid.size() - 1;
    out.selection.mean_score.assign(grid.size(), 0.0);
    out.selection.std_error.assign(grid.size(), 0.0);
    return out;
  }
  std::vector<std::vector<double>> scores(grid.size());
  std::vector<WarmStart> first_fold(grid.size());
  for (std::size_t s = 0; s < splits.size(); ++s) {
    std::optional<WarmStart> warm;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto cfg = solver_config(method, grid[g], opts, seed_mix(seed, s, g));
      const auto fit = fit_l1_linear(splits[s].train.X, splits[s].train.y, cfg,
                                     warm ? &*warm : nullptr);
      scores[g].push_back(evaluate(criterion, splits[s].test, fit));
      warm = WarmStart{fit.weights, fit.intercept};
      if (s == 0) first_fold[g] = *warm;
    }
  }
  auto& sel = out.selection;
  for (const auto& per_fold : scores) {
    const double k = static_cast<double>(per_fold.size());
    const double mean = std::accumulate(per_fold.begin(), per_fold.end(), 0.0) / k;
    double ss = 0.0;
    for (double v : per_fold) ss += (v - mean) * (v - mean);
    const double sd = per_fold.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    sel.mean_score.push_back(mean);
    sel.std_error.push_back(sd / std::sqrt(k));
  }
  sel.best_index = one_standard_error_pick(sel.mean_score, sel.std_error);
  sel.c = grid[sel.best_index];
  out.warm_at_choice = first_fold[sel.best_index];
  return out;
}

std::vector<InnerSplit> pair_splits(const Problem& all, int folds, std::uint64_t seed) {
  const auto fold_of = assign_folds(all.y.size(), folds, seed);
  std::vector<InnerSplit> splits;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      (fold_of[i] == static_cast<std::size_t>(f) ? test : train).push_back(i);
    }
    if (train.empty() || test.empty()) continue;
    splits.push_back({take(all, train), take(all, test)});
  }
  return splits;
}

// Patient-level inner split: pairs are built within the inner training
// patients and evaluated on pairs within the held-out patients.
std::vector<InnerSplit> patient_splits(const Cohort& norm, std::span<const std::size_t> rows,
                                       double delta, int folds, const TrainOptions& opts,
                                       std::uint64_t seed) {
  const auto fold_of = assign_folds(rows.size(), folds, seed);
  std::vector<InnerSplit> splits;
  for (int f = 0; f < folds; ++f) {
    RowIndices train, test;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (fold_of[i] == static_cast<std::size_t>(f) ? test : train).push_back(rows[i]);
    }
    if (train.size() < 2 || test.size() < 2) continue;
    try {
      auto train_pairs = subsample_pairs(build_pairs(norm, train, delta), opts.pair_cap,
                                         seed_mix(seed, 101, f));
      auto test_pairs = build_pairs(norm, test, delta);
      splits.push_back({pair_problem(train_pairs), pair_problem(test_pairs)});
    } catch (const EmptyPairSetError&) {
      continue;
    }
  }
  return splits;
}

std::vector<InnerSplit> row_splits(const Cohort& norm, std::span<const std::size_t> rows,
                                   Method method, int folds, std::uint64_t seed) {
  const Problem all = row_problem(norm, rows, method);
  std::vector<int> labels;
  if (method == Method::classifier_svm) {
    for (double v : all.y) labels.push_back(v > 0.0 ? 1 : 0);
  }
  const auto fold_of =
      assign_folds(rows.size(), folds, seed, labels.empty() ? nullptr : &labels);
  std::vector<InnerSplit> splits;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      (fold_of[i] == static_cast<std::size_t>(f) ? test : train).push_back(i);
    }
    if (train.empty() || test.empty()) continue;
    InnerSplit split{take(all, train), take(all, test)};
    if (method == Method::classifier_svm) {
      const auto positives = std::count(split.test.y.begin(), split.test.y.end(), 1.0);
      if (positives == 0 || positives == static_cast<long>(split.test.y.size())) continue;
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

void check_rows(const Cohort& cohort, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("no training rows");
  for (std::size_t r : rows) {
    if (r >= cohort.size()) throw DataError("training row index out of range");
  }
}

struct Prepared {
  NormStats stats;
  Cohort norm;
};

Prepared prepare(const Cohort& cohort, std::span<const std::size_t> rows) {
  check_rows(cohort, rows);
  Prepared p;
  p.stats = fit_norm_stats(cohort, rows);
  // Only the training rows are normalized; the rest of the cohort is never read.
  p.norm.ids = cohort.ids;
  p.norm.feature_names = cohort.feature_names;
  p.norm.rating.assign(cohort.size(), 0.0);
  p.norm.features = Matrix(cohort.size(), cohort.num_features());
  if (cohort.binary_label) p.norm.binary_label.emplace(cohort.size(), 0);
  for (std::size_t r : rows) {
    p.norm.rating[r] = cohort.rating[r];
    if (cohort.binary_label) (*p.norm.binary_label)[r] = (*cohort.binary_label)[r];
    const auto x = cohort.features.row(r);
    auto z = p.norm.features.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) {
      z[j] = p.stats.constant[j] ? 0.0 : (x[j] - p.stats.means[j]) / p.stats.stds[j];
    }
  }
  return p;
}

LinearModel finish(Method method, const Cohort& cohort, NormStats stats, const FitResult& fit,
                   double c, std::optional<double> delta) {
  LinearModel model;
  model.method = method;
  model.weights = fit.weights;
  model.intercept = method == Method::ranking_svm ? 0.0 : fit.intercept;
  model.norm_stats = std::move(stats);
  model.feature_names = cohort.feature_names;
  model.delta_used = delta;
  model.c_used = c;
  return model;
}

struct RankingSetup {
  Prepared prep;
  Problem all;
};

RankingSetup ranking_setup(const Cohort& cohort, std::span<const std::size_t> rows, double delta,
                           const TrainOptions& opts) {
  RankingSetup s{prepare(cohort, rows), {}};
  const auto pairs = subsample_pairs(build_pairs(s.prep.norm, rows, delta), opts.pair_cap,
                                     seed_mix(opts.seed, 100));
  s.all = pair_problem(pairs);
  return s;
}

PathResult ranking_path(const RankingSetup& s, std::span<const std::size_t> rows, double delta,
                        const HyperSearchSpec& search, const TrainOptions& opts) {
  const Criterion criterion = search.criterion.value_or(Criterion::pairwise_accuracy);
  const auto splits = opts.patient_split
                          ? patient_splits(s.prep.norm, rows, delta, search.inner_folds, opts,
                                           seed_mix(opts.seed, 1))
                          : pair_splits(s.all, search.inner_folds, seed_mix(opts.seed, 1));
  return run_path(splits, Method::ranking_svm, criterion, search, opts, seed_mix(opts.seed, 2));
}

PathResult baseline_path(const Prepared& prep, std::span<const std::size_t> rows, Method method,
                         const HyperSearchSpec& search, const TrainOptions& opts) {
  const Criterion criterion = search.criterion.value_or(default_criterion(method));
  const auto splits = row_splits(prep.norm, rows, method, search.inner_folds, seed_mix(opts.seed, 1));
  return run_path(splits, method, criterion, search, opts, seed_mix(opts.seed, 2));
}

void check_baseline(const Cohort& cohort, std::span<const std::size_t> rows, Method method) {
  if (method == Method::ranking_svm) throw DataError("fit_baseline: ranking_svm is not a baseline");
  if (method == Method::classifier_svm && !cohort.binary_label) {
    throw DataError("classifier_svm needs a binary label column");
  }
  check_rows(cohort, rows);
}

}  // namespace

std::string_view method_name(Method method) noexcept {
  switch (method) {
    case Method::ranking_svm:
      return "ranking_svm";
    case Method::linear_regression:
      return "linear_regression";
    case Method::svr:
      return "svr";
    case Method::classifier_svm:
      return "classifier_svm";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw DataError("unknown method '" + std::string(name) + "'");
}

std::string_view criterion_name(Criterion criterion) noexcept {
  switch (criterion) {
    case Criterion::pairwise_accuracy:
      return "pairwise_accuracy";
    case Criterion::mse:
      return "mse";
    case Criterion::auc:
      return "auc";
  }
  return "unknown";
}

Criterion default_criterion(Method method) noexcept {
  switch (method) {
    case Method::ranking_svm:
      return Criterion::pairwise_accuracy;
    case Method::classifier_svm:
      return Criterion::auc;
    default:
      return Criterion::mse;
  }
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int e = -10; e <= 4; ++e) grid.push_back(std::ldexp(1.0, e));
  return grid;
}

void HyperSearchSpec::validate() const {
  if (c_grid.empty()) throw DataError("c grid is empty");
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > 0.0) || !std::isfinite(c_grid[i])) throw DataError("c grid values must be > 0");
    if (i > 0 && !(c_grid[i] > c_grid[i - 1])) throw DataError("c grid must be strictly increasing");
  }
  if (inner_folds < 2) throw DataError("inner_folds must be >= 2");
}

std::size_t one_standard_error_pick(std::span<const double> mean_score,
                                    std::span<const double> std_error) {
  if (mean_score.empty()) return 0;
  std::size_t best = 0;
  for (std::size_t i = 1; i < mean_score.size(); ++i) {
    if (mean_score[i] > mean_score[best]) best = i;
  }
  const double threshold = mean_score[best] - std_error[best];
  for (std::size_t i = 0; i < mean_score.size(); ++i) {
    if (mean_score[i] >= threshold) return i;
  }
  return best;
}

CSelection select_c(const Cohort& cohort, std::span<const std::size_t> rows, Method method,
                    double delta, const HyperSearchSpec& search, const TrainOptions& options) {
  search.validate();
  if (method == Method::ranking_svm) {
    const auto setup = ranking_setup(cohort, rows, delta, options);
    return ranking_path(setup, rows, delta, search, options).selection;
  }
  check_baseline(cohort, rows, method);
  const auto prep = prepare(cohort, rows);
  return baseline_path(prep, rows, method, search, options).selection;
}

LinearModel fit_ranking_svm(const Cohort& cohort, std::span<const std::size_t> rows, double delta,
                            const HyperSearchSpec& search, const TrainOptions& options) {
  search.validate();
  auto setup = ranking_setup(cohort, rows, delta, options);
  double c = search.c_grid.front();
  std::optional<WarmStart> warm;
  if (search.c_grid.size() > 1) {
    auto path = ranking_path(setup, rows, delta, search, options);
    c = path.selection.c;
    warm = std::move(path.warm_at_choice);
  }
  const auto cfg = solver_config(Method::ranking_svm, c, options, seed_mix(options.seed, 3));
  const auto fit = fit_l1_linear(setup.all.X, setup.all.y, cfg, warm ? &*warm : nullptr);
  return finish(Method::ranking_svm, cohort, std::move(setup.prep.stats), fit, c, delta);
}

LinearModel fit_baseline(const Cohort& cohort, std::span<const std::size_t> rows, Method method,
                         const HyperSearchSpec& search, const TrainOptions& options) {
  search.validate();
  check_baseline(cohort, rows, method);
  auto prep = prepare(cohort, rows);
  double c = search.c_grid.front();
  std::optional<WarmStart> warm;
  if (search.c_grid.size() > 1) {
    auto path = baseline_path(prep, rows, method, search, options);
    c = path.selection.c;
    warm = std::move(path.warm_at_choice);
  }
  const Problem all = row_problem(prep.norm, rows, method);
  const auto cfg = solver_config(method, c, options, seed_mix(options.seed, 3));
  const auto fit = fit_l1_linear(all.X, all.y, cfg, warm ? &*warm : nullptr);
  return finish(method, cohort, std::move(prep.stats), fit, c, std::nullopt);
}

LinearModel fit_model(const Cohort& cohort, std::span<const std::size_t> rows, Method method,
                      double delta, const HyperSearchSpec& search, const TrainOptions& options) {
  if (method == Method::ranking_svm) return fit_ranking_svm(cohort, rows, delta, search, options);
  return fit_baseline(cohort, rows, method, search, options);
}

std::vector<double> score_features(const LinearModel& model, const Matrix& raw_features) {
  if (raw_features.cols() != model.weights.size() ||
      model.norm_stats.size() != model.weights.size()) {
    throw DataError("score: model has " + std::to_string(model.weights.size()) +
                    " features, data has " + std::to_string(raw_features.cols()));
  }
  const Matrix z = apply_norm(raw_features, model.norm_stats);
  return predict(z, model.weights, model.intercept);
}

std::vector<double> score(const LinearModel& model, const Cohort& cohort,
                          std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    if (r >= cohort.size()) throw DataError("score: row index out of range");
  }
  return score_features(model, cohort.features.select_rows(rows));
}

std::vector<double> score(const LinearModel& model, const Cohort& cohort) {
  return score_features(model, cohort.features);
}

std::size_t nonzero_count(const LinearModel& model) {
  return static_cast<std::size_t>(std::count_if(model.weights.begin(), model.weights.end(),
                                                [](double w) { return std::fabs(w) > kNonzeroGuard; }));
}

nlohmann::json model_to_json(const LinearModel& model) {
  nlohmann::json doc;
  doc["method"] = method_name(model.method);
  doc["delta_used"] = model.delta_used ? nlohmann::json(*model.delta_used) : nlohmann::json();
  doc["c_used"] = model.c_used;
  doc["feature_names"] = model.feature_names;
  doc["weights"] = model.weights;
  doc["intercept"] = model.intercept;
  nlohmann::json constant = nlohmann::json::array();
  for (bool b : model.norm_stats.constant) constant.push_back(b);
  doc["norm_stats"] = {{"means", model.norm_stats.means},
                       {"stds", model.norm_stats.stds},
                       {"constant", constant}};
  return doc;
}

LinearModel model_from_json(const nlohmann::json& doc) {
  try {
    LinearModel model;
    model.method = parse_method(doc.at("method").get<std::string>());
    if (!doc.at("delta_used").is_null()) model.delta_used = doc.at("delta_used").get<double>();
    model.c_used = doc.at("c_used").get<double>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.intercept = doc.at("intercept").get<double>();
    const auto& ns = doc.at("norm_stats");
    model.norm_stats.means = ns.at("means").get<std::vector<double>>();
    model.norm_stats.stds = ns.at("stds").get<std::vector<double>>();
    for (const auto& b : ns.at("constant")) model.norm_stats.constant.push_back(b.get<bool>());
    const std::size_t m = model.weights.size();
    if (model.feature_names.size() != m || model.norm_stats.means.size() != m ||
        model.norm_stats.stds.size() != m || model.norm_stats.constant.size() != m) {
      throw DataError("model document has inconsistent feature dimensions");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace rankalign
