#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "rankalign/error.hpp"
#include "rankalign/eval.hpp"
#include "rankalign/metrics.hpp"
#include "rankalign/report_io.hpp"
#include "rankalign/synthgen.hpp"

using namespace rankalign;

namespace {

Cohort small_cohort(std::uint64_t seed, std::size_t n = 60) {
  GeneratorConfig g;
  g.n = n;
  g.m = 8;
  g.k_informative = 3;
  g.correlated_extras = 1;
  g.seed = seed;
  return generate(g).cohort;
}

ExperimentConfig quick_config() {
  ExperimentConfig cfg;
  cfg.runs = 3;
  cfg.search.c_grid = {0.001, 0.01, 0.1};
  return cfg;
}

const Aggregate& aggregate(const EvalReport& r, const std::string& method,
                           std::optional<double> delta = std::nullopt) {
  for (const auto& a : r.aggregates) {
    if (a.method == method && (!delta || a.delta == delta)) return a;
  }
  FAIL("aggregate not found: " << method);
  return r.aggregates.front();
}

}  // namespace

TEST_CASE("folds partition every row, are balanced and seeded") {
  for (std::size_t n : {5u, 17u, 100u}) {
    const auto f = make_folds(n, 5, 3);
    std::vector<std::size_t> count(5, 0);
    for (std::size_t v : f) count.at(v)++;
    CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
    CHECK(make_folds(n, 5, 3) == f);
  }
  CHECK_FALSE(make_folds(100, 5, 3) == make_folds(100, 5, 4));
  CHECK_THROWS_AS(make_folds(3, 5, 1), DataError);
  CHECK_THROWS_AS(make_folds(10, 1, 1), DataError);
}

TEST_CASE("stratified folds balance the classes") {
  std::vector<int> labels(103, 0);
  for (std::size_t i = 0; i < 103; i += 3) labels[i] = 1;
  const auto f = make_folds(labels.size(), 5, 7, &labels);
  std::vector<int> pos(5, 0), all(5, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    pos[f[i]] += labels[i];
    all[f[i]] += 1;
  }
  CHECK(*std::max_element(pos.begin(), pos.end()) - *std::min_element(pos.begin(), pos.end()) <= 1);
  CHECK(*std::max_element(all.begin(), all.end()) - *std::min_element(all.begin(), all.end()) <= 1);
}

TEST_CASE("cross-validation scores every row once with a model that never saw it") {
  const auto c = small_cohort(1);
  HyperSearchSpec search;
  search.c_grid = {0.01, 0.1};
  for (Method m : kAllMethods) {
    const auto cv = cross_val_scores(c, m, 15.0, search, 11);
    REQUIRE(cv.models.size() == 5);
    std::vector<std::size_t> held;
    for (std::size_t f = 0; f < 5; ++f) {
      RowIndices test;
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (cv.fold_of[i] == f) test.push_back(i);
      }
      held.insert(held.end(), test.begin(), test.end());
      const auto s = score(cv.models[f], c, test);
      for (std::size_t k = 0; k < test.size(); ++k) CHECK(cv.scores[test[k]] == s[k]);
    }
    std::sort(held.begin(), held.end());
    std::vector<std::size_t> all(c.size());
    std::iota(all.begin(), all.end(), 0);
    CHECK(held == all);
  }
}

TEST_CASE("empty pair sets are reported with the fold") {
  const auto c = small_cohort(2, 30);
  try {
    cross_val_scores(c, Method::ranking_svm, 99.0, HyperSearchSpec{}, 1);
    FAIL("expected an empty pair set");
  } catch (const EmptyPairSetError& e) {
    CHECK(std::string(e.what()).find("fold 0 (delta=99)") != std::string::npos);
    CHECK(e.delta() == 99.0);
  }
}

TEST_CASE("run_experiment records one row per method and run plus raw_da") {
  const auto c = small_cohort(3);
  const auto report = run_experiment(c, quick_config());
  REQUIRE(report.records.size() == 3 * 5);
  for (std::size_t run = 0; run < 3; ++run) {
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& r = report.records[run * 5 + k];
      CHECK(r.run_index == run);
      CHECK(r.seed == 42 + run);
      CHECK(r.auc.has_value());
      if (k < 4) CHECK(r.method == method_name(kAllMethods[k]));
      CHECK(r.delta.has_value() == (r.method == "ranking_svm"));
    }
    const auto& raw = report.records[run * 5 + 4];
    CHECK(raw.method == "raw_da");
    CHECK(raw.correlation == 1.0);
    CHECK_FALSE(raw.mean_nonzero.has_value());
    CHECK(raw.auc == roc_auc(c.rating, *c.binary_label));
  }
  CHECK(report.aggregates.size() == 5);
  CHECK(report.cohort_fingerprint == cohort_fingerprint(c));
  CHECK(report.config_echo["runs"] == 3);
  CHECK_FALSE(report.config_echo.contains("jobs"));

  const auto& rank = aggregate(report, "ranking_svm");
  std::vector<double> aucs;
  for (const auto& r : report.records) {
    if (r.method == "ranking_svm") aucs.push_back(*r.auc);
  }
  const double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / 3.0;
  double ss = 0.0;
  for (double v : aucs) ss += (v - mean) * (v - mean);
  CHECK(rank.auc->mean == doctest::Approx(mean).epsilon(1e-15));
  CHECK(rank.auc->std == doctest::Approx(std::sqrt(ss / 2.0)).epsilon(1e-12));
  CHECK(rank.auc->count == 3);
}

TEST_CASE("per-run metrics equal metrics recomputed from the out-of-fold scores") {
  const auto c = small_cohort(4);
  auto cfg = quick_config();
  cfg.runs = 2;
  cfg.keep_oof = true;
  const auto report = run_experiment(c, cfg);
  REQUIRE(report.oof.size() == report.records.size());
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    const auto& rec = report.records[k];
    const auto& oof = report.oof[k];
    CHECK(oof.method == rec.method);
    CHECK(oof.run_index == rec.run_index);
    CHECK(rec.auc == roc_auc(oof.scores, *c.binary_label));
    if (rec.correlation) CHECK(*rec.correlation == pearson(oof.scores, c.rating));
  }
}

TEST_CASE("experiments are independent of the worker count") {
  const auto c = small_cohort(5);
  auto cfg = quick_config();
  cfg.jobs = 1;
  const auto a = report_to_string(run_experiment(c, cfg), ReportFormat::json);
  cfg.jobs = 4;
  const auto b = report_to_string(run_experiment(c, cfg), ReportFormat::json);
  CHECK(a == b);
}

TEST_CASE("methods share the outer split and stratification needs a label") {
  auto c = small_cohort(6);
  auto cfg = quick_config();
  cfg.stratified = true;
  CHECK_NOTHROW(run_experiment(c, cfg));
  c.binary_label.reset();
  CHECK_THROWS_AS(run_experiment(c, cfg), DataError);
  cfg.stratified = false;
  CHECK_THROWS_AS(run_experiment(c, cfg), DataError);  // classifier_svm needs the label
  cfg.methods = {Method::ranking_svm, Method::svr};
  const auto report = run_experiment(c, cfg);
  CHECK(report.records.size() == 6);
  for (const auto& r : report.records) CHECK_FALSE(r.auc.has_value());
}

TEST_CASE("global tuning uses one c for every fold") {
  const auto c = small_cohort(7);
  auto cfg = quick_config();
  cfg.global_tuning = true;
  cfg.methods = {Method::svr};
  cfg.runs = 1;
  CHECK_NOTHROW(run_experiment(c, cfg));
  CHECK(run_experiment(c, cfg).config_echo["global_tuning"] == true);
}

TEST_CASE("delta sweep keeps raw_da once and records empty deltas") {
  const auto c = small_cohort(8);
  auto cfg = quick_config();
  cfg.runs = 2;
  const std::vector<double> deltas{10, 30, 99};
  const auto report = sweep_delta(c, deltas, cfg);
  REQUIRE(report.errors.size() == 1);
  CHECK(report.errors[0].delta == 99.0);
  std::size_t raw = 0, ranking = 0;
  for (const auto& r : report.records) {
    if (r.method == "raw_da") ++raw;
    if (r.method == "ranking_svm") ++ranking;
  }
  CHECK(raw == 2);
  CHECK(ranking == 4);
  CHECK(aggregate(report, "ranking_svm", 10.0).auc->count == 2);
  CHECK(aggregate(report, "ranking_svm", 30.0).auc->count == 2);
  CHECK(report.config_echo["deltas"] == nlohmann::json({10.0, 30.0, 99.0}));
  CHECK_FALSE(report.config_echo.contains("delta"));
  const auto spread = auc_spread(report);
  REQUIRE(spread.has_value());
  CHECK(*spread == doctest::Approx(std::fabs(aggregate(report, "ranking_svm", 10.0).auc->mean -
                                             aggregate(report, "ranking_svm", 30.0).auc->mean)));
  CHECK_THROWS_AS(sweep_delta(c, std::vector<double>{}, cfg), DataError);
}

TEST_CASE("aggregates group by method and delta in order of appearance") {
  std::vector<RunRecord> records(4);
  records[0].method = "b";
  records[0].auc = 0.5;
  records[1].method = "a";
  records[1].auc = 0.7;
  records[2].method = "b";
  records[2].auc = 0.7;
  records[3].method = "b";
  records[3].delta = 5.0;
  const auto agg = compute_aggregates(records);
  REQUIRE(agg.size() == 3);
  CHECK(agg[0].method == "b");
  CHECK(agg[0].auc->mean == doctest::Approx(0.6));
  CHECK(agg[0].auc->std == doctest::Approx(std::sqrt(0.02)));
  CHECK(agg[1].auc->std == 0.0);
  CHECK_FALSE(agg[2].auc.has_value());
  CHECK(agg[2].delta == 5.0);
}

TEST_CASE("reports round trip through JSON and serialize deterministically") {
  const auto c = small_cohort(9);
  auto cfg = quick_config();
  cfg.runs = 2;
  const auto report = run_experiment(c, cfg);
  const auto text = report_to_string(report, ReportFormat::json);
  const auto back = report_from_json(nlohmann::json::parse(text));
  CHECK(back.records == report.records);
  CHECK(back.aggregates == report.aggregates);
  CHECK(report_to_string(back, ReportFormat::json) == text);

  oracle::TempDir dir("report");
  emit_report(report, dir / "r.json", ReportFormat::json);
  CHECK(load_report(dir / "r.json").records == report.records);

  const auto csv = report_to_string(report, ReportFormat::csv);
  CHECK(csv.rfind("method,run_index,seed,delta,correlation,spearman,auc,mean_nonzero\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(report.records.size() + 1));
  CHECK_THROWS_AS(load_report(dir / "missing.json"), DataError);
}
