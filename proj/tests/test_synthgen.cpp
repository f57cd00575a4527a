#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "rankalign/error.hpp"
#include "rankalign/metrics.hpp"
#include "rankalign/synthgen.hpp"

using namespace rankalign;

namespace {

double prevalence(const Cohort& c) {
  const auto& y = *c.binary_label;
  return static_cast<double>(std::accumulate(y.begin(), y.end(), 0)) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("default cohort shape, ranges and support layout") {
  const auto s = generate(GeneratorConfig{});
  const auto& c = s.cohort;
  CHECK(c.size() == 391);
  CHECK(c.num_features() == 30);
  CHECK(c.ids.front() == "P0001");
  CHECK(c.feature_names.front() == "f01");
  CHECK(c.has_label());
  for (double r : c.rating) CHECK((r >= 0.0 && r <= 100.0));
  for (double l : s.latent) CHECK((l > 0.0 && l < 1.0));
  CHECK(s.informative.size() == 8);
  CHECK(s.extras.size() == 4);
  CHECK(s.true_support.size() == 12);
  CHECK(std::is_sorted(s.true_support.begin(), s.true_support.end()));
  for (std::size_t e : s.extras) {
    CHECK(std::find(s.informative.begin(), s.informative.end(), e) == s.informative.end());
  }
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("same seed gives the same cohort, a new seed a different one") {
  GeneratorConfig g;
  g.n = 80;
  g.seed = 5;
  const auto a = generate(g);
  CHECK(generate(g).cohort == a.cohort);
  g.seed = 6;
  CHECK_FALSE(generate(g).cohort == a.cohort);
}

TEST_CASE("label prevalence centres on the target") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    GeneratorConfig g;
    g.seed = seed;
    const double p = prevalence(generate(g).cohort);
    total += p;
  }
  const double mean = total / 50.0;
  MESSAGE("mean prevalence over 50 draws: " << mean);
  CHECK(mean >= 0.30);
  CHECK(mean <= 0.40);
}

TEST_CASE("latent severity follows Beta(2,3)") {
  GeneratorConfig g;
  g.n = 20000;
  g.m = 1;
  g.k_informative = 1;
  g.correlated_extras = 0;
  const auto s = generate(g);
  const double mean = std::accumulate(s.latent.begin(), s.latent.end(), 0.0) / 20000.0;
  double var = 0.0;
  for (double l : s.latent) var += (l - mean) * (l - mean);
  var /= 20000.0;
  CHECK(mean == doctest::Approx(0.4).epsilon(0.02));
  CHECK(var == doctest::Approx(0.04).epsilon(0.05));
  // Upper quantile: P(latent > q(p)) = p.
  for (double p : {0.1, 0.35, 0.8}) {
    const double t = beta23_upper_quantile(p);
    const double above = static_cast<double>(
        std::count_if(s.latent.begin(), s.latent.end(), [&](double l) { return l > t; }));
    CHECK(above / 20000.0 == doctest::Approx(p).epsilon(0.05));
    // Beta(2,3) CDF: 6t^2 - 8t^3 + 3t^4.
    const double cdf = 6 * t * t - 8 * t * t * t + 3 * t * t * t * t;
    CHECK(1.0 - cdf == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("noiseless limit: rating is 100 times latent and labels are a latent threshold") {
  GeneratorConfig g;
  g.n = 300;
  g.rating_noise_std = 0.0;
  g.label_noise_rate = 0.0;
  g.seed = 11;
  const auto s = generate(g);
  for (std::size_t i = 0; i < g.n; ++i) {
    CHECK(s.cohort.rating[i] == 100.0 * s.latent[i]);
    CHECK((*s.cohort.binary_label)[i] == (s.latent[i] > s.label_threshold ? 1 : 0));
  }
  CHECK(roc_auc(s.cohort.rating, *s.cohort.binary_label) == 1.0);
}

TEST_CASE("a noise-free informative feature is a monotone function of the latent") {
  GeneratorConfig g;
  g.n = 200;
  g.feature_noise_std = 0.0;
  g.seed = 12;
  const auto s = generate(g);
  for (std::size_t col : s.informative) {
    std::vector<double> x(g.n);
    for (std::size_t i = 0; i < g.n; ++i) x[i] = s.cohort.features(i, col);
    CHECK(std::fabs(spearman(x, s.latent)) == doctest::Approx(1.0));
  }
}

TEST_CASE("changing the rating noise leaves features and latent untouched") {
  GeneratorConfig g;
  g.n = 100;
  g.seed = 13;
  const auto a = generate(g);
  g.rating_noise_std = 25.0;
  const auto b = generate(g);
  CHECK(a.latent == b.latent);
  CHECK(a.cohort.features == b.cohort.features);
  CHECK_FALSE(a.cohort.rating == b.cohort.rating);
}

TEST_CASE("generator validation") {
  GeneratorConfig g;
  g.k_informative = 0;
  CHECK_THROWS_AS(generate(g), DataError);
  g = {};
  g.k_informative = 28;
  g.correlated_extras = 4;
  CHECK_THROWS_AS(generate(g), DataError);
  g = {};
  g.prevalence_target = 1.0;
  CHECK_THROWS_AS(generate(g), DataError);
  g = {};
  g.label_noise_rate = 0.5;
  CHECK_THROWS_AS(generate(g), DataError);
  g = {};
  g.n = 1;
  CHECK_THROWS_AS(generate(g), DataError);
}

TEST_CASE("cohort files round trip and the truth sidecar holds the hidden variables") {
  GeneratorConfig g;
  g.n = 40;
  g.seed = 14;
  const auto s = generate(g);
  oracle::TempDir dir("synth");
  const auto csv = dir / "cohort.csv";
  CHECK(sidecar_path(csv) == dir / "cohort.truth.json");

  write_cohort(s, csv, false);
  CHECK(load_cohort(csv) == s.cohort);
  CHECK_FALSE(std::filesystem::exists(sidecar_path(csv)));

  write_cohort(s, csv, true);
  std::ifstream in(sidecar_path(csv));
  const auto doc = nlohmann::json::parse(in);
  CHECK(doc["latent"].get<std::vector<double>>() == s.latent);
  CHECK(doc["ids"].get<std::vector<std::string>>() == s.cohort.ids);
  CHECK(doc["label_threshold"].get<double>() == s.label_threshold);
  CHECK(doc["true_support"].size() == s.true_support.size());
  CHECK(doc["config"]["seed"] == 14);
  // The CSV never carries the latent.
  const auto table = read_csv(csv);
  CHECK_FALSE(table.column("latent").has_value());
}
