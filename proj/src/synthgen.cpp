#include "rankalign/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "rankalign/error.hpp"
#include "rankalign/seeding.hpp"

namespace rankalign {
namespace {

// Latent mean and spread of Beta(2,3), used to put linear links on a unit scale.
constexpr double kLatentMean = 0.4;
constexpr double kLatentStd = 0.2;
constexpr double kSigmoidWidth = 0.1;
constexpr double kSigmoidAmplitude = 2.5;

double beta23_cdf(double x) {
  const double u = 1.0 - x;
  return 1.0 - u * u * u * u - 4.0 * x * u * u * u;
}

enum class Link { linear, sigmoid };

struct FeatureLink {
  Link link = Link::linear;
  double sign = 1.0;
  double center = kLatentMean;

  double operator()(double latent) const {
    if (link == Link::linear) return sign * (latent - kLatentMean) / kLatentStd;
    const double s = 1.0 / (1.0 + std::exp(-(latent - center) / kSigmoidWidth));
    return sign * kSigmoidAmplitude * (s - 0.5);
  }
};

}  // namespace

void GeneratorConfig::validate() const {
  if (n < 2) throw DataError("generator: n must be >= 2");
  if (m < 1) throw DataError("generator: m must be >= 1");
  if (k_informative + correlated_extras > m) {
    throw DataError("generator: k_informative + correlated_extras exceeds m");
  }
  if (correlated_extras > 0 && k_informative == 0) {
    throw DataError("generator: correlated extras need at least one informative feature");
  }
  if (!(prevalence_target > 0.0 && prevalence_target < 1.0)) {
    throw DataError("generator: prevalence_target must lie in (0,1)");
  }
  if (!(label_noise_rate >= 0.0 && label_noise_rate < 0.5)) {
    throw DataError("generator: label_noise_rate must lie in [0,0.5)");
  }
  if (!(prevalence_target > label_noise_rate && prevalence_target < 1.0 - label_noise_rate)) {
    throw DataError("generator: prevalence_target unreachable at this label_noise_rate");
  }
  if (!(rating_noise_std >= 0.0) || !(feature_noise_std >= 0.0)) {
    throw DataError("generator: noise levels must be >= 0");
  }
}

nlohmann::json GeneratorConfig::to_json() const {
  return {{"n", n},
          {"m", m},
          {"k_informative", k_informative},
          {"rating_noise_std", rating_noise_std},
          {"feature_noise_std", feature_noise_std},
          {"prevalence_target", prevalence_target},
          {"label_noise_rate", label_noise_rate},
          {"correlated_extras", correlated_extras},
          {"seed", seed}};
}

double beta23_upper_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("beta23_upper_quantile: p must lie in (0,1)");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (1.0 - beta23_cdf(mid) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SynthCohort generate(const GeneratorConfig& config) {
  config.validate();
  SynthCohort out;
  out.config = config;
  const std::size_t n = config.n;
  const std::size_t m = config.m;

  // Independent streams per component, so changing one noise level leaves
  // the other draws untouched.
  std::mt19937_64 latent_rng(seed_mix(config.seed, 1));
  std::mt19937_64 rating_rng(seed_mix(config.seed, 2));
  std::mt19937_64 feature_rng(seed_mix(config.seed, 3));
  std::mt19937_64 label_rng(seed_mix(config.seed, 4));
  std::mt19937_64 layout_rng(seed_mix(config.seed, 5));

  std::gamma_distribution<double> gamma2(2.0, 1.0), gamma3(3.0, 1.0);
  out.latent.resize(n);
  for (auto& l : out.latent) {
    const double a = gamma2(latent_rng);
    const double b = gamma3(latent_rng);
    l = a / (a + b);
  }

  // Column roles: a random permutation decides which columns carry signal.
  std::vector<std::size_t> columns(m);
  std::iota(columns.begin(), columns.end(), 0);
  std::shuffle(columns.begin(), columns.end(), layout_rng);
  out.informative.assign(columns.begin(), columns.begin() + config.k_informative);
  out.extras.assign(columns.begin() + config.k_informative,
                    columns.begin() + config.k_informative + config.correlated_extras);

  std::vector<FeatureLink> links(config.k_informative);
  std::uniform_real_distribution<double> center(0.25, 0.55);
  std::bernoulli_distribution flip_sign(0.5);
  for (std::size_t k = 0; k < links.size(); ++k) {
    links[k].link = k % 2 == 0 ? Link::linear : Link::sigmoid;
    links[k].sign = flip_sign(layout_rng) ? -1.0 : 1.0;
    links[k].center = center(layout_rng);
  }
  std::vector<std::size_t> extra_source(config.correlated_extras);
  if (config.k_informative > 0) {
    std::uniform_int_distribution<std::size_t> pick(0, config.k_informative - 1);
    for (auto& s : extra_source) s = pick(layout_rng);
  }

  Cohort& cohort = out.cohort;
  cohort.features = Matrix(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "f%02zu", j + 1);
    cohort.feature_names.emplace_back(name);
  }
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "P%04zu", i + 1);
    cohort.ids.emplace_back(id);
    auto row = cohort.features.row(i);
    std::vector<double> informative_values(config.k_informative);
    for (std::size_t k = 0; k < config.k_informative; ++k) {
      informative_values[k] =
          links[k](out.latent[i]) + config.feature_noise_std * unit(feature_rng);
      row[out.informative[k]] = informative_values[k];
    }
    for (std::size_t e = 0; e < config.correlated_extras; ++e) {
      row[out.extras[e]] =
          informative_values[extra_source[e]] + config.feature_noise_std * unit(feature_rng);
    }
    for (std::size_t c = config.k_informative + config.correlated_extras; c < m; ++c) {
      row[columns[c]] = unit(feature_rng);
    }
  }

  cohort.rating.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double noise = config.rating_noise_std > 0.0
                             ? config.rating_noise_std * unit(rating_rng)
                             : 0.0;
    cohort.rating[i] = std::clamp(100.0 * out.latent[i] + noise, 0.0, 100.0);
  }

  // Pre-flip prevalence q such that q(1 - rho) + (1 - q) rho = target.
  const double rho = config.label_noise_rate;
  const double q = (config.prevalence_target - rho) / (1.0 - 2.0 * rho);
  out.label_threshold = beta23_upper_quantile(q);
  std::bernoulli_distribution flip(rho);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    int label = out.latent[i] > out.label_threshold ? 1 : 0;
    if (rho > 0.0 && flip(label_rng)) label = 1 - label;
    labels[i] = label;
  }
  cohort.binary_label = std::move(labels);

  std::sort(out.informative.begin(), out.informative.end());
  std::sort(out.extras.begin(), out.extras.end());
  out.true_support = out.informative;
  out.true_support.insert(out.true_support.end(), out.extras.begin(), out.extras.end());
  std::sort(out.true_support.begin(), out.true_support.end());
  cohort.validate();
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".truth.json");
  return p;
}

void write_cohort(const SynthCohort& synth, const std::filesystem::path& path,
                  bool include_latent) {
  write_cohort_csv(synth.cohort, path);
  if (!include_latent) return;
  nlohmann::json doc;
  doc["config"] = synth.config.to_json();
  doc["ids"] = synth.cohort.ids;
  doc["latent"] = synth.latent;
  doc["label_threshold"] = synth.label_threshold;
  auto names = [&](const std::vector<std::size_t>& cols) {
    std::vector<std::string> out;
    for (std::size_t c : cols) out.push_back(synth.cohort.feature_names[c]);
    return out;
  };
  doc["true_support"] = names(synth.true_support);
  doc["informative"] = names(synth.informative);
  doc["correlated_extras"] = names(synth.extras);
  const auto side = sidecar_path(path);
  std::ofstream out(side, std::ios::binary);
  if (!out) throw DataError("cannot write '" + side.string() + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + side.string() + "'");
}

}  // namespace rankalign
