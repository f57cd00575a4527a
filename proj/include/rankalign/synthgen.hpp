#pragma once
// Synthetic cohorts with a known latent severity.
//
// Each patient draws a latent severity from Beta(2,3). Informative features
// are monotone (linear or sigmoid) functions of the latent plus Gaussian
// noise; correlated extras are noisy copies of informative features; the
// rest are pure noise. The rating is 100 * latent plus Gaussian noise,
// clamped to [0,100]; the label thresholds the latent and is then flipped
// at random.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "rankalign/cohort.hpp"

namespace rankalign {

struct GeneratorConfig {
  std::size_t n = 391;
  std::size_t m = 30;
  std::size_t k_informative = 8;
  double rating_noise_std = 10.0;
  double feature_noise_std = 0.5;
  double prevalence_target = 0.35;
  double label_noise_rate = 0.05;
  std::size_t correlated_extras = 4;
  std::uint64_t seed = 0;

  // Throws DataError on violated invariants.
  void validate() const;
  nlohmann::json to_json() const;
};

struct SynthCohort {
  Cohort cohort;
  std::vector<double> latent;            // in [0,1], never part of the cohort
  std::vector<std::size_t> true_support; // informative + correlated extras, sorted
  std::vector<std::size_t> informative;  // sorted
  std::vector<std::size_t> extras;       // sorted
  double label_threshold = 0.0;          // on the latent scale
  GeneratorConfig config;
};

SynthCohort generate(const GeneratorConfig& config);

// Latent threshold t with P(Beta(2,3) > t) = p.
double beta23_upper_quantile(double p);

// Sidecar path used by write_cohort: "<stem>.truth.json" next to the CSV.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Writes the cohort CSV; with include_latent, also the ground-truth sidecar
// (latent, support, threshold, config) as JSON.
void write_cohort(const SynthCohort& synth, const std::filesystem::path& path,
                  bool include_latent);

}  // namespace rankalign
