#pragma once
// The four compared methods: δ-thresholded Ranking SVM and the linear
// regression, SVR and classifier-SVM baselines. All are L1-regularized and
// linear; c is chosen by inner cross-validation on the training rows only.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rankalign/cohort.hpp"
#include "rankalign/optim.hpp"
#include "rankalign/pairing.hpp"

namespace rankalign {

enum class Method { ranking_svm, linear_regression, svr, classifier_svm };

std::string_view method_name(Method method) noexcept;
// Throws DataError for unknown names.
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::ranking_svm, Method::linear_regression,
                                         Method::svr, Method::classifier_svm};

enum class Criterion { pairwise_accuracy, mse, auc };
std::string_view criterion_name(Criterion criterion) noexcept;
Criterion default_criterion(Method method) noexcept;

// 15 values, 2^-10 ... 2^4.
std::vector<double> default_c_grid();

struct HyperSearchSpec {
  std::vector<double> c_grid = default_c_grid();
  int inner_folds = 3;
  std::optional<Criterion> criterion;  // unset: the method's default

  // Throws DataError unless the grid is non-empty, positive and strictly
  // increasing, and inner_folds >= 2.
  void validate() const;
};

// Knobs shared by every fit.
struct TrainOptions {
  double epsilon = 1.0;  // SVR tube, rating units
  std::size_t pair_cap = kDefaultPairCap;
  bool patient_split = false;  // ranking inner CV splits patients instead of pairs
  std::uint64_t seed = 0;
  double tol = 1e-6;
  int max_epochs = 10000;
};

struct LinearModel {
  Method method = Method::ranking_svm;
  std::vector<double> weights;
  double intercept = 0.0;
  NormStats norm_stats;
  std::vector<std::string> feature_names;
  std::optional<double> delta_used;
  double c_used = 1.0;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

// Outcome of the c search, kept for diagnostics and tests.
struct CSelection {
  double c = 1.0;
  std::vector<double> mean_score;  // per grid value, higher is better
  std::vector<double> std_error;
  std::size_t best_index = 0;
};

LinearModel fit_ranking_svm(const Cohort& cohort, std::span<const std::size_t> rows, double delta,
                            const HyperSearchSpec& search, const TrainOptions& options = {});

// method must be linear_regression, svr or classifier_svm.
LinearModel fit_baseline(const Cohort& cohort, std::span<const std::size_t> rows, Method method,
                         const HyperSearchSpec& search, const TrainOptions& options = {});

// Dispatches on method; delta is only used by the ranking SVM.
LinearModel fit_model(const Cohort& cohort, std::span<const std::size_t> rows, Method method,
                      double delta, const HyperSearchSpec& search,
                      const TrainOptions& options = {});

// Runs only the c search for a method on the given rows.
CSelection select_c(const Cohort& cohort, std::span<const std::size_t> rows, Method method,
                    double delta, const HyperSearchSpec& search, const TrainOptions& options = {});

// w.z + b with z the rows normalized by the model's own statistics.
std::vector<double> score(const LinearModel& model, const Cohort& cohort,
                          std::span<const std::size_t> rows);
std::vector<double> score(const LinearModel& model, const Cohort& cohort);
// Same on a raw (unnormalized) feature matrix whose columns follow
// model.feature_names.
std::vector<double> score_features(const LinearModel& model, const Matrix& raw_features);

// Weights with |w_j| > 1e-10; the intercept is not counted.
std::size_t nonzero_count(const LinearModel& model);

nlohmann::json model_to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& doc);

// Smallest grid index whose mean is within one standard error of the best.
std::size_t one_standard_error_pick(std::span<const double> mean_score,
                                    std::span<const double> std_error);

}  // namespace rankalign
