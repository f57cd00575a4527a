#include "rankalign/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rankalign/cohort.hpp"
#include "rankalign/error.hpp"
#include "rankalign/eval.hpp"
#include "rankalign/models.hpp"
#include "rankalign/report_io.hpp"
#include "rankalign/synthgen.hpp"

namespace rankalign {
namespace {

struct RoleFlags {
  std::string id = "id";
  std::string rating = "da";
  std::string label = "label";

  ColumnRoles roles() const { return {id, rating, label, false}; }
};

struct ModelFlags {
  std::vector<double> c_grid;
  int inner_folds = 3;
  bool patient_split = false;
  std::size_t pair_cap = kDefaultPairCap;
  double epsilon = 1.0;
  double tol = 1e-6;
  int max_epochs = 10000;

  HyperSearchSpec search() const {
    HyperSearchSpec spec;
    if (!c_grid.empty()) spec.c_grid = c_grid;
    spec.inner_folds = inner_folds;
    return spec;
  }
  TrainOptions train(std::uint64_t seed) const {
    TrainOptions opts;
    opts.epsilon = epsilon;
    opts.pair_cap = pair_cap;
    opts.patient_split = patient_split;
    opts.seed = seed;
    opts.tol = tol;
    opts.max_epochs = max_epochs;
    return opts;
  }
};

struct ExperimentFlags {
  std::string input;
  std::string output;
  std::string format = "json";
  std::string scores_csv;
  std::size_t folds = 5;
  std::size_t runs = 100;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  bool stratified = false;
  bool global_tuning = false;
};

void add_role_flags(CLI::App* cmd, RoleFlags& f) {
  cmd->add_option("--id-col", f.id, "Identifier column")->capture_default_str();
  cmd->add_option("--rating-col", f.rating, "Rating column (0-100)")->capture_default_str();
  cmd->add_option("--label-col", f.label, "Binary label column; empty for none")
      ->capture_default_str();
}

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--c-grid", f.c_grid,
                  "Comma-separated c values, strictly increasing (default 2^-10..2^4, 15 values)")
      ->delimiter(',');
  cmd->add_option("--inner-folds", f.inner_folds, "Inner CV folds for selecting c")
      ->capture_default_str()
      ->check(CLI::Range(2, 1000));
  cmd->add_flag("--patient-split", f.patient_split,
                "Ranking inner CV splits patients instead of pairs");
  cmd->add_option("--pair-cap", f.pair_cap, "Maximum training pairs per fit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", f.epsilon, "SVR insensitivity band (rating units)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tol", f.tol, "Solver optimality tolerance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-epochs", f.max_epochs, "Solver epoch limit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--input", f.input, "Cohort CSV")->required();
  cmd->add_option("--output", f.output, "Report path")->required();
  cmd->add_option("--format", f.format, "Report format")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--scores-csv", f.scores_csv,
                  "Also write out-of-fold scores (id,method,run,score)");
  cmd->add_option("--folds", f.folds, "Outer CV folds")->capture_default_str()->check(
      CLI::Range(std::size_t{2}, std::size_t{1000000}));
  cmd->add_option("--runs", f.runs, "Repetitions with different CV splits")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Base seed; run r uses seed + r")->capture_default_str();
  cmd->add_option("--jobs", f.jobs, "Worker threads (output does not depend on it)")
      ->capture_default_str()
      ->check(CLI::Range(1u, 1024u));
  cmd->add_flag("--stratified", f.stratified, "Label-stratified outer folds");
  cmd->add_flag("--global-tuning", f.global_tuning,
                "Select c once on the whole cohort instead of per training fold");
}

ExperimentConfig experiment_config(const ExperimentFlags& e, const ModelFlags& m) {
  ExperimentConfig cfg;
  cfg.search = m.search();
  cfg.folds = e.folds;
  cfg.runs = e.runs;
  cfg.base_seed = e.seed;
  cfg.stratified = e.stratified;
  cfg.global_tuning = e.global_tuning;
  cfg.train = m.train(0);
  cfg.jobs = e.jobs;
  cfg.keep_oof = !e.scores_csv.empty();
  return cfg;
}

void write_outputs(const EvalReport& report, const Cohort& cohort, const ExperimentFlags& e) {
  emit_report(report, e.output, e.format == "csv" ? ReportFormat::csv : ReportFormat::json);
  if (!e.scores_csv.empty()) write_oof_csv(report, cohort, e.scores_csv);
}

void print_summary(const EvalReport& report, std::ostream& err) {
  for (const auto& agg : report.aggregates) {
    err << agg.method;
    if (agg.delta) err << " delta=" << format_double(*agg.delta);
    if (agg.correlation) err << " corr=" << agg.correlation->mean;
    if (agg.auc) err << " auc=" << agg.auc->mean;
    if (agg.mean_nonzero) err << " nonzero=" << agg.mean_nonzero->mean;
    err << '\n';
  }
  for (const auto& e : report.errors) err << "delta " << format_double(e.delta) << ": " << e.message << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Align subjective ratings with objective features via a thresholded Ranking SVM"};
  app.require_subcommand(1);

  // generate
  GeneratorConfig gen;
  gen.seed = 42;
  std::string gen_output;
  bool with_truth = false;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic cohort CSV");
  generate_cmd->add_option("--n", gen.n, "Patients")->capture_default_str();
  generate_cmd->add_option("--m", gen.m, "Features")->capture_default_str();
  generate_cmd->add_option("--k-informative", gen.k_informative, "Informative features")
      ->capture_default_str();
  generate_cmd->add_option("--correlated-extras", gen.correlated_extras,
                           "Noisy copies of informative features")
      ->capture_default_str();
  generate_cmd->add_option("--rating-noise", gen.rating_noise_std, "Rating noise std (VAS units)")
      ->capture_default_str();
  generate_cmd->add_option("--feature-noise", gen.feature_noise_std, "Feature noise std")
      ->capture_default_str();
  generate_cmd->add_option("--prevalence", gen.prevalence_target, "Expected label prevalence")
      ->capture_default_str();
  generate_cmd->add_option("--label-noise", gen.label_noise_rate, "Label flip probability")
      ->capture_default_str();
  generate_cmd->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  generate_cmd->add_option("--output", gen_output, "Cohort CSV path")->required();
  generate_cmd->add_flag("--with-truth", with_truth,
                         "Also write <stem>.truth.json with latent severity and support");

  // fit
  RoleFlags fit_roles;
  ModelFlags fit_model_flags;
  std::string fit_input, fit_output, fit_method = "ranking_svm";
  double fit_delta = kDefaultDelta;
  std::uint64_t fit_seed = 42;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one model on a whole cohort and save it as JSON");
  fit_cmd->add_option("--input", fit_input, "Cohort CSV")->required();
  fit_cmd->add_option("--output", fit_output, "Model JSON path")->required();
  fit_cmd->add_option("--method", fit_method, "Method")
      ->capture_default_str()
      ->check(CLI::IsMember({"ranking_svm", "linear_regression", "svr", "classifier_svm"}));
  fit_cmd->add_option("--delta", fit_delta, "Minimum rating difference for a training pair")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fit_seed, "Seed")->capture_default_str();
  add_role_flags(fit_cmd, fit_roles);
  add_model_flags(fit_cmd, fit_model_flags);

  // score
  std::string score_model, score_input, score_output = "-", score_id = "id";
  auto* score_cmd = app.add_subcommand("score", "Score patients with a saved model (id,score CSV)");
  score_cmd->add_option("--model", score_model, "Model JSON")->required();
  score_cmd->add_option("--input", score_input, "CSV with the model's feature columns")->required();
  score_cmd->add_option("--output", score_output, "Output CSV, '-' for stdout")
      ->capture_default_str();
  score_cmd->add_option("--id-col", score_id, "Identifier column")->capture_default_str();

  // evaluate
  RoleFlags eval_roles;
  ModelFlags eval_model_flags;
  ExperimentFlags eval_flags;
  std::vector<std::string> eval_methods{"ranking_svm", "linear_regression", "svr",
                                        "classifier_svm", "raw_da"};
  double eval_delta = kDefaultDelta;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Repeated cross-validation of the methods on a cohort");
  add_experiment_flags(evaluate_cmd, eval_flags);
  evaluate_cmd->add_option("--methods", eval_methods, "Comma-separated methods")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::IsMember({"ranking_svm", "linear_regression", "svr", "classifier_svm", "raw_da"}));
  evaluate_cmd->add_option("--delta", eval_delta, "Ranking pair threshold (rating units)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_role_flags(evaluate_cmd, eval_roles);
  add_model_flags(evaluate_cmd, eval_model_flags);

  // sweep-delta
  RoleFlags sweep_roles;
  ModelFlags sweep_model_flags;
  ExperimentFlags sweep_flags;
  std::vector<double> sweep_deltas{10, 20, 30, 40};
  auto* sweep_cmd =
      app.add_subcommand("sweep-delta", "Ranking SVM stability across pair thresholds");
  add_experiment_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--deltas", sweep_deltas, "Comma-separated thresholds")
      ->delimiter(',')
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_role_flags(sweep_cmd, sweep_roles);
  add_model_flags(sweep_cmd, sweep_model_flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (generate_cmd->parsed()) {
      const auto synth = generate(gen);
      write_cohort(synth, gen_output, with_truth);
      err << "wrote " << synth.cohort.size() << " patients to " << gen_output << '\n';
    } else if (fit_cmd->parsed()) {
      const Cohort cohort = load_cohort(fit_input, fit_roles.roles());
      const auto rows = cohort.all_rows();
      const auto model = fit_model(cohort, rows, parse_method(fit_method), fit_delta,
                                   fit_model_flags.search(), fit_model_flags.train(fit_seed));
      std::ofstream file(fit_output, std::ios::binary);
      if (!file) throw DataError("cannot write '" + fit_output + "'");
      file << model_to_json(model).dump(2) << '\n';
      if (!file) throw DataError("write failed for '" + fit_output + "'");
      err << method_name(model.method) << ": c=" << model.c_used
          << " nonzero=" << nonzero_count(model) << '\n';
    } else if (score_cmd->parsed()) {
      std::ifstream mf(score_model);
      if (!mf) throw DataError("cannot open '" + score_model + "'");
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(mf);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError("'" + score_model + "' is not valid JSON: " + e.what());
      }
      const auto model = model_from_json(doc);
      const auto table = read_csv(std::filesystem::path(score_input));
      const auto id_col = table.column(score_id);
      if (!id_col) throw DataError("id column '" + score_id + "' not found");
      Matrix features(table.rows.size(), model.feature_names.size());
      for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
        const auto col = table.column(model.feature_names[j]);
        if (!col) throw DataError("feature column '" + model.feature_names[j] + "' not found");
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
          const auto v = parse_double(table.rows[r][*col]);
          if (!v) {
            throw DataError("data row " + std::to_string(r + 1) + ": feature '" +
                            model.feature_names[j] + "' is not a finite number");
          }
          features(r, j) = *v;
        }
      }
      const auto scores = score_features(model, features);
      std::ostringstream text;
      text << "id,score\n";
      for (std::size_t r = 0; r < scores.size(); ++r) {
        text << table.rows[r][*id_col] << ',' << format_double(scores[r]) << '\n';
      }
      if (score_output == "-") {
        out << text.str();
      } else {
        std::ofstream file(score_output, std::ios::binary);
        if (!file) throw DataError("cannot write '" + score_output + "'");
        file << text.str();
      }
    } else if (evaluate_cmd->parsed()) {
      const Cohort cohort = load_cohort(eval_flags.input, eval_roles.roles());
      auto cfg = experiment_config(eval_flags, eval_model_flags);
      cfg.delta = eval_delta;
      cfg.methods.clear();
      for (const auto& name : eval_methods) {
        if (name == kRawRatingMethod) continue;  // added whenever a label exists
        const Method m = parse_method(name);
        if (std::find(cfg.methods.begin(), cfg.methods.end(), m) == cfg.methods.end()) {
          cfg.methods.push_back(m);
        }
      }
      if (cfg.methods.empty()) throw DataError("no trainable method requested");
      const auto report = run_experiment(cohort, cfg);
      write_outputs(report, cohort, eval_flags);
      print_summary(report, err);
    } else if (sweep_cmd->parsed()) {
      const Cohort cohort = load_cohort(sweep_flags.input, sweep_roles.roles());
      const auto cfg = experiment_config(sweep_flags, sweep_model_flags);
      const auto report = sweep_delta(cohort, sweep_deltas, cfg);
      write_outputs(report, cohort, sweep_flags);
      print_summary(report, err);
      if (const auto spread = auc_spread(report)) err << "auc spread across delta: " << *spread << '\n';
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace rankalign
