#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rankalign/cli.hpp"
#include "rankalign/models.hpp"
#include "rankalign/report_io.hpp"

using namespace rankalign;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit with 1, help with 0") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"evaluate"}).code == kExitUsage);  // --input is required
  CHECK(run({"evaluate", "--input", "x.csv", "--methods", "lasso"}).code == kExitUsage);
  CHECK(run({"fit", "--input", "x.csv", "--output", "m.json", "--delta", "-3"}).code == kExitUsage);
  const auto help = run({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("sweep-delta") != std::string::npos);

  const auto eval_help = run({"evaluate", "--help"}).out;
  CHECK(eval_help.find("--delta FLOAT:NONNEGATIVE [15]") != std::string::npos);
  CHECK(eval_help.find("[2 - 1000000] [5]") != std::string::npos);
  CHECK(eval_help.find("--runs UINT:POSITIVE [100]") != std::string::npos);
}

TEST_CASE("data errors exit with 2 and name the problem") {
  oracle::TempDir dir("cli_err");
  const auto missing = run({"evaluate", "--input", (dir / "none.csv").string(), "--output",
                             (dir / "r.json").string()});
  CHECK(missing.code == kExitData);
  CHECK_FALSE(missing.err.empty());

  std::ofstream(dir / "bad.csv") << "id,da,f1\na,10,1\nb,oops,2\n";
  const auto bad = run({"fit", "--input", (dir / "bad.csv").string(), "--output",
                        (dir / "m.json").string()});
  CHECK(bad.code == kExitData);
  CHECK(bad.err.find("data row 2") != std::string::npos);

  std::ofstream(dir / "tiny.csv") << "id,da,f1\na,10,1\nb,20,2\nc,30,3\n";
  const auto empty = run({"fit", "--input", (dir / "tiny.csv").string(), "--output",
                          (dir / "m.json").string(), "--delta", "50", "--c-grid", "1"});
  CHECK(empty.code == kExitData);
}

TEST_CASE("generate, fit and score end to end") {
  oracle::TempDir dir("cli_flow");
  const auto csv = (dir / "c.csv").string();
  REQUIRE(run({"generate", "--n", "60", "--m", "6", "--k-informative", "2", "--correlated-extras",
               "1", "--seed", "3", "--output", csv, "--with-truth"})
              .code == kExitOk);
  CHECK(std::filesystem::exists(dir / "c.truth.json"));
  const auto cohort = load_cohort(csv);
  CHECK(cohort.size() == 60);

  const auto model_path = (dir / "m.json").string();
  REQUIRE(run({"fit", "--input", csv, "--output", model_path, "--c-grid", "0.01,0.1,1"}).code ==
          kExitOk);
  const auto model = model_from_json(nlohmann::json::parse(slurp(model_path)));
  CHECK(model.method == Method::ranking_svm);
  CHECK(model.delta_used == 15.0);

  const auto scored = run({"score", "--model", model_path, "--input", csv});
  REQUIRE(scored.code == kExitOk);
  std::istringstream lines(scored.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "id,score");
  const auto expected = score(model, cohort);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    REQUIRE(std::getline(lines, line));
    CHECK(line == cohort.ids[i] + "," + format_double(expected[i]));
  }
}

TEST_CASE("evaluate writes JSON, CSV and out-of-fold scores") {
  oracle::TempDir dir("cli_eval");
  const auto csv = (dir / "c.csv").string();
  REQUIRE(run({"generate", "--n", "50", "--m", "5", "--k-informative", "2", "--correlated-extras",
               "0", "--output", csv})
              .code == kExitOk);
  const std::vector<std::string> common{"evaluate", "--input", csv, "--runs", "2", "--c-grid",
                                        "0.01,0.1", "--methods", "ranking_svm,svr"};
  auto json_args = common;
  json_args.insert(json_args.end(), {"--output", (dir / "r.json").string(), "--scores-csv",
                                     (dir / "oof.csv").string()});
  const auto res = run(json_args);
  REQUIRE(res.code == kExitOk);
  const auto report = load_report(dir / "r.json");
  CHECK(report.records.size() == 6);  // 2 methods + raw_da, 2 runs
  CHECK(report.config_echo["runs"] == 2);
  CHECK(std::filesystem::exists(dir / "oof.csv"));
  CHECK(res.err.find("ranking_svm") != std::string::npos);

  auto csv_args = common;
  csv_args.insert(csv_args.end(), {"--output", (dir / "r.csv").string(), "--format", "csv"});
  REQUIRE(run(csv_args).code == kExitOk);
  CHECK(slurp(dir / "r.csv") == report_to_string(report, ReportFormat::csv));
}

TEST_CASE("sweep-delta reports each threshold") {
  oracle::TempDir dir("cli_sweep");
  const auto csv = (dir / "c.csv").string();
  REQUIRE(run({"generate", "--n", "50", "--m", "5", "--k-informative", "2", "--correlated-extras",
               "0", "--output", csv})
              .code == kExitOk);
  const auto res = run({"sweep-delta", "--input", csv, "--runs", "1", "--c-grid", "0.1",
                        "--deltas", "10,20", "--output", (dir / "s.json").string()});
  REQUIRE(res.code == kExitOk);
  const auto report = load_report(dir / "s.json");
  std::size_t ranking = 0;
  for (const auto& r : report.records) ranking += r.method == "ranking_svm";
  CHECK(ranking == 2);
  CHECK(res.err.find("auc spread") != std::string::npos);
}
