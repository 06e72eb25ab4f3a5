#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "mlspeak/dataset_io.hpp"
#include "mlspeak/errors.hpp"
#include "mlspeak/report.hpp"

using namespace mlspeak;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("mlspeak_report_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Study1Result small_study1() {
  Study1Config config;
  config.n_trials = 3;
  config.trial.n_turns = 80;
  config.trial.n_train_teams = 6;
  config.trial.base_seed = 5;
  config.train.max_epochs = 40;
  config.train.patience = 10;
  config.curve_points = 7;
  return run_study1(config);
}

const RunMetadata kMeta{"study1", "desk", 5, {{"n_trials", 3}}};

}  // namespace

TEST_CASE("significant-digit rounding") {
  CHECK(round_sig(0.123456789123) == 0.123456789);
  CHECK(round_sig(123456.7891234) == 123456.789);
  CHECK(round_sig(-2.00000000049) == -2.0);
  CHECK(round_sig(0.0) == 0.0);
  CHECK(std::isnan(round_sig(std::nan(""))));
  CHECK(round_sig(1.0 / 3.0) == round_sig(round_sig(1.0 / 3.0)));
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(std::nan("")) == "NA");
  CHECK(slug("Same traits/no-mem") == "Same_traits_no_mem");
}

TEST_CASE("test results and matrices round-trip") {
  const stats::TestResult t{3.25, 0.0125, "Wilcoxon rank sum exact test", stats::Alternative::less, true};
  CHECK(test_result_from_json(to_json(t)) == t);

  const auto m = stats::pairwise_wilcoxon({{1, 2, 3}, {4, 5, 6}, {2.5, 7, 8}});
  const auto back = pairwise_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(back.k == 3);
  for (std::size_t i = 0; i < 9; ++i) CHECK(back.p[i] == round_sig(m.p[i]));

  const stats::TestResult nan_t{std::nan(""), 1.0, "x", stats::Alternative::two_sided, false};
  const auto j = to_json(nan_t);
  CHECK(j.at("statistic").is_null());
  CHECK(std::isnan(test_result_from_json(j).statistic));
}

TEST_CASE("study 1 results.json round-trips and files are written") {
  const auto r = small_study1();
  TempDir tmp("s1");
  write_study1_outputs(r, kMeta, tmp.path);

  const auto j = read_json(tmp.path / "results.json");
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("run").at("seed") == 5);
  CHECK(study1_from_json(j) == rounded(r));
  CHECK(run_metadata_from_json(j.at("run")) == kMeta);
  CHECK(j.contains("summary"));

  CHECK(fs::exists(tmp.path / "loss_diffs.csv"));
  CHECK(fs::exists(tmp.path / "pairwise_p.csv"));
  const auto losses = read_csv(tmp.path / "loss_diffs.csv");
  CHECK(losses.header == std::vector<std::string>{"trial", "model", "nll", "loss_diff"});
  CHECK(losses.rows.size() == 3 * 6);

  const auto pair = read_csv(tmp.path / "pairwise_p.csv");
  REQUIRE(pair.rows.size() == 6);
  CHECK(pair.header[0] == "model");
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t jx = 0; jx < 6; ++jx) CHECK(pair.rows[i][jx + 1] == pair.rows[jx][i + 1]);

  const auto curve = read_csv(tmp.path / "curves_a.csv");
  CHECK(curve.header == std::vector<std::string>{"trait", "pi", "d", "peak"});
  CHECK(curve.rows.size() == 7);

  // Writing twice gives identical bytes.
  TempDir again("s1b");
  write_study1_outputs(r, kMeta, again.path);
  CHECK(slurp(tmp.path / "results.json") == slurp(again.path / "results.json"));
}

TEST_CASE("study 2 results.json round-trips") {
  Study2Result r;
  r.kind = Study2Kind::length;
  r.cells = {{"50", kMlSpeakLabel, {100.5, 101.25}, {90.0, 91.0}},
             {"500", kMlSpeakLabel, {95.5, 96.125}, {90.0, 91.0}}};
  r.tests = {{"shortest vs longest", stats::wilcoxon_rank_sum(r.cells[0].nll, r.cells[1].nll)}};
  r.pairwise = {{"length", {"50", "500"}, stats::pairwise_wilcoxon({r.cells[0].nll, r.cells[1].nll})}};
  const RunMetadata meta{"study2", "desk", 1, {{"kind", "length"}}};
  const auto j = to_json(r, meta);
  const auto back = study2_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back, meta) == j);
  CHECK(back.cell("500", kMlSpeakLabel).nll == r.cells[1].nll);

  TempDir tmp("s2");
  write_study2_outputs(r, meta, tmp.path);
  CHECK(read_csv(tmp.path / "nll.csv").rows.size() == 4);
  CHECK(fs::exists(tmp.path / "pairwise_p.csv"));
}

TEST_CASE("study 3 results.json round-trips") {
  Study3Result r;
  SelectionStep step;
  step.stage = 1;
  step.candidate = {"extraversion"};
  step.loss_diff = {-1.5, -2.0, 0.5};
  step.median_diff = -1.5;
  step.test = stats::wilcoxon_signed_rank(step.loss_diff, stats::Alternative::less);
  step.accepted = true;
  r.selection.steps = {step};
  r.selection.selected = {"extraversion"};
  r.selection.baseline_nll = {10.0, 11.0, 12.0};
  r.models = {"A", "B"};
  r.trials = {make_trial_result(0, {"A", "B"}, {1.0, 2.0}, "B"), make_trial_result(1, {"A", "B"}, {1.5, 2.5}, "B")};
  r.kruskal = stats::kruskal_wallis(by_model(r.trials));
  r.pairwise = stats::pairwise_wilcoxon(by_model(r.trials));
  const RunMetadata meta{"study3", "desk", 2, nlohmann::json::object()};
  const auto j = to_json(r, meta);
  CHECK(to_json(study3_from_json(nlohmann::json::parse(j.dump())), meta) == j);
  CHECK(to_json(selection_from_json(to_json(r.selection))) == to_json(r.selection));

  TempDir tmp("s3");
  write_study3_outputs(r, meta, tmp.path);
  CHECK(fs::exists(tmp.path / "selection_path.json"));
  CHECK(fs::exists(tmp.path / "results.json"));
}

TEST_CASE("schema checks") {
  auto j = to_json(small_study1(), kMeta);
  j["schema_version"] = 99;
  CHECK_THROWS_AS(study1_from_json(j), SchemaError);
  TempDir tmp("bad");
  std::ofstream(tmp.path / "broken.json") << "{not json";
  CHECK_THROWS_AS(read_json(tmp.path / "broken.json"), SchemaError);
}
