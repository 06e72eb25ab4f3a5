#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mlspeak/cli.hpp"
#include "mlspeak/dataset_io.hpp"
#include "mlspeak/report.hpp"

using namespace mlspeak;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("mlspeak_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path kFixture = fs::path(MLSPEAK_SOURCE_DIR) / "data" / "fixture";

}  // namespace

TEST_CASE("stochastic commands require a seed") {
  const auto r = run({"study1", "--preset", "desk", "--out", "/nonexistent"});
  CHECK(r.code != 0);
  CHECK(r.err.find("--seed") != std::string::npos);
}

TEST_CASE("bad usage is reported") {
  CHECK(run({}).code != 0);
  CHECK(run({"frobnicate"}).code != 0);
  CHECK(run({"study1", "--seed", "1", "--preset", "huge"}).code != 0);

  TempDir tmp("badcfg");
  std::ofstream(tmp.path / "c.json") << R"({"n_trails": 3})";
  const auto r = run({"study1", "--seed", "1", "--config", (tmp.path / "c.json").string(), "--out",
                      (tmp.path / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("n_trails") != std::string::npos);
}

TEST_CASE("presets") {
  const auto desk = study1_preset(Preset::desk, 7);
  CHECK(desk.n_trials == 10);
  CHECK(desk.trial.n_turns == 600);
  CHECK(desk.trial.n_train_teams == 20);
  CHECK(desk.trial.base_seed == 7);
  CHECK(study1_preset(Preset::paper, 7).n_trials == 20);
  CHECK(study2_preset(Preset::paper, Study2Kind::data_model, 1).trial.n_turns == 600);
  CHECK(study3_preset(Preset::desk, 3).n_trials == 20);
  CHECK(parse_preset("paper") == Preset::paper);

  auto c = desk;
  apply_config(c, nlohmann::json{{"n_trials", 2}, {"n_turns", 50}, {"max_epochs", 30}});
  CHECK(c.n_trials == 2);
  CHECK(c.trial.n_turns == 50);
  CHECK(c.train.max_epochs == 30);
  CHECK_THROWS(apply_config(c, nlohmann::json{{"bogus", 1}}));
  CHECK_FALSE(describe(c).contains("threads"));
}

TEST_CASE("generate, train, eval and curves") {
  TempDir tmp("pipeline");
  const auto data = tmp.path / "data";
  auto r = run({"generate", "--kind", "synthetic", "--teams", "8", "--turns", "80", "--seed", "3", "--out",
                data.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(data / "members.csv"));
  CHECK(fs::exists(data / "truth.csv"));
  CHECK(load_dataset(data).teams.size() == 8);

  const auto model_dir = tmp.path / "model";
  r = run({"train", "--data", data.string(), "--traits", "a", "--seed", "4", "--out", model_dir.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(model_dir / "model.json"));
  CHECK(fs::exists(model_dir / "training_history.csv"));

  const auto eval_dir = tmp.path / "eval";
  r = run({"eval", "--model", (model_dir / "model.json").string(), "--data", data.string(), "--out",
           eval_dir.string()});
  REQUIRE(r.code == 0);
  CHECK(std::isfinite(read_json(eval_dir / "results.json").at("total_nll").get<double>()));

  const auto curve_dir = tmp.path / "curves";
  r = run({"curves", "--model", (model_dir / "model.json").string(), "--out", curve_dir.string()});
  REQUIRE(r.code == 0);
  const auto table = read_csv(curve_dir / "curves_a.csv");
  CHECK(table.header == std::vector<std::string>{"trait", "pi", "d", "peak"});
  CHECK(table.rows.size() == 50);
  for (const auto& row : table.rows) CHECK(std::stod(row[1]) > 0.0);
}

TEST_CASE("eval of an equal-pi memoryless model matches the closed form") {
  TempDir tmp("closed");
  const auto data = load_dataset(kFixture);
  SavedModel m{data.trait_names, TraitEncoder::identity({0}), NetworkWeights::zeros(1, ModelVariant::no_memory)};
  write_json(to_json(m), tmp.path / "model.json");
  const auto r = run({"eval", "--model", (tmp.path / "model.json").string(), "--data", kFixture.string(), "--out",
                      tmp.path.string()});
  REQUIRE(r.code == 0);

  // Each meeting: uniform over the n present members, then over the n - 1 others.
  double expected = 0.0;
  for (const auto& team : data.teams)
    for (const auto& meeting : team.conversation.meetings) {
      const double n = static_cast<double>(meeting.attendance.n_present());
      expected += std::log(n) + static_cast<double>(meeting.turns.size() - 1) * std::log(n - 1.0);
    }
  const double reported = read_json(tmp.path / "results.json").at("total_nll").get<double>();
  CHECK(reported == doctest::Approx(expected).epsilon(1e-8));  // 9 significant digits in the file
  double recomputed = 0.0;
  for (const auto& team : data.teams) {
    const std::vector<SpeakerParams> equal(team.size(), {std::log(2.0) + kPiFloor, 0.0});
    recomputed += sequence_nll(equal, team.conversation);
  }
  CHECK(recomputed == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("stats command") {
  TempDir tmp("stats");
  std::ofstream(tmp.path / "v.csv") << "group,value\nx,1\nx,2\nx,3\ny,4\ny,5\ny,6\n";
  auto r = run({"stats", "--test", "kruskal", "--input", (tmp.path / "v.csv").string(), "--out", tmp.path.string()});
  REQUIRE(r.code == 0);
  auto j = read_json(tmp.path / "results.json");
  CHECK(j.at("result").at("statistic").get<double>() == doctest::Approx(3.857142857));
  r = run({"stats", "--test", "rank-sum", "--input", (tmp.path / "v.csv").string(), "--out", tmp.path.string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(tmp.path / "results.json").at("result").at("p_value").get<double>() == doctest::Approx(0.1));
}

TEST_CASE("output directory precedence") {
  TempDir tmp("env");
  std::ofstream(tmp.path / "v.csv") << "group,value\nx,1\nx,2\ny,4\ny,5\n";
  const auto input = (tmp.path / "v.csv").string();
  ::setenv(kOutputDirEnv, (tmp.path / "from_env").string().c_str(), 1);
  REQUIRE(run({"stats", "--test", "kruskal", "--input", input}).code == 0);
  CHECK(fs::exists(tmp.path / "from_env" / "results.json"));
  REQUIRE(run({"stats", "--test", "kruskal", "--input", input, "--out", (tmp.path / "flag").string()}).code == 0);
  CHECK(fs::exists(tmp.path / "flag" / "results.json"));
  ::unsetenv(kOutputDirEnv);
}

TEST_CASE("study1 output is byte-identical across runs and thread counts") {
  TempDir tmp("det");
  std::ofstream(tmp.path / "c.json") << R"({"n_trials": 2, "n_turns": 60, "n_train_teams": 5, "max_epochs": 25,
                                            "patience": 10, "curve_points": 5})";
  const auto cfg = (tmp.path / "c.json").string();
  REQUIRE(run({"study1", "--seed", "7", "--config", cfg, "--threads", "1", "--out", (tmp.path / "a").string()}).code ==
          0);
  REQUIRE(run({"study1", "--seed", "7", "--config", cfg, "--threads", "3", "--out", (tmp.path / "b").string()}).code ==
          0);
  CHECK(slurp(tmp.path / "a" / "results.json") == slurp(tmp.path / "b" / "results.json"));
  CHECK(slurp(tmp.path / "a" / "loss_diffs.csv") == slurp(tmp.path / "b" / "loss_diffs.csv"));
}
