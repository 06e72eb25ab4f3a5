#include "mlspeak/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "mlspeak/dataset_io.hpp"
#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"
#include "mlspeak/report.hpp"

namespace mlspeak {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Preset p) { return p == Preset::desk ? "desk" : "paper"; }

Preset parse_preset(const std::string& s) {
  if (s == "desk") return Preset::desk;
  if (s == "paper") return Preset::paper;
  throw InvalidArgument("unknown preset '" + s + "' (expected desk or paper)");
}

Study1Config study1_preset(Preset preset, std::uint64_t seed) {
  Study1Config c;
  c.n_trials = preset == Preset::desk ? 10 : 20;
  c.trial.n_turns = 600;
  c.trial.base_seed = seed;
  c.train.seed = seed;
  return c;
}

Study2Config study2_preset(Preset preset, Study2Kind kind, std::uint64_t seed) {
  Study2Config c;
  c.kind = kind;
  c.n_trials = preset == Preset::desk ? 10 : 20;
  c.trial.n_turns = preset == Preset::desk ? 300 : 600;
  c.trial.base_seed = seed;
  c.train.seed = seed;
  return c;
}

Study3Config study3_preset(Preset /*preset*/, std::uint64_t seed) {
  Study3Config c;
  c.n_trials = 20;
  c.seed = seed;
  c.train.seed = seed;
  return c;
}

namespace {

DataType parse_data_type(const std::string& s) {
  for (auto t : {DataType::memory, DataType::no_memory, DataType::same_pi})
    if (to_string(t) == s) return t;
  throw InvalidArgument("unknown data type '" + s + "' (expected Mem, NoMem or SamePi)");
}

/// Consumes known keys from a config object; whatever is left over is an error.
class ConfigReader {
 public:
  explicit ConfigReader(const json& j) : j_(j) {
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  }

  template <class T>
  void read(const std::string& key, T& target) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      target = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument("config key '" + key + "': " + e.what());
    }
  }

  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    used_.insert(key);
    return true;
  }
  const json& at(const std::string& key) const { return j_.at(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw InvalidArgument("unknown config key '" + k + "'");
  }

 private:
  const json& j_;
  std::set<std::string> used_;
};

void read_train(ConfigReader& r, TrainConfig& t) {
  r.read("learning_rate", t.learning_rate);
  r.read("max_epochs", t.max_epochs);
  r.read("patience", t.patience);
}

void read_trial(ConfigReader& r, TrialSpec& t) {
  r.read("n_train_teams", t.n_train_teams);
  r.read("n_val_teams", t.n_val_teams);
  r.read("n_test_teams", t.n_test_teams);
  r.read("team_size", t.team_size);
  r.read("n_turns", t.n_turns);
  if (r.has("condition")) t.function = TraitFunctionSpec::from_condition(r.at("condition").get<int>());
  if (r.has("data_type")) t.data_type = parse_data_type(r.at("data_type").get<std::string>());
}

json describe_train(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"max_epochs", t.max_epochs}, {"patience", t.patience}};
}

json describe_trial(const TrialSpec& t) {
  return {{"n_train_teams", t.n_train_teams}, {"n_val_teams", t.n_val_teams}, {"n_test_teams", t.n_test_teams},
          {"team_size", t.team_size},         {"n_turns", t.n_turns},         {"condition", t.function.condition()},
          {"function", t.function.label()},   {"data_type", to_string(t.data_type)}};
}

}  // namespace

void apply_config(Study1Config& c, const json& j) {
  ConfigReader r(j);
  r.read("n_trials", c.n_trials);
  read_trial(r, c.trial);
  read_train(r, c.train);
  r.read("speak_d", c.speak_d);
  r.read("calibrate_speak_d", c.calibrate_speak_d);
  r.read("curve_points", c.curve_points);
  r.read("threads", c.threads);
  r.finish();
}

void apply_config(Study2Config& c, const json& j) {
  ConfigReader r(j);
  r.read("n_trials", c.n_trials);
  read_trial(r, c.trial);
  read_train(r, c.train);
  if (r.has("function")) c.function = TraitFunctionSpec::from_condition(r.at("function").get<int>());
  r.read("lengths", c.lengths);
  r.read("group_sizes", c.group_sizes);
  r.read("pool_size", c.pool_size);
  if (r.has("crop_scope")) c.crop_scope = parse_crop_scope(r.at("crop_scope").get<std::string>());
  r.read("threads", c.threads);
  r.finish();
}

void apply_config(Study3Config& c, const json& j) {
  ConfigReader r(j);
  r.read("n_trials", c.n_trials);
  read_train(r, c.train);
  r.read("trait_pool", c.trait_pool);
  r.read("max_traits", c.max_traits);
  r.read("normalize_per_split", c.normalize_per_split);
  if (r.has("speak_d")) {
    const auto& v = r.at("speak_d");
    c.speak_d = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  }
  r.read("curve_points", c.curve_points);
  r.read("surface_points", c.surface_points);
  r.read("threads", c.threads);
  r.finish();
}

json describe(const Study1Config& c) {
  return {{"n_trials", c.n_trials},         {"trial", describe_trial(c.trial)},
          {"train", describe_train(c.train)}, {"speak_d", c.speak_d},
          {"calibrate_speak_d", c.calibrate_speak_d}, {"curve_points", c.curve_points}};
}

json describe(const Study2Config& c) {
  return {{"kind", to_string(c.kind)},
          {"n_trials", c.n_trials},
          {"trial", describe_trial(c.trial)},
          {"train", describe_train(c.train)},
          {"function", c.function.label()},
          {"lengths", c.lengths},
          {"group_sizes", c.group_sizes},
          {"pool_size", c.pool_size},
          {"crop_scope", to_string(c.crop_scope)}};
}

json describe(const Study3Config& c) {
  return {{"n_trials", c.n_trials},
          {"train", describe_train(c.train)},
          {"trait_pool", c.trait_pool},
          {"max_traits", c.max_traits},
          {"normalize_per_split", c.normalize_per_split},
          {"speak_d", c.speak_d ? json(*c.speak_d) : json(nullptr)},
          {"curve_points", c.curve_points},
          {"surface_points", c.surface_points}};
}

// ---------------------------------------------------------------------------

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out;
  std::string preset = "desk";
  std::size_t threads = 0;
};

struct Context {
  GlobalOptions global;
  std::ostream& out;

  std::uint64_t seed(const std::string& command) const {
    if (!global.seed) throw InvalidArgument(command + " is stochastic and requires --seed");
    return *global.seed;
  }
  Preset preset() const { return parse_preset(global.preset); }
  json config() const {
    if (global.config_path.empty()) return json::object();
    return read_json(global.config_path);
  }
  fs::path out_dir() const {
    if (!global.out.empty()) return global.out;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "results";
  }
  RunMetadata meta(const std::string& command, json config) const {
    return {command, global.preset, global.seed.value_or(0), std::move(config)};
  }
};

ColumnMapping mapping_from(const std::string& path) {
  return path.empty() ? ColumnMapping{} : load_column_mapping(path);
}

std::vector<std::size_t> resolve_columns(const Dataset& data, const std::vector<std::string>& traits) {
  std::vector<std::size_t> cols;
  if (traits.empty()) {
    for (std::size_t c = 0; c < data.trait_names.size(); ++c) cols.push_back(c);
  } else {
    for (const auto& t : traits) cols.push_back(data.trait_index(t));
  }
  return cols;
}

/// Reorders every team's trait rows into `names`' order (a saved model's schema).
std::vector<TeamData> conform_traits(const Dataset& data, const std::vector<std::string>& names) {
  std::vector<std::size_t> source;
  for (const auto& n : names) source.push_back(data.trait_index(n));
  std::vector<TeamData> teams = data.teams;
  for (auto& team : teams)
    for (auto& row : team.traits) {
      TraitVector r;
      for (std::size_t s : source) r.push_back(row[s]);
      row = std::move(r);
    }
  return teams;
}

// generate ---------------------------------------------------------------------

struct GenerateOptions {
  std::string kind = "synthetic";
  std::size_t teams = 20;
  std::size_t team_size = 5;
  std::optional<std::size_t> turns;
  int condition = 4;
  std::string data_type = "Mem";
};

void cmd_generate(const Context& ctx, const GenerateOptions& o) {
  const auto seed = ctx.seed("generate");
  const auto dir = ctx.out_dir();
  Dataset data;
  json config;
  if (o.kind == "fixture") {
    FixtureSpec spec;
    spec.seed = seed;
    spec.n_teams = o.teams;
    data = build_fixture(spec);
    config = {{"kind", "fixture"}, {"teams", spec.n_teams}};
  } else if (o.kind == "synthetic") {
    const auto function = TraitFunctionSpec::from_condition(o.condition);
    const auto type = parse_data_type(o.data_type);
    const std::size_t turns = o.turns.value_or(ctx.preset() == Preset::desk ? 300 : 600);
    data.trait_names = synthetic_trait_names();
    for (std::size_t t = 0; t < o.teams; ++t)
      data.teams.push_back(make_synthetic_team("team" + std::to_string(t + 1),
                                               sample_traits(o.team_size, derive_seed(seed, "generate-traits", {t})),
                                               function, type, turns, derive_seed(seed, "generate-turns", {t})));
    config = {{"kind", "synthetic"}, {"teams", o.teams},       {"team_size", o.team_size},
              {"turns", turns},      {"function", function.label()}, {"data_type", to_string(type)}};
  } else {
    throw InvalidArgument("unknown generate kind '" + o.kind + "' (expected synthetic or fixture)");
  }
  write_dataset(data, dir);
  if (std::any_of(data.teams.begin(), data.teams.end(), [](const TeamData& t) { return t.truth.has_value(); })) {
    std::ofstream truth(dir / "truth.csv");
    truth << "team_id,member_id,pi,d\n";
    for (const auto& team : data.teams)
      if (team.truth)
        for (std::size_t i = 0; i < team.size(); ++i)
          truth << team.team_id << ',' << team.member_ids[i] << ',' << format_number((*team.truth)[i].pi) << ','
                << format_number((*team.truth)[i].d) << '\n';
  }
  write_json({{"schema_version", kSchemaVersion}, {"run", to_json(ctx.meta("generate", config))}},
             dir / "generate.json");
  ctx.out << "wrote " << data.teams.size() << " teams to " << dir.string() << '\n';
}

// train / eval -------------------------------------------------------------------

struct TrainOptions {
  std::string data;
  std::string val;
  std::string mapping;
  std::vector<std::string> traits;
  std::string variant = "full";
  std::string normalize = "minmax";
  double val_fraction = 0.2;
};

void cmd_train(const Context& ctx, const TrainOptions& o) {
  const auto seed = ctx.seed("train");
  const auto mapping = mapping_from(o.mapping);
  const Dataset data = load_dataset(o.data, mapping);
  std::vector<TeamData> train = data.teams;
  std::vector<TeamData> val;
  if (!o.val.empty()) {
    val = load_dataset(o.val, mapping).teams;
  } else {
    if (data.teams.size() < 2) throw InvalidArgument("need at least two teams to hold out validation data");
    std::vector<std::size_t> order(data.teams.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "train-val-split"));
    shuffle(order.begin(), order.end(), rng);
    const auto n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(o.val_fraction * static_cast<double>(order.size()) + 0.5), 1, order.size() - 1);
    train.clear();
    for (std::size_t k = 0; k < order.size(); ++k)
      (k < n_val ? val : train).push_back(data.teams[order[k]]);
  }

  const auto columns = resolve_columns(data, o.traits);
  TraitEncoder encoder;
  if (o.normalize == "minmax") {
    const auto rows = member_rows(train);
    encoder = TraitEncoder::minmax(columns, rows);
  } else if (o.normalize == "identity") {
    encoder = TraitEncoder::identity(columns);
  } else {
    throw InvalidArgument("unknown normalization '" + o.normalize + "' (expected minmax or identity)");
  }

  TrainConfig cfg;
  cfg.seed = derive_seed(seed, "init");
  {
    json c = ctx.config();
    ConfigReader r(c);
    read_train(r, cfg);
    r.finish();
  }
  const auto variant = parse_model_variant(o.variant);
  const auto fitted = fit_network(train, val, encoder, variant, cfg);

  const auto dir = ctx.out_dir();
  fs::create_directories(dir);
  write_json(to_json(SavedModel{data.trait_names, fitted.encoder, fitted.training.weights}), dir / "model.json");
  {
    std::ofstream hist(dir / "training_history.csv");
    hist << "epoch,train_nll,val_nll\n";
    for (const auto& e : fitted.training.history)
      hist << e.epoch << ',' << format_number(e.train_nll) << ',' << format_number(e.val_nll) << '\n';
  }
  json config = {{"data", o.data},         {"traits", o.traits.empty() ? data.trait_names : o.traits},
                 {"variant", o.variant},   {"normalize", o.normalize},
                 {"train_teams", train.size()}, {"val_teams", val.size()},
                 {"train", describe_train(cfg)}};
  json results = {{"schema_version", kSchemaVersion},
                  {"run", to_json(ctx.meta("train", config))},
                  {"best_epoch", fitted.training.best_epoch},
                  {"best_val_nll", round_sig(fitted.training.best_val_nll)},
                  {"epochs_run", fitted.training.history.size()}};
  write_json(results, dir / "results.json");
  ctx.out << "best epoch " << fitted.training.best_epoch << ", validation NLL "
          << format_number(fitted.training.best_val_nll) << "; model written to " << (dir / "model.json").string()
          << '\n';
}

struct EvalOptions {
  std::string model;
  std::string data;
  std::string mapping;
};

void cmd_eval(const Context& ctx, const EvalOptions& o) {
  const auto saved = saved_model_from_json(read_json(o.model));
  const Dataset data = load_dataset(o.data, mapping_from(o.mapping));
  const auto teams = conform_traits(data, saved.trait_names);
  const FittedNetwork net{saved.encoder, TrainResult{saved.weights, 0, 0.0, {}}};
  json per_team = json::array();
  double total = 0.0;
  std::size_t turns = 0;
  for (const auto& team : teams) {
    const double nll = sequence_nll(net.predict(team), team.conversation);
    total += nll;
    turns += team.conversation.total_turns();
    per_team.push_back({{"team_id", team.team_id}, {"nll", round_sig(nll)}, {"turns", team.conversation.total_turns()}});
  }
  json results = {{"schema_version", kSchemaVersion},
                  {"run", to_json(ctx.meta("eval", {{"model", o.model}, {"data", o.data}}))},
                  {"total_nll", round_sig(total)},
                  {"turns", turns},
                  {"nll_per_turn", turns ? round_sig(total / static_cast<double>(turns)) : 0.0},
                  {"teams", per_team}};
  write_json(results, ctx.out_dir() / "results.json");
  ctx.out << "total NLL " << format_number(total) << " over " << turns << " turns\n";
}

// studies -------------------------------------------------------------------------

void print_summary(std::ostream& out, const std::vector<std::string>& models, const std::vector<TrialResult>& trials) {
  if (trials.empty()) return;
  const auto diffs = by_model(trials, true);
  for (std::size_t m = 0; m < models.size(); ++m)
    out << "  " << models[m] << ": median loss difference " << format_number(stats::median(diffs[m])) << '\n';
}

void cmd_study1(const Context& ctx) {
  auto cfg = study1_preset(ctx.preset(), ctx.seed("study1"));
  apply_config(cfg, ctx.config());
  if (ctx.global.threads) cfg.threads = ctx.global.threads;
  const auto result = run_study1(cfg);
  const auto dir = ctx.out_dir();
  write_study1_outputs(result, ctx.meta("study1", describe(cfg)), dir);
  ctx.out << "study1: " << result.trials.size() << " trials, Kruskal-Wallis p = "
          << format_number(result.kruskal.p_value) << '\n';
  print_summary(ctx.out, result.models, result.trials);
  ctx.out << "results written to " << dir.string() << '\n';
}

void cmd_study2(const Context& ctx, const std::string& kind) {
  auto cfg = study2_preset(ctx.preset(), parse_study2_kind(kind), ctx.seed("study2"));
  apply_config(cfg, ctx.config());
  if (ctx.global.threads) cfg.threads = ctx.global.threads;
  const auto result = run_study2(cfg);
  const auto dir = ctx.out_dir();
  write_study2_outputs(result, ctx.meta("study2", describe(cfg)), dir);
  ctx.out << "study2 " << kind << ":\n";
  for (const auto& c : result.cells)
    ctx.out << "  " << c.condition << " / " << c.model << ": median NLL " << format_number(stats::median(c.nll))
            << '\n';
  for (const auto& t : result.tests)
    ctx.out << "  " << t.name << ": p = " << format_number(t.result.p_value) << '\n';
  ctx.out << "results written to " << dir.string() << '\n';
}

struct Study3Options {
  std::string data;
  std::string mapping;
  std::vector<std::string> traits;
};

Study3Config study3_config(const Context& ctx, const std::string& command, const Study3Options& o) {
  auto cfg = study3_preset(ctx.preset(), ctx.seed(command));
  apply_config(cfg, ctx.config());
  if (!o.traits.empty()) cfg.trait_pool = o.traits;
  if (ctx.global.threads) cfg.threads = ctx.global.threads;
  return cfg;
}

void cmd_study3(const Context& ctx, const Study3Options& o) {
  const auto cfg = study3_config(ctx, "study3", o);
  const Dataset data = load_dataset(o.data, mapping_from(o.mapping));
  const auto result = run_study3(data, cfg);
  const auto dir = ctx.out_dir();
  auto described = describe(cfg);
  described["data"] = o.data;
  write_study3_outputs(result, ctx.meta("study3", described), dir);
  ctx.out << "study3: selected traits [";
  for (std::size_t i = 0; i < result.selection.selected.size(); ++i)
    ctx.out << (i ? ", " : "") << result.selection.selected[i];
  ctx.out << "]\n";
  print_summary(ctx.out, result.models, result.trials);
  ctx.out << "results written to " << dir.string() << '\n';
}

void cmd_forward_select(const Context& ctx, const Study3Options& o) {
  const auto cfg = study3_config(ctx, "forward-select", o);
  const Dataset data = load_dataset(o.data, mapping_from(o.mapping));
  const auto selection = run_forward_selection(data, cfg);
  const auto dir = ctx.out_dir();
  auto described = describe(cfg);
  described["data"] = o.data;
  json j = {{"schema_version", kSchemaVersion}, {"run", to_json(ctx.meta("forward-select", described))}};
  j["selection"] = to_json(selection);
  write_json(j, dir / "selection_path.json");
  write_json(j, dir / "results.json");
  for (const auto& s : selection.steps) {
    ctx.out << "  stage " << s.stage << " +";
    for (const auto& t : s.candidate) ctx.out << ' ' << t;
    ctx.out << ": median diff " << format_number(s.median_diff) << ", p = " << format_number(s.test.p_value)
            << (s.accepted ? "  [accepted]" : "") << '\n';
  }
  ctx.out << "selected:";
  for (const auto& t : selection.selected) ctx.out << ' ' << t;
  ctx.out << "\nresults written to " << dir.string() << '\n';
}

// stats -------------------------------------------------------------------------

struct StatsOptions {
  std::string test;
  std::string input;
  std::string alternative = "two.sided";
  std::string group_column = "group";
  std::string value_column = "value";
};

void cmd_stats(const Context& ctx, const StatsOptions& o) {
  const auto table = read_csv(o.input);
  const auto alt = stats::parse_alternative(o.alternative);
  const std::size_t vc = table.column(o.value_column);
  stats::TestResult result;
  std::vector<std::string> labels;
  if (o.test == "signed-rank") {
    std::vector<double> diffs;
    for (const auto& row : table.rows) diffs.push_back(std::stod(row[vc]));
    result = stats::wilcoxon_signed_rank(diffs, alt);
  } else {
    const std::size_t gc = table.column(o.group_column);
    std::vector<std::vector<double>> groups;
    for (const auto& row : table.rows) {
      auto it = std::find(labels.begin(), labels.end(), row[gc]);
      if (it == labels.end()) {
        labels.push_back(row[gc]);
        groups.emplace_back();
        it = labels.end() - 1;
      }
      groups[static_cast<std::size_t>(it - labels.begin())].push_back(std::stod(row[vc]));
    }
    if (o.test == "kruskal") {
      result = stats::kruskal_wallis(groups);
    } else if (o.test == "rank-sum") {
      if (groups.size() != 2) throw InvalidArgument("rank-sum needs exactly two groups");
      result = stats::wilcoxon_rank_sum(groups[0], groups[1], alt);
    } else {
      throw InvalidArgument("unknown test '" + o.test + "' (expected kruskal, rank-sum or signed-rank)");
    }
  }
  json j = {{"schema_version", kSchemaVersion},
            {"run", to_json(ctx.meta("stats", {{"test", o.test}, {"input", o.input}}))},
            {"groups", labels},
            {"result", to_json(result)}};
  write_json(j, ctx.out_dir() / "results.json");
  ctx.out << result.method << ": statistic = " << format_number(result.statistic)
          << ", p = " << format_number(result.p_value) << '\n';
}

// curves ------------------------------------------------------------------------

struct CurvesOptions {
  std::string model;
  std::size_t points = 50;
  std::size_t surface_points = 21;
  double min = 0.0;
  double max = 1.0;
};

void cmd_curves(const Context& ctx, const CurvesOptions& o) {
  const auto saved = saved_model_from_json(read_json(o.model));
  const auto& enc = saved.encoder;
  const std::size_t n = saved.trait_names.size();
  TraitDomain domain{saved.trait_names, std::vector<double>(n, o.min), std::vector<double>(n, o.max), {}};
  if (enc.mode == TraitEncoder::Mode::minmax && enc.normalizer)
    for (std::size_t j = 0; j < enc.columns.size(); ++j) {
      domain.min[enc.columns[j]] = enc.normalizer->min[j];
      domain.max[enc.columns[j]] = enc.normalizer->max[j];
    }
  for (std::size_t c = 0; c < n; ++c) domain.fixed.push_back(0.5 * (domain.min[c] + domain.max[c]));
  const std::vector<FittedNetwork> models{FittedNetwork{enc, TrainResult{saved.weights, 0, 0.0, {}}}};
  const auto set = extract_curves(models, domain, enc.columns, o.points, o.surface_points);
  const auto written = write_curve_csvs(set, ctx.out_dir());
  for (const auto& p : written) ctx.out << "wrote " << p.string() << '\n';
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trait-conditioned turn-taking models: data generation, training, studies and statistics", "mlspeak"};
  app.require_subcommand(1);
  app.fallthrough();

  Context ctx{{}, out};
  auto& g = ctx.global;
  app.add_option("--seed", g.seed, "Base seed (required by every stochastic command)");
  app.add_option("--config", g.config_path, "JSON file overriding preset settings");
  app.add_option("--out", g.out, std::string("Output directory (default: $") + kOutputDirEnv + " or ./results)");
  app.add_option("--preset", g.preset, "Experiment scale")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores); results do not depend on it");

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic or fixture dataset bundle");
  generate->add_option("--kind", gen.kind, "synthetic or fixture")->check(CLI::IsMember({"synthetic", "fixture"}));
  generate->add_option("--teams", gen.teams, "Number of teams");
  generate->add_option("--team-size", gen.team_size, "Members per synthetic team");
  generate->add_option("--turns", gen.turns, "Turns per synthetic conversation");
  generate->add_option("--condition", gen.condition, "Trait-function condition 1-6")->check(CLI::Range(1, 6));
  generate->add_option("--data-type", gen.data_type, "Mem, NoMem or SamePi");

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a trait network on a dataset bundle");
  train->add_option("--data", tr.data, "Dataset directory")->required();
  train->add_option("--val", tr.val, "Validation dataset directory (default: hold out teams)");
  train->add_option("--mapping", tr.mapping, "Column-mapping JSON file");
  train->add_option("--traits", tr.traits, "Trait columns to use (default: all)")->delimiter(',');
  train->add_option("--variant", tr.variant, "full, no_memory or shared_pi");
  train->add_option("--normalize", tr.normalize, "minmax or identity");
  train->add_option("--val-fraction", tr.val_fraction, "Share of teams held out for validation")
      ->check(CLI::Range(0.0, 1.0));

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a saved model's NLL on a dataset bundle");
  eval->add_option("--model", ev.model, "model.json written by train")->required();
  eval->add_option("--data", ev.data, "Dataset directory")->required();
  eval->add_option("--mapping", ev.mapping, "Column-mapping JSON file");

  auto* study1 = app.add_subcommand("study1", "Model comparison on synthetic data");

  std::string study2_kind = "data_model";
  auto* study2 = app.add_subcommand("study2", "Sensitivity experiments");
  study2->add_option("--kind", study2_kind, "data_model, complexity, length or group_size");

  Study3Options s3;
  auto* study3 = app.add_subcommand("study3", "Forward selection and baseline comparison on real-format data");
  auto* fsel = app.add_subcommand("forward-select", "Forward trait selection only");
  for (auto* sc : {study3, fsel}) {
    sc->add_option("--data", s3.data, "Dataset directory")->required();
    sc->add_option("--mapping", s3.mapping, "Column-mapping JSON file");
    sc->add_option("--traits", s3.traits, "Candidate trait pool (default: all)")->delimiter(',');
  }

  StatsOptions st;
  auto* statscmd = app.add_subcommand("stats", "Rank tests on a CSV of values");
  statscmd->add_option("--test", st.test, "kruskal, rank-sum or signed-rank")->required();
  statscmd->add_option("--input", st.input, "CSV with group and value columns")->required();
  statscmd->add_option("--alternative", st.alternative, "two.sided, less or greater");
  statscmd->add_option("--group-column", st.group_column, "Group column name");
  statscmd->add_option("--value-column", st.value_column, "Value column name");

  CurvesOptions cv;
  auto* curves = app.add_subcommand("curves", "Learned pi, d and peak-likelihood curves of a saved model");
  curves->add_option("--model", cv.model, "model.json written by train")->required();
  curves->add_option("--points", cv.points, "Grid points per curve");
  curves->add_option("--surface-points", cv.surface_points, "Grid points per surface axis (0 = none)");
  curves->add_option("--min", cv.min, "Raw lower bound for identity-encoded traits");
  curves->add_option("--max", cv.max, "Raw upper bound for identity-encoded traits");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (generate->parsed()) cmd_generate(ctx, gen);
    else if (train->parsed()) cmd_train(ctx, tr);
    else if (eval->parsed()) cmd_eval(ctx, ev);
    else if (study1->parsed()) cmd_study1(ctx);
    else if (study2->parsed()) cmd_study2(ctx, study2_kind);
    else if (study3->parsed()) cmd_study3(ctx, s3);
    else if (fsel->parsed()) cmd_forward_select(ctx, s3);
    else if (statscmd->parsed()) cmd_stats(ctx, st);
    else if (curves->parsed()) cmd_curves(ctx, cv);
    return 0;
  } catch (const std::exception& e) {
    err << "mlspeak: error: " << e.what() << '\n';
    return 1;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace mlspeak
