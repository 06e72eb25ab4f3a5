#include "mlspeak/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"

namespace mlspeak {

namespace {

std::vector<std::size_t> iota_columns(std::size_t n) {
  std::vector<std::size_t> c(n);
  std::iota(c.begin(), c.end(), std::size_t{0});
  return c;
}

TrainConfig with_seed(TrainConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

std::vector<double> linspace01(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

void add_point(CurvePoints& c, const SpeakerParams& p) {
  c.pi.push_back(p.pi);
  c.d.push_back(p.d);
  c.peak.push_back(peak_likelihood(p));
}

CurvePoints average(const std::vector<CurvePoints>& curves) {
  CurvePoints mean;
  const std::size_t n = curves.front().pi.size();
  mean.pi.assign(n, 0.0);
  mean.d.assign(n, 0.0);
  mean.peak.assign(n, 0.0);
  for (const auto& c : curves)
    for (std::size_t i = 0; i < n; ++i) {
      mean.pi[i] += c.pi[i];
      mean.d[i] += c.d[i];
      mean.peak[i] += c.peak[i];
    }
  const double k = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < n; ++i) {
    mean.pi[i] /= k;
    mean.d[i] /= k;
    mean.peak[i] /= k;
  }
  return mean;
}

SpeakerParams predict_row(const FittedNetwork& model, const TraitVector& raw) {
  return forward(model.training.weights, model.encoder.encode(raw));
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double evaluate_nll(const ParamPredictor& predictor, std::span<const TeamData> teams) {
  double total = 0.0;
  for (const auto& team : teams) {
    if (team.conversation.meetings.empty()) continue;
    total += sequence_nll(predictor(team), team.conversation);
  }
  return total;
}

TrialResult make_trial_result(std::size_t trial_index, std::vector<std::string> models, std::vector<double> nll,
                              const std::string& reference_model) {
  const auto it = std::find(models.begin(), models.end(), reference_model);
  if (it == models.end()) throw InvalidArgument("reference model '" + reference_model + "' missing");
  const double ref = nll[static_cast<std::size_t>(it - models.begin())];
  TrialResult r{trial_index, std::move(models), std::move(nll), {}};
  for (double v : r.nll) r.loss_diff.push_back(v - ref);
  return r;
}

std::vector<std::vector<double>> by_model(const std::vector<TrialResult>& trials, bool differences) {
  if (trials.empty()) return {};
  std::vector<std::vector<double>> cols(trials.front().models.size());
  for (const auto& t : trials)
    for (std::size_t m = 0; m < cols.size(); ++m) cols[m].push_back(differences ? t.loss_diff[m] : t.nll[m]);
  return cols;
}

// ---------------------------------------------------------------------------

TraitDomain TraitDomain::from_rows(std::span<const TraitVector> rows, const std::vector<std::string>& names) {
  if (rows.empty()) throw InvalidArgument("trait domain needs at least one row");
  TraitDomain d;
  d.names = names;
  const std::size_t n = names.size();
  d.min.assign(n, std::numeric_limits<double>::infinity());
  d.max.assign(n, -std::numeric_limits<double>::infinity());
  d.fixed.assign(n, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < n; ++j) {
      d.min[j] = std::min(d.min[j], r.at(j));
      d.max[j] = std::max(d.max[j], r[j]);
      d.fixed[j] += r[j];
    }
  for (double& v : d.fixed) v /= static_cast<double>(rows.size());
  return d;
}

CurveSet extract_curves(const std::vector<FittedNetwork>& models, const TraitDomain& domain,
                        const std::vector<std::size_t>& columns, std::size_t curve_points,
                        std::size_t surface_points) {
  if (models.empty()) throw InvalidArgument("extract_curves needs at least one trained model");
  CurveSet set;
  const auto grid = linspace01(curve_points);
  for (std::size_t col : columns) {
    CurveData curve;
    curve.trait = domain.names.at(col);
    curve.grid = grid;
    for (const auto& model : models) {
      CurvePoints pts;
      for (double g : grid) {
        TraitVector row = domain.fixed;
        row[col] = domain.raw(col, g);
        add_point(pts, predict_row(model, row));
      }
      curve.per_trial.push_back(std::move(pts));
    }
    curve.mean = average(curve.per_trial);
    set.curves.push_back(std::move(curve));
  }

  if (columns.size() < 2 || surface_points == 0) return set;
  const auto sgrid = linspace01(surface_points);
  for (std::size_t a = 0; a < columns.size(); ++a) {
    for (std::size_t b = a + 1; b < columns.size(); ++b) {
      const std::vector<std::string> settings =
          columns.size() == 2 ? std::vector<std::string>{"none"} : std::vector<std::string>{"min", "max"};
      for (const auto& at : settings) {
        SurfaceData surf;
        surf.trait_x = domain.names.at(columns[a]);
        surf.trait_y = domain.names.at(columns[b]);
        surf.others_at = at;
        surf.grid = sgrid;
        TraitVector base = domain.fixed;
        for (std::size_t c : columns) {
          if (c == columns[a] || c == columns[b] || at == "none") continue;
          base[c] = at == "min" ? domain.min[c] : domain.max[c];
        }
        std::vector<CurvePoints> per_model;
        for (const auto& model : models) {
          CurvePoints pts;
          for (double gx : sgrid)
            for (double gy : sgrid) {
              TraitVector row = base;
              row[columns[a]] = domain.raw(columns[a], gx);
              row[columns[b]] = domain.raw(columns[b], gy);
              add_point(pts, predict_row(model, row));
            }
          per_model.push_back(std::move(pts));
        }
        surf.mean = average(per_model);
        set.surfaces.push_back(std::move(surf));
      }
    }
  }
  return set;
}

// ---------------------------------------------------------------------------
// Study 1

Study1Result run_study1(const Study1Config& config) {
  const std::vector<std::string> models{kMlSpeakLabel,
                                        model_label(BaselineKind::SameTraits),
                                        model_label(BaselineKind::SameTraitsNoMemory),
                                        model_label(BaselineKind::RandomizedTraits),
                                        model_label(BaselineKind::LinearRegression),
                                        model_label(BaselineKind::SpeakRank)};
  const std::uint64_t base = config.trial.base_seed;
  std::vector<TrialResult> trials(config.n_trials);
  std::vector<FittedNetwork> ml_models(config.n_trials);

  parallel_for(config.n_trials, config.threads, [&](std::size_t k) {
    TrialSpec spec = config.trial;
    spec.trial_index = k;
    const auto trial = build_trial(spec);
    const auto& train = trial.train.teams;
    const auto& val = trial.val.teams;
    const auto& test = trial.test.teams;
    const auto columns = iota_columns(trial.train.trait_names.size());
    const auto encoder = TraitEncoder::identity(columns);

    auto ml = fit_network(train, val, encoder, ModelVariant::full,
                          with_seed(config.train, derive_seed(base, "init-ml", {k})));
    const auto same = fit_same_traits(train, val, columns.size(), true,
                                      with_seed(config.train, derive_seed(base, "init-same", {k})));
    const auto same_nomem = fit_same_traits(train, val, columns.size(), false,
                                            with_seed(config.train, derive_seed(base, "init-same-nomem", {k})));
    const auto randomized = fit_randomized_traits(train, val, encoder, derive_seed(base, "shuffle", {k}),
                                                  with_seed(config.train, derive_seed(base, "init-rand", {k})));
    const auto regression = fit_turncount_regression(train, columns);

    double speak_d = config.speak_d;
    if (config.calibrate_speak_d) {
      std::vector<SpeakerParams> speak_all, ml_all;
      for (const auto& team : test) {
        const auto s = speak_rank_params(regression, team.traits, 1.0);
        const auto m = ml.predict(team);
        speak_all.insert(speak_all.end(), s.begin(), s.end());
        ml_all.insert(ml_all.end(), m.begin(), m.end());
      }
      speak_d = calibrated_speak_d(speak_all, ml_all);
    }

    const std::vector<double> nll{
        evaluate_nll(ml.predictor(), test),
        evaluate_nll(same.predictor(), test),
        evaluate_nll(same_nomem.predictor(), test),
        evaluate_nll(randomized.predictor(), test),
        evaluate_nll([&](const TeamData& t) { return regression_to_params(regression, t.traits); }, test),
        evaluate_nll([&](const TeamData& t) { return speak_rank_params(regression, t.traits, speak_d); }, test),
    };
    trials[k] = make_trial_result(k, models, nll, model_label(BaselineKind::SameTraits));
    ml_models[k] = std::move(ml);
  });

  Study1Result result;
  result.models = models;
  result.trials = std::move(trials);
  const auto groups = by_model(result.trials);
  result.kruskal = stats::kruskal_wallis(groups);
  result.pairwise = stats::pairwise_wilcoxon(groups);

  TraitDomain domain;
  domain.names = synthetic_trait_names();
  domain.min = {kTraitMin, kTraitMin};
  domain.max = {kTraitMax, kTraitMax};
  domain.fixed = {0.5, 0.5};
  result.curves = extract_curves(ml_models, domain, {0, 1}, config.curve_points, 0);

  std::vector<double> sqrt_a, b;
  for (double g : result.curves.curves[0].grid) sqrt_a.push_back(std::sqrt(domain.raw(0, g)));
  for (double g : result.curves.curves[1].grid) b.push_back(domain.raw(1, g));
  result.recovery.pi_vs_sqrt_a = stats::spearman(result.curves.curves[0].mean.pi, sqrt_a);
  result.recovery.d_vs_b = stats::spearman(result.curves.curves[1].mean.d, b);
  return result;
}

// ---------------------------------------------------------------------------
// Study 2

std::string to_string(Study2Kind k) {
  switch (k) {
    case Study2Kind::data_model: return "data_model";
    case Study2Kind::complexity: return "complexity";
    case Study2Kind::length: return "length";
    case Study2Kind::group_size: return "group_size";
  }
  return "data_model";
}

Study2Kind parse_study2_kind(const std::string& s) {
  if (s == "data_model" || s == "data-model") return Study2Kind::data_model;
  if (s == "complexity") return Study2Kind::complexity;
  if (s == "length") return Study2Kind::length;
  if (s == "group_size" || s == "group-size") return Study2Kind::group_size;
  throw InvalidArgument("unknown study2 kind '" + s + "'");
}

std::string to_string(CropScope s) {
  switch (s) {
    case CropScope::train:
      return "train";
    case CropScope::train_val:
      return "train_val";
    case CropScope::all:
      return "all";
  }
  return "train_val";
}

CropScope parse_crop_scope(const std::string& s) {
  if (s == "train") return CropScope::train;
  if (s == "train_val") return CropScope::train_val;
  if (s == "all") return CropScope::all;
  throw InvalidArgument("unknown crop scope '" + s + "' (expected train, train_val or all)");
}

const Study2Cell& Study2Result::cell(const std::string& condition, const std::string& model) const {
  for (const auto& c : cells)
    if (c.condition == condition && c.model == model) return c;
  throw InvalidArgument("no study2 cell " + condition + "/" + model);
}

namespace {

struct CellJob {
  std::string condition;
  std::string model;
  std::function<std::pair<double, double>(std::size_t trial)> run;  // (nll, true nll)
};

Study2Result run_cells(Study2Kind kind, std::vector<CellJob> jobs, std::size_t n_trials, std::size_t threads) {
  Study2Result result;
  result.kind = kind;
  for (const auto& j : jobs) result.cells.push_back({j.condition, j.model, std::vector<double>(n_trials),
                                                     std::vector<double>(n_trials)});
  parallel_for(jobs.size() * n_trials, threads, [&](std::size_t idx) {
    const std::size_t c = idx / n_trials;
    const std::size_t k = idx % n_trials;
    const auto [nll, truth] = jobs[c].run(k);
    result.cells[c].nll[k] = nll;
    result.cells[c].true_nll[k] = truth;
  });
  return result;
}

double fit_and_score(const SyntheticTrial& trial, ModelVariant variant, const TrainConfig& train) {
  const auto enc = TraitEncoder::identity(iota_columns(trial.train.trait_names.size()));
  const auto model = fit_network(trial.train.teams, trial.val.teams, enc, variant, train);
  return evaluate_nll(model.predictor(), trial.test.teams);
}

void add_group_tests(Study2Result& r, const std::string& name, const std::vector<std::string>& labels,
                     const std::vector<std::vector<double>>& groups) {
  r.tests.push_back({name + ": Kruskal-Wallis", stats::kruskal_wallis(groups)});
  r.pairwise.push_back({name, labels, stats::pairwise_wilcoxon(groups)});
}

}  // namespace

Study2Result run_study2(const Study2Config& config) {
  const std::uint64_t base = config.trial.base_seed;
  auto seeded = [&](const std::string& tag, std::size_t k) {
    return with_seed(config.train, derive_seed(base, tag, {k}));
  };
  std::vector<CellJob> jobs;

  switch (config.kind) {
    case Study2Kind::data_model: {
      const std::vector<std::pair<ModelVariant, std::string>> variants{
          {ModelVariant::full, "Mem"}, {ModelVariant::no_memory, "NoMem"}, {ModelVariant::shared_pi, "SamePi"}};
      for (DataType dt : {DataType::memory, DataType::no_memory, DataType::same_pi})
        for (const auto& [variant, label] : variants)
          jobs.push_back({to_string(dt), label, [&, dt, variant = variant, label = label](std::size_t k) {
                            TrialSpec spec = config.trial;
                            spec.function = {Complexity::complex, Correlation::uncorrelated};
                            spec.data_type = dt;
                            spec.trial_index = k;
                            const auto trial = build_trial(spec);
                            return std::pair{fit_and_score(trial, variant, seeded("init-" + label, k)),
                                             true_nll(trial.test.teams)};
                          }});
      break;
    }
    case Study2Kind::complexity: {
      for (int cond = 1; cond <= 6; ++cond) {
        const auto fn = TraitFunctionSpec::from_condition(cond);
        jobs.push_back({fn.label(), kMlSpeakLabel, [&, fn](std::size_t k) {
                          TrialSpec spec = config.trial;
                          spec.function = fn;
                          spec.trial_index = k;
                          const auto trial = build_trial(spec);
                          return std::pair{fit_and_score(trial, ModelVariant::full, seeded("init-ml", k)),
                                           true_nll(trial.test.teams)};
                        }});
      }
      break;
    }
    case Study2Kind::length: {
      const std::size_t source = *std::max_element(config.lengths.begin(), config.lengths.end());
      for (std::size_t len : config.lengths)
        jobs.push_back({std::to_string(len), kMlSpeakLabel, [&, len, source](std::size_t k) {
                          TrialSpec spec = config.trial;
                          spec.function = config.function;
                          spec.n_turns = source;
                          spec.trial_index = k;
                          auto trial = build_trial(spec);
                          if (config.crop_scope == CropScope::all) {
                            trial = crop_conversations(trial, len);
                          } else {
                            trial.train = crop_conversations(trial.train, len);
                            if (config.crop_scope == CropScope::train_val)
                              trial.val = crop_conversations(trial.val, len);
                          }
                          return std::pair{fit_and_score(trial, ModelVariant::full, seeded("init-ml", k)),
                                           true_nll(trial.test.teams)};
                        }});
      break;
    }
    case Study2Kind::group_size: {
      for (std::size_t size : config.group_sizes) {
        const std::string label = std::to_string(config.pool_size / std::max<std::size_t>(size, 1)) + "x" +
                                  std::to_string(size);
        jobs.push_back({label, kMlSpeakLabel, [&, size](std::size_t k) {
                          GroupSizeSpec spec;
                          spec.pool_size = config.pool_size;
                          spec.team_size = size;
                          spec.n_val_teams = config.trial.n_val_teams;
                          spec.n_test_teams = config.trial.n_test_teams;
                          spec.n_turns = config.trial.n_turns;
                          spec.function = config.function;
                          spec.base_seed = base;
                          spec.trial_index = k;
                          const auto trial = build_group_size_trial(spec);
                          return std::pair{fit_and_score(trial, ModelVariant::full, seeded("init-ml", k)),
                                           true_nll(trial.test.teams)};
                        }});
      }
      break;
    }
  }

  auto result = run_cells(config.kind, std::move(jobs), config.n_trials, config.threads);

  // Statistics mirror each experiment's analysis.
  if (config.kind == Study2Kind::data_model) {
    for (const char* dt : {"Mem", "NoMem", "SamePi"}) {
      std::vector<std::string> labels;
      std::vector<std::vector<double>> groups;
      for (const auto& c : result.cells)
        if (c.condition == dt) {
          labels.push_back(c.model);
          groups.push_back(c.nll);
        }
      add_group_tests(result, std::string("data ") + dt, labels, groups);
    }
  } else if (config.kind == Study2Kind::complexity) {
    std::vector<double> simple, complex;
    for (const auto& c : result.cells) {
      auto& dst = c.condition.rfind("simple", 0) == 0 ? simple : complex;
      dst.insert(dst.end(), c.nll.begin(), c.nll.end());
    }
    result.tests.push_back({"simple vs complex: rank sum", stats::wilcoxon_rank_sum(simple, complex)});
    for (const char* cx : {"simple", "complex"}) {
      std::vector<std::string> labels;
      std::vector<std::vector<double>> groups;
      for (const auto& c : result.cells)
        if (c.condition.rfind(cx, 0) == 0) {
          labels.push_back(c.condition);
          groups.push_back(c.nll);
        }
      add_group_tests(result, cx, labels, groups);
    }
  } else {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> groups;
    for (const auto& c : result.cells) {
      labels.push_back(c.condition);
      groups.push_back(c.nll);
    }
    add_group_tests(result, to_string(config.kind), labels, groups);
    if (config.kind == Study2Kind::length && groups.size() >= 2) {
      // Shortest training length against the longest: is the longest one better?
      result.tests.push_back({"shortest vs longest: rank sum (greater)",
                              stats::wilcoxon_rank_sum(groups.front(), groups.back(), stats::Alternative::greater)});
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Study 3

SplitIndices sliding_splits(std::size_t n_teams, std::size_t trial_index) {
  constexpr std::size_t kTeams = 20, kTrain = 12, kVal = 4;
  if (n_teams != kTeams)
    throw WrongTeamCount("sliding splits need exactly 20 teams, got " + std::to_string(n_teams));
  if (trial_index >= kTeams) throw InvalidArgument("trial index must be in [0, 19]");
  SplitIndices s;
  for (std::size_t i = 0; i < kTeams; ++i) {
    const std::size_t team = (trial_index + i) % kTeams;
    if (i < kTrain)
      s.train.push_back(team);
    else if (i < kTrain + kVal)
      s.val.push_back(team);
    else
      s.test.push_back(team);
  }
  return s;
}

std::vector<std::size_t> study3_team_order(std::size_t n_teams, std::uint64_t seed) {
  auto order = iota_columns(n_teams);
  Rng rng(derive_seed(seed, "team-order"));
  shuffle(order.begin(), order.end(), rng);
  return order;
}

namespace {

struct Study3Trial {
  std::vector<TeamData> train, val, test;
};

class Study3Context {
 public:
  Study3Context(const Dataset& data, const Study3Config& config) : data_(data), config_(config) {
    if (data.teams.size() < 20)
      throw InsufficientTeams("the sliding protocol needs 20 teams, dataset has " +
                              std::to_string(data.teams.size()));
    if (config.n_trials == 0 || config.n_trials > 20) throw InvalidArgument("study 3 runs 1-20 trials");
    const auto order = study3_team_order(data.teams.size(), config.seed);
    for (std::size_t k = 0; k < config.n_trials; ++k) {
      const auto split = sliding_splits(data.teams.size(), k);
      Study3Trial t;
      for (std::size_t i : split.train) t.train.push_back(data.teams[order[i]]);
      for (std::size_t i : split.val) t.val.push_back(data.teams[order[i]]);
      for (std::size_t i : split.test) t.test.push_back(data.teams[order[i]]);
      trials_.push_back(std::move(t));
    }
    all_rows_ = member_rows(data.teams);
  }

  const Study3Trial& trial(std::size_t k) const { return trials_[k]; }
  std::size_t n_trials() const { return trials_.size(); }

  std::vector<std::size_t> columns(const std::vector<std::string>& traits) const {
    std::vector<std::size_t> c;
    for (const auto& t : traits) c.push_back(data_.trait_index(t));
    return c;
  }

  TraitEncoder encoder(const std::vector<std::size_t>& cols, std::size_t k) const {
    if (config_.normalize_per_split) return TraitEncoder::minmax(cols, member_rows(trials_[k].train));
    return TraitEncoder::minmax(cols, all_rows_);
  }

  TrainConfig train_config(const std::string& tag, std::size_t k) const {
    return with_seed(config_.train, derive_seed(config_.seed, tag, {k}));
  }

  FittedNetwork fit_traits(const std::vector<std::string>& traits, std::size_t k) const {
    const auto& t = trials_[k];
    if (traits.empty()) return fit_same_traits(t.train, t.val, 1, true, train_config("init-same", k));
    return fit_network(t.train, t.val, encoder(columns(traits), k), ModelVariant::full,
                       train_config("init-ml", k));
  }

  std::vector<double> test_losses(const std::vector<std::string>& traits) const {
    std::vector<double> out(trials_.size());
    parallel_for(trials_.size(), config_.threads, [&](std::size_t k) {
      out[k] = evaluate_nll(fit_traits(traits, k).predictor(), trials_[k].test);
    });
    return out;
  }

 private:
  const Dataset& data_;
  const Study3Config& config_;
  std::vector<Study3Trial> trials_;
  std::vector<TraitVector> all_rows_;
};

std::vector<std::string> trait_pool(const Dataset& data, const Study3Config& config) {
  return config.trait_pool.empty() ? data.trait_names : config.trait_pool;
}

}  // namespace

SelectionResult run_forward_selection(const Dataset& data, const Study3Config& config) {
  const Study3Context ctx(data, config);
  const auto pool = trait_pool(data, config);
  for (const auto& t : pool) data.trait_index(t);

  SelectionResult result;
  result.baseline_nll = ctx.test_losses({});
  std::vector<double> incumbent_loss = result.baseline_nll;

  for (std::size_t stage = 1; stage <= config.max_traits; ++stage) {
    std::vector<SelectionStep> candidates;
    for (const auto& trait : pool) {
      if (std::find(result.selected.begin(), result.selected.end(), trait) != result.selected.end()) continue;
      SelectionStep step;
      step.stage = stage;
      step.incumbent = result.selected;
      step.candidate = result.selected;
      step.candidate.push_back(trait);
      const auto losses = ctx.test_losses(step.candidate);
      for (std::size_t k = 0; k < losses.size(); ++k) step.loss_diff.push_back(losses[k] - incumbent_loss[k]);
      step.median_diff = stats::median(step.loss_diff);
      try {
        step.test = stats::wilcoxon_signed_rank(step.loss_diff, stats::Alternative::less);
      } catch (const AllZeroDiffs&) {
        step.test = {0.0, 1.0, "Wilcoxon signed rank test (all differences zero)", stats::Alternative::less, true};
      }
      candidates.push_back(std::move(step));
    }
    if (candidates.empty()) break;

    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (!(candidates[c].median_diff < 0.0)) continue;
      if (!best || candidates[c].test.p_value < candidates[*best].test.p_value ||
          (candidates[c].test.p_value == candidates[*best].test.p_value &&
           candidates[c].median_diff < candidates[*best].median_diff))
        best = c;
    }
    if (best) {
      candidates[*best].accepted = true;
      result.selected = candidates[*best].candidate;
      for (std::size_t k = 0; k < incumbent_loss.size(); ++k) incumbent_loss[k] += candidates[*best].loss_diff[k];
    }
    for (auto& c : candidates) result.steps.push_back(std::move(c));
    if (!best) break;
  }
  return result;
}

Study3Result compare_baselines(const Dataset& data, const std::vector<std::string>& traits,
                               const Study3Config& config) {
  const Study3Context ctx(data, config);
  const auto chosen = traits.empty() ? trait_pool(data, config) : traits;
  const auto cols = ctx.columns(chosen);

  Study3Result result;
  result.models = {kMlSpeakLabel,
                   model_label(BaselineKind::SameTraits),
                   model_label(BaselineKind::SameTraitsNoMemory),
                   model_label(BaselineKind::RandomizedTraits),
                   model_label(BaselineKind::LinearRegression),
                   model_label(BaselineKind::SpeakRank)};
  result.trials.resize(ctx.n_trials());
  std::vector<FittedNetwork> ml_models(ctx.n_trials());

  parallel_for(ctx.n_trials(), config.threads, [&](std::size_t k) {
    const auto& t = ctx.trial(k);
    std::vector<TeamData> test_full, train_full;
    for (const auto& team : t.test) test_full.push_back(full_attendance_only(team));
    for (const auto& team : t.train) train_full.push_back(full_attendance_only(team));

    const auto encoder = ctx.encoder(cols, k);
    auto ml = fit_network(t.train, t.val, encoder, ModelVariant::full, ctx.train_config("init-ml", k));
    const auto same = fit_same_traits(t.train, t.val, cols.size(), true, ctx.train_config("init-same", k));
    const auto same_nomem =
        fit_same_traits(t.train, t.val, cols.size(), false, ctx.train_config("init-same-nomem", k));
    const auto randomized = fit_randomized_traits(t.train, t.val, encoder, derive_seed(config.seed, "shuffle", {k}),
                                                  ctx.train_config("init-rand", k));
    const auto regression = fit_turncount_regression(train_full, cols);

    double speak_d = config.speak_d.value_or(0.0);
    if (!config.speak_d) {
      std::vector<SpeakerParams> speak_all, ml_all;
      for (const auto& team : test_full) {
        if (team.conversation.meetings.empty()) continue;
        const auto s = speak_rank_params(regression, team.traits, 1.0);
        const auto m = ml.predict(team);
        speak_all.insert(speak_all.end(), s.begin(), s.end());
        ml_all.insert(ml_all.end(), m.begin(), m.end());
      }
      speak_d = speak_all.empty() ? kSpeakDefaultD : calibrated_speak_d(speak_all, ml_all);
    }

    const std::vector<double> nll{
        evaluate_nll(ml.predictor(), test_full),
        evaluate_nll(same.predictor(), test_full),
        evaluate_nll(same_nomem.predictor(), test_full),
        evaluate_nll(randomized.predictor(), test_full),
        evaluate_nll([&](const TeamData& team) { return regression_to_params(regression, team.traits); }, test_full),
        evaluate_nll([&](const TeamData& team) { return speak_rank_params(regression, team.traits, speak_d); },
                     test_full),
    };
    result.trials[k] = make_trial_result(k, result.models, nll, model_label(BaselineKind::SameTraits));
    ml_models[k] = std::move(ml);
  });

  const auto groups = by_model(result.trials);
  result.kruskal = stats::kruskal_wallis(groups);
  result.pairwise = stats::pairwise_wilcoxon(groups);
  const auto domain = TraitDomain::from_rows(member_rows(data.teams), data.trait_names);
  result.curves = extract_curves(ml_models, domain, cols, config.curve_points, config.surface_points);
  return result;
}

Study3Result run_study3(const Dataset& data, const Study3Config& config) {
  auto selection = run_forward_selection(data, config);
  auto result = compare_baselines(data, selection.selected, config);
  result.selection = std::move(selection);
  return result;
}

}  // namespace mlspeak
