#include "mlspeak/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"

namespace mlspeak {

namespace {

std::string team_name(const std::string& prefix, std::size_t k) {
  return prefix + std::to_string(k + 1);
}

Dataset make_split(const std::string& prefix, std::size_t n_teams, std::size_t team_size,
                   std::size_t n_turns, const TraitFunctionSpec& function, DataType data_type,
                   std::uint64_t trait_seed, std::uint64_t conversation_seed) {
  Dataset ds;
  ds.trait_names = synthetic_trait_names();
  const auto traits = sample_traits(n_teams * team_size, trait_seed);
  for (std::size_t k = 0; k < n_teams; ++k) {
    std::vector<TraitVector> rows(traits.begin() + static_cast<std::ptrdiff_t>(k * team_size),
                                  traits.begin() + static_cast<std::ptrdiff_t>((k + 1) * team_size));
    ds.teams.push_back(make_synthetic_team(team_name(prefix, k), std::move(rows), function, data_type,
                                           n_turns, derive_seed(conversation_seed, "team", {k})));
  }
  return ds;
}

}  // namespace

TraitFunctionSpec TraitFunctionSpec::from_condition(int condition) {
  if (condition < 1 || condition > 6)
    throw InvalidArgument("trait-function condition must be 1-6, got " + std::to_string(condition));
  static constexpr Correlation kCorr[] = {Correlation::uncorrelated, Correlation::positive,
                                          Correlation::negative};
  return {condition <= 3 ? Complexity::simple : Complexity::complex, kCorr[(condition - 1) % 3]};
}

int TraitFunctionSpec::condition() const {
  return (complexity == Complexity::simple ? 1 : 4) + static_cast<int>(correlation);
}

std::string TraitFunctionSpec::label() const {
  static const char* kCorr[] = {"uncorrelated", "positive", "negative"};
  return std::string(complexity == Complexity::simple ? "simple" : "complex") + "_" +
         kCorr[static_cast<int>(correlation)];
}

std::string to_string(DataType t) {
  switch (t) {
    case DataType::memory: return "Mem";
    case DataType::no_memory: return "NoMem";
    case DataType::same_pi: return "SamePi";
  }
  return "Mem";
}

double f_simple(double x) { return x; }

double g_simple(double x) { return (5.0 / 3.0) * (5.0 * x + 1.0); }

double f_complex(double x) { return std::sqrt(x); }

double g_complex(double x) {
  const double e02 = std::exp(-0.2);
  const double e2 = std::exp(-2.0);
  return 7.5 * (std::exp(-2.0 * x) / (e02 - e2) - e2 + 1.0 / 3.0);
}

std::vector<TraitVector> sample_traits(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("need at least one member");
  Rng rng(seed);
  std::vector<TraitVector> rows(n);
  for (auto& r : rows) {
    const double a = uniform(rng, kTraitMin, kTraitMax);
    const double b = uniform(rng, kTraitMin, kTraitMax);
    r = {a, b};
  }
  return rows;
}

SpeakerParams traits_to_params(double a, double b, const TraitFunctionSpec& spec) {
  const auto f = spec.complexity == Complexity::simple ? f_simple : f_complex;
  const auto g = spec.complexity == Complexity::simple ? g_simple : g_complex;
  const double mean = 0.5 * (a + b);
  switch (spec.correlation) {
    case Correlation::uncorrelated: return {f(a), g(b)};
    case Correlation::positive: return {f(mean), g(mean)};
    case Correlation::negative: return {f(mean), g(1.1 - mean)};
  }
  return {f(a), g(b)};
}

SpeakerParams apply_data_type(SpeakerParams p, DataType type) {
  if (type == DataType::no_memory) p.d = 0.0;
  if (type == DataType::same_pi) p.pi = kSamePiValue;
  return p;
}

std::vector<std::string> synthetic_trait_names() { return {"a", "b"}; }

TeamData make_synthetic_team(std::string team_id, std::vector<TraitVector> traits,
                             const TraitFunctionSpec& function, DataType data_type,
                             std::size_t n_turns, std::uint64_t conversation_seed) {
  TeamData team;
  team.team_id = std::move(team_id);
  std::vector<SpeakerParams> truth;
  for (std::size_t i = 0; i < traits.size(); ++i) {
    team.member_ids.push_back(team.team_id + "_m" + std::to_string(i + 1));
    truth.push_back(apply_data_type(traits_to_params(traits[i][0], traits[i][1], function), data_type));
  }
  team.traits = std::move(traits);
  team.conversation.n_members = truth.size();
  team.conversation.meetings.push_back(
      sample_conversation(truth, n_turns, AttendanceMask::all_present(truth.size()), conversation_seed));
  team.meeting_ids.push_back("1");
  team.truth = std::move(truth);
  return team;
}

SyntheticTrial build_trial(const TrialSpec& spec) {
  if (spec.n_train_teams == 0 || spec.n_val_teams == 0 || spec.n_test_teams == 0 ||
      spec.team_size < 2 || spec.n_turns == 0)
    throw InvalidArgument("trial spec needs positive team counts, team_size >= 2 and n_turns >= 1");
  const auto s = spec.base_seed;
  const std::uint64_t k = spec.trial_index;
  SyntheticTrial trial;
  trial.train = make_split("train", spec.n_train_teams, spec.team_size, spec.n_turns, spec.function,
                           spec.data_type, derive_seed(s, "train-traits", {k}),
                           derive_seed(s, "train-conversations", {k}));
  trial.val = make_split("val", spec.n_val_teams, spec.team_size, spec.n_turns, spec.function,
                         spec.data_type, derive_seed(s, "val-traits"), derive_seed(s, "val-conversations"));
  trial.test = make_split("test", spec.n_test_teams, spec.team_size, spec.n_turns, spec.function,
                          spec.data_type, derive_seed(s, "test-traits"), derive_seed(s, "test-conversations"));
  return trial;
}

Dataset crop_conversations(const Dataset& data, std::size_t length) {
  Dataset out = data;
  for (auto& team : out.teams) {
    for (auto& m : team.conversation.meetings) {
      if (length > m.turns.size())
        throw LengthExceeded("cannot crop a " + std::to_string(m.turns.size()) + "-turn meeting to " +
                             std::to_string(length) + " turns");
      m.turns.resize(length);
    }
  }
  return out;
}

SyntheticTrial crop_conversations(const SyntheticTrial& trial, std::size_t length) {
  return {crop_conversations(trial.train, length), crop_conversations(trial.val, length),
          crop_conversations(trial.test, length)};
}

std::vector<std::vector<std::size_t>> partition_group_size(std::size_t pool_size, std::size_t team_size,
                                                           std::uint64_t seed) {
  if (team_size == 0 || pool_size % team_size != 0)
    throw IndivisiblePool("team size " + std::to_string(team_size) + " does not divide a pool of " +
                          std::to_string(pool_size));
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> teams(pool_size / team_size);
  for (std::size_t k = 0; k < teams.size(); ++k)
    teams[k].assign(order.begin() + static_cast<std::ptrdiff_t>(k * team_size),
                    order.begin() + static_cast<std::ptrdiff_t>((k + 1) * team_size));
  return teams;
}

SyntheticTrial build_group_size_trial(const GroupSizeSpec& spec) {
  const auto s = spec.base_seed;
  const std::uint64_t k = spec.trial_index;
  const auto pool = sample_traits(spec.pool_size, derive_seed(s, "pool-traits"));
  const auto assignment = partition_group_size(spec.pool_size, spec.team_size, derive_seed(s, "assign", {k}));

  SyntheticTrial trial;
  trial.train.trait_names = synthetic_trait_names();
  const auto conv_seed = derive_seed(s, "train-conversations", {k});
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    std::vector<TraitVector> rows;
    for (std::size_t idx : assignment[t]) rows.push_back(pool[idx]);
    trial.train.teams.push_back(make_synthetic_team(team_name("train", t), std::move(rows), spec.function,
                                                    DataType::memory, spec.n_turns,
                                                    derive_seed(conv_seed, "team", {t})));
  }
  trial.val = make_split("val", spec.n_val_teams, spec.team_size, spec.n_turns, spec.function,
                         DataType::memory, derive_seed(s, "val-traits"), derive_seed(s, "val-conversations"));
  trial.test = make_split("test", spec.n_test_teams, spec.team_size, spec.n_turns, spec.function,
                          DataType::memory, derive_seed(s, "test-traits"), derive_seed(s, "test-conversations"));
  return trial;
}

Dataset build_fixture(const FixtureSpec& spec) {
  if (spec.min_team_size < 2 || spec.max_team_size < spec.min_team_size || spec.min_meetings < 1 ||
      spec.max_meetings < spec.min_meetings || spec.min_turns < 1 || spec.max_turns < spec.min_turns ||
      spec.generative_trait >= spec.trait_names.size() || !(spec.trait_high > spec.trait_low))
    throw InvalidArgument("inconsistent fixture spec");

  Rng rng(spec.seed);
  auto draw = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
  };

  Dataset ds;
  ds.trait_names = spec.trait_names;
  for (std::size_t k = 0; k < spec.n_teams; ++k) {
    TeamData team;
    team.team_id = "T" + std::to_string(k + 1);
    const std::size_t size = draw(spec.min_team_size, spec.max_team_size);
    std::vector<SpeakerParams> truth;
    for (std::size_t i = 0; i < size; ++i) {
      team.member_ids.push_back(team.team_id + "_m" + std::to_string(i + 1));
      TraitVector row(spec.trait_names.size());
      for (double& v : row) v = uniform(rng, spec.trait_low, spec.trait_high);
      const double x = (row[spec.generative_trait] - spec.trait_low) / (spec.trait_high - spec.trait_low);
      truth.push_back({spec.pi_low + (spec.pi_high - spec.pi_low) * x, spec.d});
      team.traits.push_back(std::move(row));
    }

    team.conversation.n_members = size;
    const std::size_t n_meetings = draw(spec.min_meetings, spec.max_meetings);
    for (std::size_t m = 0; m < n_meetings; ++m) {
      // The first meeting is always fully attended so every member appears.
      std::vector<bool> present(size, true);
      if (m > 0) {
        do {
          for (std::size_t i = 0; i < size; ++i) present[i] = uniform01(rng) >= spec.absence_rate;
        } while (std::count(present.begin(), present.end(), true) < 2);
      }
      const std::size_t n_turns = draw(spec.min_turns, spec.max_turns);
      team.conversation.meetings.push_back(
          sample_conversation(truth, n_turns, AttendanceMask(present), rng()));
      team.meeting_ids.push_back(std::to_string(m + 1));
    }
    team.truth = std::move(truth);
    ds.teams.push_back(std::move(team));
  }
  return ds;
}

}  // namespace mlspeak
