#pragma once

// Synthetic datasets: Uniform[0.1, 1] traits (a, b), the fixed trait -> (pi, d)
// functions, independent training draws per data trial with shared
// validation/test sets, cropping, group-size partitions, and a multi-meeting
// fixture in the real-data layout.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mlspeak/dataset.hpp"

namespace mlspeak {

enum class Complexity { simple, complex };
enum class Correlation { uncorrelated, positive, negative };

struct TraitFunctionSpec {
  Complexity complexity = Complexity::complex;
  Correlation correlation = Correlation::uncorrelated;

  /// Conditions are numbered 1-6: simple {uncorrelated, positive, negative}
  /// then complex {uncorrelated, positive, negative}.
  static TraitFunctionSpec from_condition(int condition);
  int condition() const;
  std::string label() const;

  friend bool operator==(const TraitFunctionSpec&, const TraitFunctionSpec&) = default;
};

/// How ground-truth parameters are altered before conversations are drawn.
enum class DataType {
  memory,     ///< parameters as produced by the trait functions
  no_memory,  ///< d = 0 for everybody
  same_pi,    ///< pi = 0.1 for everybody, d unchanged
};

std::string to_string(DataType t);

inline constexpr double kTraitMin = 0.1;
inline constexpr double kTraitMax = 1.0;
inline constexpr double kSamePiValue = 0.1;

double f_simple(double x);
double g_simple(double x);
double f_complex(double x);
double g_complex(double x);

/// Rows of two traits (a, b), each i.i.d. Uniform[0.1, 1].
std::vector<TraitVector> sample_traits(std::size_t n, std::uint64_t seed);

SpeakerParams traits_to_params(double a, double b, const TraitFunctionSpec& spec);
SpeakerParams apply_data_type(SpeakerParams p, DataType type);

struct TrialSpec {
  std::size_t n_train_teams = 20;
  std::size_t n_val_teams = 5;
  std::size_t n_test_teams = 5;
  std::size_t team_size = 5;
  std::size_t n_turns = 600;
  TraitFunctionSpec function;
  DataType data_type = DataType::memory;
  std::uint64_t base_seed = 0;
  std::size_t trial_index = 0;
};

struct SyntheticTrial {
  Dataset train;
  Dataset val;
  Dataset test;

  friend bool operator==(const SyntheticTrial&, const SyntheticTrial&) = default;
};

/// Trait names used by every two-trait synthetic dataset.
std::vector<std::string> synthetic_trait_names();

/// Builds one team of full-attendance single-meeting data from traits.
TeamData make_synthetic_team(std::string team_id, std::vector<TraitVector> traits,
                             const TraitFunctionSpec& function, DataType data_type,
                             std::size_t n_turns, std::uint64_t conversation_seed);

/// Training data depends on trial_index; validation and test depend only on base_seed.
/// Traits never depend on the trait function, so conditions share (a, b) draws.
SyntheticTrial build_trial(const TrialSpec& spec);

/// Throws LengthExceeded if any meeting is shorter than `length`.
Dataset crop_conversations(const Dataset& data, std::size_t length);
SyntheticTrial crop_conversations(const SyntheticTrial& trial, std::size_t length);

/// Random partition of pool indices [0, pool_size) into teams of `team_size`.
/// Throws IndivisiblePool unless team_size divides pool_size.
std::vector<std::vector<std::size_t>> partition_group_size(std::size_t pool_size, std::size_t team_size,
                                                           std::uint64_t seed);

struct GroupSizeSpec {
  std::size_t pool_size = 120;
  std::size_t team_size = 5;
  std::size_t n_val_teams = 5;
  std::size_t n_test_teams = 5;
  std::size_t n_turns = 600;
  TraitFunctionSpec function;
  std::uint64_t base_seed = 0;
  std::size_t trial_index = 0;
};

/// The 120-member pool is fixed by base_seed; its assignment to teams is
/// reshuffled per trial. Validation and test teams come from fresh members.
SyntheticTrial build_group_size_trial(const GroupSizeSpec& spec);

/// Multi-meeting dataset in the real-data layout, with absences, where one
/// trait drives pi and the remaining traits are noise.
struct FixtureSpec {
  std::size_t n_teams = 20;
  std::size_t min_team_size = 4;
  std::size_t max_team_size = 6;
  std::size_t min_meetings = 3;
  std::size_t max_meetings = 5;
  std::size_t min_turns = 100;
  std::size_t max_turns = 200;
  double absence_rate = 0.1;
  std::vector<std::string> trait_names{"extraversion", "agreeableness", "openness", "dominance"};
  std::size_t generative_trait = 0;
  double trait_low = 1.0;   ///< survey scale bounds
  double trait_high = 5.0;
  double pi_low = 0.15;     ///< pi at trait_low
  double pi_high = 1.2;     ///< pi at trait_high
  double d = 3.0;
  std::uint64_t seed = 2024;
};

Dataset build_fixture(const FixtureSpec& spec);

}  // namespace mlspeak
