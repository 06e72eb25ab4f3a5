#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlspeak/dataset.hpp"
#include "mlspeak/trait_net.hpp"

namespace mlspeak {

enum class BaselineKind { SameTraits, SameTraitsNoMemory, RandomizedTraits, LinearRegression, SpeakRank };

/// Labels used in reports and plots.
std::string model_label(BaselineKind kind);
inline constexpr const char* kMlSpeakLabel = "ML-SPEAK";

inline constexpr double kSpeakRankRatio = 0.7;
inline constexpr double kSpeakDefaultD = 2.26;

/// Maps a team's raw trait rows to per-member parameters.
using ParamPredictor = std::function<std::vector<SpeakerParams>(const TeamData&)>;

/// A trained trait network plus the encoding of its inputs.
struct FittedNetwork {
  TraitEncoder encoder;
  TrainResult training;

  std::vector<SpeakerParams> predict(const TeamData& team) const;
  ParamPredictor predictor() const;
};

FittedNetwork fit_network(std::span<const TeamData> train, std::span<const TeamData> val,
                          const TraitEncoder& encoder, ModelVariant variant, const TrainConfig& config);

/// Every trait replaced by 0.5 in training, validation and prediction.
/// memory = false trains the d-free variant.
FittedNetwork fit_same_traits(std::span<const TeamData> train, std::span<const TeamData> val,
                              std::size_t n_inputs, bool memory, const TrainConfig& config);

/// Independent within-team permutation of every trait column.
std::vector<TeamData> randomize_traits(std::span<const TeamData> teams, std::uint64_t seed);

/// Trains on within-team shuffled traits; test traits are left untouched.
FittedNetwork fit_randomized_traits(std::span<const TeamData> train, std::span<const TeamData> val,
                                    const TraitEncoder& encoder, std::uint64_t seed,
                                    const TrainConfig& config);

struct RegressionModel {
  std::vector<std::size_t> columns;  ///< trait columns used as regressors
  double intercept = 0.0;
  std::vector<double> coefficients;

  double predict(const TraitVector& raw) const;
};

/// OLS with intercept of each member's total turn count on their traits.
/// Throws SingularDesign for rank-deficient or too-small designs.
RegressionModel fit_turncount_regression(std::span<const TeamData> train, std::vector<std::size_t> columns);

/// Predicted counts clamped at 1e-6 and normalized within the team as pi; d = 0.
std::vector<SpeakerParams> regression_to_params(const RegressionModel& model,
                                                std::span<const TraitVector> team_traits);

/// pi_i = r^rank / sum_j r^j over the team (rank 1 = highest predicted count,
/// ties by member order), one shared d.
std::vector<SpeakerParams> speak_rank_params(const RegressionModel& model,
                                             std::span<const TraitVector> team_traits, double d_value,
                                             double ratio = kSpeakRankRatio);

/// Shared d making median(pi_speak) / d equal median(pi_ml) / median(d_ml).
double calibrated_speak_d(std::span<const SpeakerParams> speak, std::span<const SpeakerParams> ml);

}  // namespace mlspeak
