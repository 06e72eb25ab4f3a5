#pragma once

// Shared trait -> (pi, d) map: inputs(n_traits) -> tanh hidden(10) -> 2 outputs,
// with softplus on both outputs so that pi > 0 and d >= 0. Fitted by
// full-batch Adam on the summed negative log-likelihood of the training teams,
// keeping the weights with the best validation loss.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "mlspeak/turn_model.hpp"

namespace mlspeak {

using TraitVector = std::vector<double>;

inline constexpr std::size_t kHiddenUnits = 10;
inline constexpr double kPiFloor = 1e-6;

/// Min-max bounds per trait, fitted on a training split.
struct TraitNormalizer {
  std::vector<double> min;
  std::vector<double> max;

  /// Throws DegenerateTrait if any trait is constant over `samples`.
  static TraitNormalizer fit(std::span<const TraitVector> samples);

  /// Linear map min -> 0, max -> 1; values outside the bounds extrapolate.
  TraitVector apply(const TraitVector& raw) const;
};

std::vector<TraitVector> normalize_traits(std::span<const TraitVector> raw,
                                          const TraitNormalizer& normalizer);

/// Turns a member's raw trait row into network input: selects columns and
/// then either passes them through, min-max normalizes them, or replaces them
/// with a constant (the same-traits baselines).
struct TraitEncoder {
  enum class Mode { identity, minmax, constant };

  std::vector<std::size_t> columns;
  Mode mode = Mode::identity;
  std::optional<TraitNormalizer> normalizer;
  double constant = 0.5;

  std::size_t n_inputs() const { return columns.size(); }
  TraitVector encode(const TraitVector& raw) const;

  static TraitEncoder identity(std::vector<std::size_t> columns);
  static TraitEncoder constant_value(std::vector<std::size_t> columns, double value = 0.5);
  /// Fits min-max bounds for `columns` over every member row in `rows`.
  static TraitEncoder minmax(std::vector<std::size_t> columns, std::span<const TraitVector> rows);
};

enum class ModelVariant {
  full,       ///< learned pi and d per member
  no_memory,  ///< d forced to 0
  shared_pi,  ///< one learned pi for everybody, d per member
};

std::string_view to_string(ModelVariant v);
ModelVariant parse_model_variant(std::string_view s);

struct NetworkWeights {
  std::size_t n_inputs = 0;
  ModelVariant variant = ModelVariant::full;
  std::vector<double> w1;  ///< kHiddenUnits x n_inputs, row-major
  std::vector<double> b1;  ///< kHiddenUnits
  std::vector<double> w2;  ///< 2 x kHiddenUnits, row-major; row 0 -> pi, row 1 -> d
  std::vector<double> b2;  ///< 2
  double shared_pi = 0.0;  ///< pre-softplus pi, used only by ModelVariant::shared_pi

  static NetworkWeights zeros(std::size_t n_inputs, ModelVariant variant = ModelVariant::full);
  /// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer; biases start at 0.
  static NetworkWeights glorot(std::size_t n_inputs, ModelVariant variant, std::uint64_t seed);

  std::size_t n_params() const;
  std::vector<double> pack() const;
  void unpack(std::span<const double> flat);

  friend bool operator==(const NetworkWeights&, const NetworkWeights&) = default;
};

double softplus(double x);

SpeakerParams forward(const NetworkWeights& weights, std::span<const double> input);

/// One team in network-input form.
struct TrainingTeam {
  std::vector<TraitVector> inputs;  ///< one encoded row per member
  TeamConversation conversation;
};

std::vector<SpeakerParams> predict_team(const NetworkWeights& weights,
                                        std::span<const TraitVector> inputs);

double dataset_nll(const NetworkWeights& weights, std::span<const TrainingTeam> teams);

struct LossAndGradient {
  double loss = 0.0;
  NetworkWeights gradient;
};

LossAndGradient nll_and_gradient(const NetworkWeights& weights, std::span<const TrainingTeam> teams);

/// Exact gradient of dataset_nll with respect to every weight.
NetworkWeights gradient(const NetworkWeights& weights, std::span<const TrainingTeam> teams);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;
  double val_nll = 0.0;
};

struct TrainResult {
  NetworkWeights weights;  ///< best validation weights
  std::size_t best_epoch = 0;
  double best_val_nll = 0.0;
  std::vector<EpochRecord> history;
};

/// Every epoch evaluates the current weights on both splits, then takes one
/// Adam step on the training loss. Stops once `patience` epochs pass without
/// a validation improvement, or after max_epochs.
/// Throws NonFiniteLoss if a loss or gradient stops being finite.
TrainResult train(std::span<const TrainingTeam> train_teams, std::span<const TrainingTeam> val_teams,
                  std::size_t n_inputs, ModelVariant variant, const TrainConfig& config);

/// A fitted network together with the trait schema needed to apply it.
struct SavedModel {
  std::vector<std::string> trait_names;  ///< full schema the encoder's columns index into
  TraitEncoder encoder;
  NetworkWeights weights;
};

nlohmann::json to_json(const NetworkWeights& w);
NetworkWeights weights_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SavedModel& m);
SavedModel saved_model_from_json(const nlohmann::json& j);

}  // namespace mlspeak
