#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mlspeak/baselines.hpp"
#include "mlspeak/dataset.hpp"
#include "mlspeak/stats.hpp"
#include "mlspeak/synthetic.hpp"
#include "mlspeak/trait_net.hpp"

namespace mlspeak {

/// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
/// Each index must write only its own output slot.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Test-set losses of every model for one data trial.
struct TrialResult {
  std::size_t trial_index = 0;
  std::vector<std::string> models;
  std::vector<double> nll;
  std::vector<double> loss_diff;  ///< nll - nll of the reference (same-traits) model

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

/// Sum of sequence_nll over the teams under the predictor's parameters.
double evaluate_nll(const ParamPredictor& predictor, std::span<const TeamData> teams);

/// Loss differences against `reference_model`, which must be one of the models.
TrialResult make_trial_result(std::size_t trial_index, std::vector<std::string> models,
                              std::vector<double> nll, const std::string& reference_model);

/// Model-wise columns of loss differences (or raw NLL) across trials.
std::vector<std::vector<double>> by_model(const std::vector<TrialResult>& trials, bool differences = true);

// ---------------------------------------------------------------------------
// Learned-relationship curves

/// Raw-trait domain over the full trait schema.
struct TraitDomain {
  std::vector<std::string> names;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> fixed;  ///< value held by the traits that are not varied

  /// min / max / mean of every column over the member rows.
  static TraitDomain from_rows(std::span<const TraitVector> rows, const std::vector<std::string>& names);
  double raw(std::size_t column, double normalized) const {
    return min[column] + normalized * (max[column] - min[column]);
  }
};

struct CurvePoints {
  std::vector<double> pi;
  std::vector<double> d;
  std::vector<double> peak;

  friend bool operator==(const CurvePoints&, const CurvePoints&) = default;
};

/// One trait varied over a normalized grid in [0, 1], the others fixed.
struct CurveData {
  std::string trait;
  std::vector<double> grid;
  std::vector<CurvePoints> per_trial;
  CurvePoints mean;

  friend bool operator==(const CurveData&, const CurveData&) = default;
};

/// Two traits varied on a grid x grid lattice (row-major, x outer); remaining
/// traits at their domain min or max ("none" when there are only two traits).
struct SurfaceData {
  std::string trait_x;
  std::string trait_y;
  std::string others_at;
  std::vector<double> grid;
  CurvePoints mean;

  friend bool operator==(const SurfaceData&, const SurfaceData&) = default;
};

struct CurveSet {
  std::vector<CurveData> curves;
  std::vector<SurfaceData> surfaces;

  friend bool operator==(const CurveSet&, const CurveSet&) = default;
};

/// Curves for every column in `columns`, surfaces for every pair of them.
/// Models receive raw rows over the domain's schema.
CurveSet extract_curves(const std::vector<FittedNetwork>& models, const TraitDomain& domain,
                        const std::vector<std::size_t>& columns, std::size_t curve_points = 50,
                        std::size_t surface_points = 21);

// ---------------------------------------------------------------------------
// Study 1: model comparison on synthetic data

struct Study1Config {
  TrialSpec trial;  ///< trial_index is set per trial
  std::size_t n_trials = 10;
  TrainConfig train;
  double speak_d = kSpeakDefaultD;
  bool calibrate_speak_d = false;
  std::size_t curve_points = 50;
  std::size_t threads = 0;
};

struct FunctionRecovery {
  double pi_vs_sqrt_a = 0.0;  ///< Spearman, mean learned pi(a) curve vs sqrt(a)
  double d_vs_b = 0.0;        ///< Spearman, mean learned d(b) curve vs b

  friend bool operator==(const FunctionRecovery&, const FunctionRecovery&) = default;
};

struct Study1Result {
  std::vector<std::string> models;
  std::vector<TrialResult> trials;
  stats::TestResult kruskal;
  stats::PairwiseMatrix pairwise;
  CurveSet curves;
  FunctionRecovery recovery;

  friend bool operator==(const Study1Result&, const Study1Result&) = default;
};

Study1Result run_study1(const Study1Config& config);

// ---------------------------------------------------------------------------
// Study 2: sensitivity experiments

enum class Study2Kind { data_model, complexity, length, group_size };
std::string to_string(Study2Kind k);
Study2Kind parse_study2_kind(const std::string& s);

/// Which splits the length experiment crops; the others keep the full length.
enum class CropScope { train, train_val, all };
std::string to_string(CropScope s);
CropScope parse_crop_scope(const std::string& s);

struct Study2Config {
  Study2Kind kind = Study2Kind::data_model;
  TrialSpec trial;
  std::size_t n_trials = 10;
  TrainConfig train;
  TraitFunctionSpec function{Complexity::complex, Correlation::negative};  ///< length / group_size
  std::vector<std::size_t> lengths{50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
  std::vector<std::size_t> group_sizes{10, 8, 6, 4};
  std::size_t pool_size = 120;
  CropScope crop_scope = CropScope::train;
  std::size_t threads = 0;
};

struct Study2Cell {
  std::string condition;  ///< data type, trait function, length or group size
  std::string model;
  std::vector<double> nll;       ///< per trial test NLL
  std::vector<double> true_nll;  ///< per trial NLL under the generating parameters
};

struct NamedTest {
  std::string name;
  stats::TestResult result;
};

struct NamedPairwise {
  std::string name;
  std::vector<std::string> labels;
  stats::PairwiseMatrix matrix;
};

struct Study2Result {
  Study2Kind kind = Study2Kind::data_model;
  std::vector<Study2Cell> cells;
  std::vector<NamedTest> tests;
  std::vector<NamedPairwise> pairwise;

  const Study2Cell& cell(const std::string& condition, const std::string& model) const;
};

Study2Result run_study2(const Study2Config& config);

// ---------------------------------------------------------------------------
// Study 3: real-format data, sliding splits and forward selection

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Circular 12/4/4 window over 20 positions shifted by trial_index.
SplitIndices sliding_splits(std::size_t n_teams, std::size_t trial_index);

struct Study3Config {
  std::size_t n_trials = 20;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::vector<std::string> trait_pool;  ///< empty = every trait in the dataset
  std::size_t max_traits = 3;
  bool normalize_per_split = true;  ///< false: min-max over the whole dataset
  std::optional<double> speak_d;    ///< unset: calibrate against ML-SPEAK per trial
  std::size_t curve_points = 50;
  std::size_t surface_points = 21;
  std::size_t threads = 0;
};

struct SelectionStep {
  std::size_t stage = 0;
  std::vector<std::string> incumbent;
  std::vector<std::string> candidate;
  std::vector<double> loss_diff;  ///< per trial candidate - incumbent
  double median_diff = 0.0;
  stats::TestResult test;         ///< paired one-sided signed-rank, alternative "less"
  bool accepted = false;
};

struct SelectionResult {
  std::vector<SelectionStep> steps;  ///< every evaluated candidate, stage order
  std::vector<std::string> selected;
  std::vector<double> baseline_nll;  ///< same-traits per-trial test NLL
};

/// Team order shuffled once from config.seed; every trial uses sliding_splits.
std::vector<std::size_t> study3_team_order(std::size_t n_teams, std::uint64_t seed);

SelectionResult run_forward_selection(const Dataset& data, const Study3Config& config);

struct Study3Result {
  SelectionResult selection;
  std::vector<std::string> models;
  std::vector<TrialResult> trials;  ///< full-attendance baseline comparison
  stats::TestResult kruskal;
  stats::PairwiseMatrix pairwise;
  CurveSet curves;
};

/// Baseline comparison for a chosen trait set (empty = every pool trait).
Study3Result compare_baselines(const Dataset& data, const std::vector<std::string>& traits,
                               const Study3Config& config);

Study3Result run_study3(const Dataset& data, const Study3Config& config);

}  // namespace mlspeak
