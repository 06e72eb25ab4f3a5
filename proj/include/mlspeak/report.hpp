#pragma once

// Machine-readable result emission: results.json (nested, versioned) plus
// plot-ready CSV tables. Every float is rounded to 9 significant digits so that
// outputs are stable across runs and platforms. No timestamps or host details
// are written, which keeps reruns byte-identical.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlspeak/experiments.hpp"
#include "mlspeak/stats.hpp"

namespace mlspeak {

inline constexpr int kSchemaVersion = 1;
inline constexpr int kSignificantDigits = 9;

/// Rounds to kSignificantDigits significant decimal digits.
double round_sig(double v);

struct RunMetadata {
  std::string command;
  std::string preset;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

nlohmann::json to_json(const RunMetadata& m);
RunMetadata run_metadata_from_json(const nlohmann::json& j);

nlohmann::json to_json(const stats::TestResult& t);
stats::TestResult test_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const stats::PairwiseMatrix& m);
stats::PairwiseMatrix pairwise_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrialResult& t);
TrialResult trial_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CurveSet& c);
CurveSet curve_set_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Study1Result& r, const RunMetadata& meta);
Study1Result study1_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Study2Result& r, const RunMetadata& meta);
Study2Result study2_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SelectionResult& s);
SelectionResult selection_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Study3Result& r, const RunMetadata& meta);
Study3Result study3_from_json(const nlohmann::json& j);

/// Applies round_sig to every number in the result (what a JSON round trip yields).
Study1Result rounded(const Study1Result& r);

/// Pretty-printed JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Formats a double with kSignificantDigits digits for CSV output.
std::string format_number(double v);

// CSV tables -----------------------------------------------------------------

/// Long format: trial, model, nll, loss_diff.
void write_loss_diffs_csv(const std::vector<TrialResult>& trials, const std::filesystem::path& path);

/// Symmetric k x k matrix of p-values, model names on the header row and first column.
void write_pairwise_csv(const std::vector<std::string>& labels, const stats::PairwiseMatrix& m,
                        const std::filesystem::path& path, bool holm = false);

/// One CSV per curve (columns trait, pi, d, peak; trait holds the normalized value)
/// and per surface (columns <x>, <y>, pi, d, peak). Returns the written paths.
std::vector<std::filesystem::path> write_curve_csvs(const CurveSet& curves, const std::filesystem::path& dir);

/// Writes results.json, loss_diffs.csv, pairwise_p.csv and curves_*.csv.
void write_study1_outputs(const Study1Result& r, const RunMetadata& meta, const std::filesystem::path& dir);

/// Writes results.json, nll.csv (condition, model, trial, nll, true_nll) and
/// pairwise_p[_<group>].csv per pairwise family.
void write_study2_outputs(const Study2Result& r, const RunMetadata& meta, const std::filesystem::path& dir);

/// Writes results.json, selection_path.json, loss_diffs.csv, pairwise_p.csv and curves_*.csv.
void write_study3_outputs(const Study3Result& r, const RunMetadata& meta, const std::filesystem::path& dir);

/// File-name-safe form of a label: alphanumerics kept, everything else '_'.
std::string slug(const std::string& label);

}  // namespace mlspeak
