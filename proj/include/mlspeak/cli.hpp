#pragma once

// Command-line entry point and experiment presets.
//
//   mlspeak <command> [options] --seed N [--preset desk|paper] [--config FILE] [--out DIR]
//
// Commands: generate, train, eval, study1, study2, study3, forward-select, stats, curves.
// The output directory defaults to "results"; the MLSPEAK_OUT environment variable
// replaces that default, and --out takes precedence over both.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlspeak/experiments.hpp"

namespace mlspeak {

inline constexpr const char* kOutputDirEnv = "MLSPEAK_OUT";

enum class Preset { desk, paper };
std::string to_string(Preset p);
Preset parse_preset(const std::string& s);

/// desk: 10 trials of 600-turn conversations; paper: 20 trials of 600 turns.
Study1Config study1_preset(Preset preset, std::uint64_t seed);
/// desk: 10 trials of 300 turns; paper: 20 trials of 600 turns.
Study2Config study2_preset(Preset preset, Study2Kind kind, std::uint64_t seed);
/// 20 sliding-split trials for both presets.
Study3Config study3_preset(Preset preset, std::uint64_t seed);

/// Overrides preset fields from a flat JSON object. Unknown keys are rejected
/// with InvalidArgument so that typos do not silently fall back to defaults.
void apply_config(Study1Config& c, const nlohmann::json& j);
void apply_config(Study2Config& c, const nlohmann::json& j);
void apply_config(Study3Config& c, const nlohmann::json& j);

/// The resolved configuration as recorded in results.json (threads excluded:
/// they never change results).
nlohmann::json describe(const Study1Config& c);
nlohmann::json describe(const Study2Config& c);
nlohmann::json describe(const Study3Config& c);

/// Parses and runs one command. Returns 0 on success; on failure prints a
/// diagnostic to `err` and returns nonzero.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, const char* const* argv);

}  // namespace mlspeak
