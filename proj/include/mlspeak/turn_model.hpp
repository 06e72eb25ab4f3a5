#pragma once

// Two-parameter turn-taking model. Member i's likelihood of taking turn t is
//
//   l_i(t) = 0                               if i spoke on turn t-1
//          = pi_i + d_i * exp(-0.5 (t - t_i))  otherwise (t_i = last turn of i)
//
// with the memory term dropped before a member's first turn in a meeting.
// Likelihoods are normalized over present members to give the next-speaker
// distribution; the loss of an observed sequence is its negative log-likelihood.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mlspeak {

/// Decay rate of the memory term. Fixed by the model; never varied in experiments.
inline constexpr double kMemoryDecayRate = 0.5;

struct SpeakerParams {
  double pi = 1.0;  ///< baseline propensity, > 0
  double d = 0.0;   ///< memory weight, >= 0

  friend bool operator==(const SpeakerParams&, const SpeakerParams&) = default;
};

/// Derivative of a loss with respect to one member's (pi, d).
struct ParamGradient {
  double pi = 0.0;
  double d = 0.0;
};

/// Per-meeting presence flags.
class AttendanceMask {
 public:
  AttendanceMask() = default;
  explicit AttendanceMask(std::vector<bool> present);
  static AttendanceMask all_present(std::size_t n_members);

  std::size_t size() const { return present_.size(); }
  bool present(std::size_t member) const { return present_[member]; }
  std::size_t n_present() const;
  bool full() const { return n_present() == size(); }
  const std::vector<bool>& flags() const { return present_; }

  friend bool operator==(const AttendanceMask&, const AttendanceMask&) = default;

 private:
  std::vector<bool> present_;
};

/// Speaker indices (0-based member indices) for one sitting.
struct Meeting {
  std::vector<std::size_t> turns;
  AttendanceMask attendance;

  friend bool operator==(const Meeting&, const Meeting&) = default;
};

struct TeamConversation {
  std::size_t n_members = 0;
  std::vector<Meeting> meetings;

  std::size_t total_turns() const;
  friend bool operator==(const TeamConversation&, const TeamConversation&) = default;
};

/// Last-turn bookkeeping within one meeting. Turns are numbered from 1.
class HistoryState {
 public:
  explicit HistoryState(std::size_t n_members) : last_turn_(n_members) {}

  std::size_t current_turn() const { return current_turn_; }
  std::optional<std::size_t> last_turn(std::size_t member) const { return last_turn_[member]; }
  std::size_t size() const { return last_turn_.size(); }

  /// Records that `speaker` took the current turn and moves to the next one.
  void advance(std::size_t speaker);

 private:
  std::vector<std::optional<std::size_t>> last_turn_;
  std::size_t current_turn_ = 1;
};

/// Throws InvalidArgument unless pi > 0 (finite) and d >= 0 (finite).
void validate(const SpeakerParams& params);

/// e^{-0.5 gap}; cached for small gaps.
double memory_decay(std::size_t gap);

double speaking_likelihood(const SpeakerParams& params, const HistoryState& state,
                           std::size_t member);

/// Probability of each member taking the current turn. Absent members get 0.
/// Throws AllZeroLikelihood when every present member has zero likelihood.
std::vector<double> next_speaker_distribution(std::span<const SpeakerParams> team,
                                              const HistoryState& state,
                                              const AttendanceMask& attendance);

Meeting sample_conversation(std::span<const SpeakerParams> team, std::size_t n_turns,
                            const AttendanceMask& attendance, std::uint64_t seed);

/// Natural-log negative log-likelihood of one meeting. When `grad` is
/// non-empty (one entry per member) the derivative with respect to every
/// member's (pi, d) is accumulated into it.
/// Throws ZeroProbabilityEvent when a realized speaker has probability 0.
double meeting_nll(std::span<const SpeakerParams> team, const Meeting& meeting,
                   std::span<ParamGradient> grad = {});

/// Sum of meeting_nll over meetings; history resets at each meeting start.
double sequence_nll(std::span<const SpeakerParams> team, const TeamConversation& conversation,
                    std::span<ParamGradient> grad = {});

/// Reported peak post-turn likelihood, pi + d e^{-0.5}.
double peak_likelihood(const SpeakerParams& params);

}  // namespace mlspeak
