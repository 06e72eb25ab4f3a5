#include "mlspeak/turn_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"

namespace mlspeak {

namespace {

constexpr std::size_t kDecayTableSize = 256;

const std::array<double, kDecayTableSize>& decay_table() {
  static const auto table = [] {
    std::array<double, kDecayTableSize> t{};
    for (std::size_t g = 0; g < kDecayTableSize; ++g)
      t[g] = std::exp(-kMemoryDecayRate * static_cast<double>(g));
    return t;
  }();
  return table;
}

void check_shapes(std::span<const SpeakerParams> team, const AttendanceMask& attendance) {
  if (attendance.size() != team.size())
    throw InvalidArgument("attendance mask has " + std::to_string(attendance.size()) +
                          " entries for a team of " + std::to_string(team.size()));
  if (attendance.n_present() < 2)
    throw InvalidArgument("a meeting needs at least two present members");
}

}  // namespace

AttendanceMask::AttendanceMask(std::vector<bool> present) : present_(std::move(present)) {}

AttendanceMask AttendanceMask::all_present(std::size_t n_members) {
  return AttendanceMask(std::vector<bool>(n_members, true));
}

std::size_t AttendanceMask::n_present() const {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), true));
}

std::size_t TeamConversation::total_turns() const {
  std::size_t n = 0;
  for (const auto& m : meetings) n += m.turns.size();
  return n;
}

void HistoryState::advance(std::size_t speaker) {
  last_turn_[speaker] = current_turn_;
  ++current_turn_;
}

void validate(const SpeakerParams& params) {
  if (!std::isfinite(params.pi) || params.pi <= 0.0)
    throw InvalidArgument("pi must be positive and finite, got " + std::to_string(params.pi));
  if (!std::isfinite(params.d) || params.d < 0.0)
    throw InvalidArgument("d must be nonnegative and finite, got " + std::to_string(params.d));
}

double memory_decay(std::size_t gap) {
  if (gap < kDecayTableSize) return decay_table()[gap];
  return std::exp(-kMemoryDecayRate * static_cast<double>(gap));
}

double speaking_likelihood(const SpeakerParams& params, const HistoryState& state,
                           std::size_t member) {
  const auto last = state.last_turn(member);
  if (!last) return params.pi;
  const std::size_t gap = state.current_turn() - *last;
  if (gap == 1) return 0.0;
  return params.pi + params.d * memory_decay(gap);
}

std::vector<double> next_speaker_distribution(std::span<const SpeakerParams> team,
                                              const HistoryState& state,
                                              const AttendanceMask& attendance) {
  check_shapes(team, attendance);
  std::vector<double> p(team.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < team.size(); ++i) {
    if (!attendance.present(i)) continue;
    p[i] = speaking_likelihood(team[i], state, i);
    total += p[i];
  }
  if (!(total > 0.0)) throw AllZeroLikelihood("every present member has zero likelihood");
  for (double& v : p) v /= total;
  return p;
}

Meeting sample_conversation(std::span<const SpeakerParams> team, std::size_t n_turns,
                            const AttendanceMask& attendance, std::uint64_t seed) {
  if (n_turns < 1) throw InvalidArgument("n_turns must be at least 1");
  check_shapes(team, attendance);
  Rng rng(seed);
  HistoryState state(team.size());
  Meeting meeting{{}, attendance};
  meeting.turns.reserve(n_turns);
  for (std::size_t t = 0; t < n_turns; ++t) {
    const auto p = next_speaker_distribution(team, state, attendance);
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = team.size();
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      pick = i;  // last eligible member absorbs rounding at the top end
      cum += p[i];
      if (u < cum) break;
    }
    meeting.turns.push_back(pick);
    state.advance(pick);
  }
  return meeting;
}

double meeting_nll(std::span<const SpeakerParams> team, const Meeting& meeting,
                   std::span<ParamGradient> grad) {
  const std::size_t n = team.size();
  check_shapes(team, meeting.attendance);
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != n) throw InvalidArgument("gradient buffer size mismatch");

  // 0 means "has not spoken in this meeting".
  std::vector<std::size_t> last(n, 0);
  std::vector<double> memory(n, 0.0);
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < n; ++i)
    if (meeting.attendance.present(i)) present.push_back(i);

  double loss = 0.0;
  std::size_t prev = n;
  for (std::size_t k = 0; k < meeting.turns.size(); ++k) {
    const std::size_t t = k + 1;
    const std::size_t speaker = meeting.turns[k];
    if (speaker >= n) throw InvalidArgument("speaker index out of range");

    double total = 0.0;
    for (std::size_t i : present) {
      if (i == prev) continue;
      memory[i] = last[i] == 0 ? 0.0 : memory_decay(t - last[i]);
      total += team[i].pi + team[i].d * memory[i];
    }
    double own = 0.0;
    if (speaker != prev && meeting.attendance.present(speaker))
      own = team[speaker].pi + team[speaker].d * memory[speaker];
    if (!(own > 0.0) || !(total > 0.0))
      throw ZeroProbabilityEvent("speaker " + std::to_string(speaker) + " at turn " +
                                 std::to_string(t) + " has probability zero");

    loss += std::log(total) - std::log(own);

    if (want_grad) {
      const double inv_total = 1.0 / total;
      for (std::size_t i : present) {
        if (i == prev) continue;
        grad[i].pi += inv_total;
        grad[i].d += memory[i] * inv_total;
      }
      const double inv_own = 1.0 / own;
      grad[speaker].pi -= inv_own;
      grad[speaker].d -= memory[speaker] * inv_own;
    }

    last[speaker] = t;
    prev = speaker;
  }
  return loss;
}

double sequence_nll(std::span<const SpeakerParams> team, const TeamConversation& conversation,
                    std::span<ParamGradient> grad) {
  if (conversation.n_members != team.size())
    throw InvalidArgument("conversation has " + std::to_string(conversation.n_members) +
                          " members but " + std::to_string(team.size()) + " params were given");
  double loss = 0.0;
  for (const auto& m : conversation.meetings) loss += meeting_nll(team, m, grad);
  return loss;
}

double peak_likelihood(const SpeakerParams& params) {
  // The reported peak uses a single decay step, e^{-0.5}, as in the published
  // visualizations, not the gap-2 factor e^{-1} of speaking_likelihood.
  return params.pi + params.d * std::exp(-kMemoryDecayRate);
}

}  // namespace mlspeak
