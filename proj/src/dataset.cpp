#include "mlspeak/dataset.hpp"

#include <algorithm>

#include "mlspeak/errors.hpp"

namespace mlspeak {

std::size_t Dataset::n_members() const {
  std::size_t n = 0;
  for (const auto& t : teams) n += t.size();
  return n;
}

std::size_t Dataset::trait_index(const std::string& name) const {
  const auto it = std::find(trait_names.begin(), trait_names.end(), name);
  if (it == trait_names.end()) throw InvalidArgument("unknown trait '" + name + "'");
  return static_cast<std::size_t>(it - trait_names.begin());
}

std::vector<TraitVector> member_rows(std::span<const TeamData> teams) {
  std::vector<TraitVector> rows;
  for (const auto& t : teams) rows.insert(rows.end(), t.traits.begin(), t.traits.end());
  return rows;
}

std::vector<TrainingTeam> encode_teams(std::span<const TeamData> teams, const TraitEncoder& encoder) {
  std::vector<TrainingTeam> out;
  out.reserve(teams.size());
  for (const auto& t : teams) {
    TrainingTeam tt;
    tt.inputs.reserve(t.size());
    for (const auto& row : t.traits) tt.inputs.push_back(encoder.encode(row));
    tt.conversation = t.conversation;
    out.push_back(std::move(tt));
  }
  return out;
}

TeamData full_attendance_only(const TeamData& team) {
  TeamData out = team;
  out.conversation.meetings.clear();
  out.meeting_ids.clear();
  for (std::size_t k = 0; k < team.conversation.meetings.size(); ++k) {
    const auto& m = team.conversation.meetings[k];
    if (!m.attendance.full()) continue;
    out.conversation.meetings.push_back(m);
    if (k < team.meeting_ids.size()) out.meeting_ids.push_back(team.meeting_ids[k]);
  }
  return out;
}

double true_nll(std::span<const TeamData> teams) {
  double total = 0.0;
  for (const auto& t : teams) {
    if (!t.truth) throw InvalidArgument("team " + t.team_id + " has no generating parameters");
    total += sequence_nll(*t.truth, t.conversation);
  }
  return total;
}

}  // namespace mlspeak
