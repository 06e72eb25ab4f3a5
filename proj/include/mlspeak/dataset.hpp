#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlspeak/trait_net.hpp"
#include "mlspeak/turn_model.hpp"

namespace mlspeak {

/// One team: its members' traits and every recorded meeting.
struct TeamData {
  std::string team_id;
  std::vector<std::string> member_ids;
  std::vector<TraitVector> traits;  ///< one row per member, dataset trait schema
  std::vector<std::string> meeting_ids;
  TeamConversation conversation;
  /// Generating parameters, known only for synthetic data.
  std::optional<std::vector<SpeakerParams>> truth;

  std::size_t size() const { return member_ids.size(); }
  friend bool operator==(const TeamData&, const TeamData&) = default;
};

struct Dataset {
  std::vector<std::string> trait_names;
  std::vector<TeamData> teams;

  std::size_t n_members() const;
  std::size_t trait_index(const std::string& name) const;
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Every member row of every team, in team order.
std::vector<TraitVector> member_rows(std::span<const TeamData> teams);

std::vector<TrainingTeam> encode_teams(std::span<const TeamData> teams, const TraitEncoder& encoder);

/// Copy of `team` keeping only meetings where every member was present.
TeamData full_attendance_only(const TeamData& team);

/// NLL of the teams under their generating parameters. Requires truth.
double true_nll(std::span<const TeamData> teams);

}  // namespace mlspeak
