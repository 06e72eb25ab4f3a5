#pragma once

// On-disk dataset bundle: a directory holding
//
//   members.csv     team_id, member_id, <one column per trait>
//   turns.csv       team_id, meeting_id, turn_index, speaker_member_id
//   attendance.csv  team_id, meeting_id, member_id, present   (optional)
//
// Comma-delimited UTF-8 with a header row. Without attendance.csv every member
// attends every meeting. A column-mapping JSON file can rename external headers
// onto the canonical ones: {"turns": {"speaker_member_id": "Speaker"}, ...}.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlspeak/dataset.hpp"

namespace mlspeak {

/// Canonical column name -> header used in the file, per table.
using ColumnMapping = std::map<std::string, std::map<std::string, std::string>>;

ColumnMapping load_column_mapping(const std::filesystem::path& path);

/// Throws SchemaError, ReferentialError, GapError or AbsentSpeakerError on
/// invalid input. Consecutive rows by the same speaker are one turn and are merged.
Dataset load_dataset(const std::filesystem::path& dir, const ColumnMapping& mapping = {});

/// Writes the three tables; traits are written with full precision.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Minimal CSV reader: header row, quoted fields, no embedded newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  ///< throws SchemaError
  std::optional<std::size_t> find_column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace mlspeak
