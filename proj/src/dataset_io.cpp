#include "mlspeak/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "mlspeak/errors.hpp"

namespace mlspeak {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_double(const std::string& text, const std::string& where) {
  const auto s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw SchemaError("not a finite number '" + text + "' in " + where);
  return v;
}

long long parse_int(const std::string& text, const std::string& where) {
  const auto s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError("not an integer '" + text + "' in " + where);
  return v;
}

bool parse_bool(const std::string& text, const std::string& where) {
  auto s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw SchemaError("not a boolean '" + text + "' in " + where);
}

std::string mapped(const ColumnMapping& mapping, const std::string& table, const std::string& canonical) {
  const auto t = mapping.find(table);
  if (t == mapping.end()) return canonical;
  const auto c = t->second.find(canonical);
  return c == t->second.end() ? canonical : c->second;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string full_precision(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct MeetingBuild {
  std::string id;
  std::vector<std::pair<long long, std::size_t>> turns;  // (turn_index, member)
  std::optional<std::vector<bool>> present;
};

}  // namespace

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto c = find_column(name);
  if (!c) throw SchemaError("missing column '" + name + "'");
  return *c;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      // Strip a UTF-8 byte-order mark.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      for (auto& h : split_csv_line(line)) table.header.push_back(trim(h));
      first = false;
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size())
      throw SchemaError(path.filename().string() + ": row has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(table.header.size()));
    for (auto& f : fields) f = trim(f);
    table.rows.push_back(std::move(fields));
  }
  if (first) throw SchemaError(path.filename().string() + " is empty");
  return table;
}

ColumnMapping load_column_mapping(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  ColumnMapping m;
  for (const auto& [table, cols] : j.items())
    for (const auto& [canonical, external] : cols.items()) m[table][canonical] = external.get<std::string>();
  return m;
}

Dataset load_dataset(const fs::path& dir, const ColumnMapping& mapping) {
  const auto members = read_csv(dir / "members.csv");
  const auto turns = read_csv(dir / "turns.csv");

  Dataset data;
  const std::size_t c_team = members.column(mapped(mapping, "members", "team_id"));
  const std::size_t c_member = members.column(mapped(mapping, "members", "member_id"));
  std::vector<std::size_t> trait_cols;
  for (std::size_t c = 0; c < members.header.size(); ++c) {
    if (c == c_team || c == c_member) continue;
    trait_cols.push_back(c);
    data.trait_names.push_back(members.header[c]);
  }
  if (trait_cols.empty()) throw SchemaError("members.csv has no trait columns");

  std::unordered_map<std::string, std::size_t> team_index;
  std::vector<std::unordered_map<std::string, std::size_t>> member_index;
  for (std::size_t r = 0; r < members.rows.size(); ++r) {
    const auto& row = members.rows[r];
    const auto where = "members.csv row " + std::to_string(r + 2);
    auto [it, inserted] = team_index.try_emplace(row[c_team], data.teams.size());
    if (inserted) {
      data.teams.emplace_back();
      data.teams.back().team_id = row[c_team];
      member_index.emplace_back();
    }
    auto& team = data.teams[it->second];
    if (!member_index[it->second].try_emplace(row[c_member], team.member_ids.size()).second)
      throw SchemaError("duplicate member '" + row[c_member] + "' in team '" + team.team_id + "'");
    team.member_ids.push_back(row[c_member]);
    TraitVector traits;
    for (std::size_t c : trait_cols) traits.push_back(parse_double(row[c], where));
    team.traits.push_back(std::move(traits));
  }

  std::vector<std::vector<MeetingBuild>> meetings(data.teams.size());
  std::vector<std::unordered_map<std::string, std::size_t>> meeting_index(data.teams.size());
  auto lookup_team = [&](const std::string& id, const std::string& where) {
    const auto it = team_index.find(id);
    if (it == team_index.end()) throw ReferentialError("unknown team '" + id + "' in " + where);
    return it->second;
  };
  auto lookup_member = [&](std::size_t t, const std::string& id, const std::string& where) {
    const auto it = member_index[t].find(id);
    if (it == member_index[t].end())
      throw ReferentialError("unknown member '" + id + "' of team '" + data.teams[t].team_id + "' in " + where);
    return it->second;
  };

  const std::size_t t_team = turns.column(mapped(mapping, "turns", "team_id"));
  const std::size_t t_meeting = turns.column(mapped(mapping, "turns", "meeting_id"));
  const std::size_t t_index = turns.column(mapped(mapping, "turns", "turn_index"));
  const std::size_t t_speaker = turns.column(mapped(mapping, "turns", "speaker_member_id"));
  for (std::size_t r = 0; r < turns.rows.size(); ++r) {
    const auto& row = turns.rows[r];
    const auto where = "turns.csv row " + std::to_string(r + 2);
    const std::size_t t = lookup_team(row[t_team], where);
    const std::size_t member = lookup_member(t, row[t_speaker], where);
    auto [it, inserted] = meeting_index[t].try_emplace(row[t_meeting], meetings[t].size());
    if (inserted) meetings[t].push_back({row[t_meeting], {}, std::nullopt});
    meetings[t][it->second].turns.emplace_back(parse_int(row[t_index], where), member);
  }

  const auto attendance_path = dir / "attendance.csv";
  if (fs::exists(attendance_path)) {
    const auto att = read_csv(attendance_path);
    const std::size_t a_team = att.column(mapped(mapping, "attendance", "team_id"));
    const std::size_t a_meeting = att.column(mapped(mapping, "attendance", "meeting_id"));
    const std::size_t a_member = att.column(mapped(mapping, "attendance", "member_id"));
    const std::size_t a_present = att.column(mapped(mapping, "attendance", "present"));
    for (std::size_t r = 0; r < att.rows.size(); ++r) {
      const auto& row = att.rows[r];
      const auto where = "attendance.csv row " + std::to_string(r + 2);
      const std::size_t t = lookup_team(row[a_team], where);
      const std::size_t member = lookup_member(t, row[a_member], where);
      const auto it = meeting_index[t].find(row[a_meeting]);
      if (it == meeting_index[t].end())
        throw ReferentialError("unknown meeting '" + row[a_meeting] + "' in " + where);
      auto& m = meetings[t][it->second];
      if (!m.present) m.present.emplace(data.teams[t].size(), true);
      (*m.present)[member] = parse_bool(row[a_present], where);
    }
  }

  for (std::size_t t = 0; t < data.teams.size(); ++t) {
    auto& team = data.teams[t];
    team.conversation.n_members = team.size();
    std::vector<bool> ever_present(team.size(), meetings[t].empty());
    for (auto& mb : meetings[t]) {
      std::sort(mb.turns.begin(), mb.turns.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < mb.turns.size(); ++k)
        if (mb.turns[k].first != static_cast<long long>(k + 1))
          throw GapError("turn_index of meeting '" + mb.id + "' in team '" + team.team_id +
                         "' is not contiguous from 1");

      std::vector<bool> present = mb.present.value_or(std::vector<bool>(team.size(), true));
      Meeting meeting;
      for (const auto& [idx, member] : mb.turns) {
        if (!present[member])
          throw AbsentSpeakerError("member '" + team.member_ids[member] + "' speaks in meeting '" + mb.id +
                                   "' of team '" + team.team_id + "' but is marked absent");
        if (!meeting.turns.empty() && meeting.turns.back() == member) continue;
        meeting.turns.push_back(member);
      }
      if (std::count(present.begin(), present.end(), true) < 2)
        throw SchemaError("meeting '" + mb.id + "' of team '" + team.team_id + "' has fewer than two members present");
      for (std::size_t i = 0; i < present.size(); ++i)
        if (present[i]) ever_present[i] = true;
      meeting.attendance = AttendanceMask(std::move(present));
      team.conversation.meetings.push_back(std::move(meeting));
      team.meeting_ids.push_back(mb.id);
    }
    for (std::size_t i = 0; i < team.size(); ++i)
      if (!ever_present[i])
        throw SchemaError("member '" + team.member_ids[i] + "' of team '" + team.team_id +
                          "' is absent from every meeting");
  }
  return data;
}

void write_dataset(const Dataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream members(dir / "members.csv");
  std::ofstream turns(dir / "turns.csv");
  std::ofstream attendance(dir / "attendance.csv");
  if (!members || !turns || !attendance) throw IoError("cannot write dataset to " + dir.string());

  members << "team_id,member_id";
  for (const auto& n : data.trait_names) members << ',' << csv_field(n);
  members << '\n';
  turns << "team_id,meeting_id,turn_index,speaker_member_id\n";
  attendance << "team_id,meeting_id,member_id,present\n";

  for (const auto& team : data.teams) {
    for (std::size_t i = 0; i < team.size(); ++i) {
      members << csv_field(team.team_id) << ',' << csv_field(team.member_ids[i]);
      for (double v : team.traits[i]) members << ',' << full_precision(v);
      members << '\n';
    }
    for (std::size_t m = 0; m < team.conversation.meetings.size(); ++m) {
      const auto& meeting = team.conversation.meetings[m];
      const std::string mid = m < team.meeting_ids.size() ? team.meeting_ids[m] : std::to_string(m + 1);
      for (std::size_t k = 0; k < meeting.turns.size(); ++k)
        turns << csv_field(team.team_id) << ',' << csv_field(mid) << ',' << k + 1 << ','
              << csv_field(team.member_ids[meeting.turns[k]]) << '\n';
      for (std::size_t i = 0; i < team.size(); ++i)
        attendance << csv_field(team.team_id) << ',' << csv_field(mid) << ',' << csv_field(team.member_ids[i]) << ','
                   << (meeting.attendance.present(i) ? 1 : 0) << '\n';
    }
  }
  if (!members || !turns || !attendance) throw IoError("failed writing dataset to " + dir.string());
}

}  // namespace mlspeak
