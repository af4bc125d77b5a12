#pragma once

// Input formats for featurization:
//
//   events CSV     user_id,stream,state,start_unix,end_unix   (header required)
//   metadata CSV   user_id,metric,value                       (header required)
//   schema text    line-oriented, '#' comments:
//                    study_start_date 2013-03-27
//                    n_days 66
//                    timezone UTC-05:00
//                    states activity stationary walk run unknown   (optional)
//                    variable <name> <stream> <state|-> <kind> <bin>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lifetensor/analysis.hpp"
#include "lifetensor/featurize.hpp"
#include "lifetensor/text_io.hpp"

namespace lifetensor::io {

inline std::vector<EventRecord> parse_events(std::string_view text, const std::string& source = "<events>") {
  LineReader reader(text, source);
  std::string line;
  std::vector<EventRecord> records;
  bool header = false;
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (!header) {
      if (f != std::vector<std::string>{"user_id", "stream", "state", "start_unix", "end_unix"})
        throw DataError(reader.where() + "expected header 'user_id,stream,state,start_unix,end_unix'");
      header = true;
      continue;
    }
    if (f.size() != 5) throw DataError(reader.where() + "expected 5 fields");
    EventRecord r;
    r.source_line = reader.line_no();
    r.user_id = f[0];
    if (r.user_id.empty()) throw DataError(reader.where() + "empty user_id");
    auto stream = parse_stream(f[1]);
    if (!stream) throw DataError(reader.where() + "unknown stream '" + f[1] + "'");
    r.stream = *stream;
    r.state = f[2];
    auto start = parse_double(f[3]);
    auto end = parse_double(f[4]);
    if (!start || !end || !std::isfinite(*start) || !std::isfinite(*end))
      throw DataError(reader.where() + "invalid timestamp");
    if (*end < *start) throw DataError(reader.where() + "end_unix precedes start_unix");
    r.start = *start;
    r.end = *end;
    records.push_back(std::move(r));
  }
  // An empty file yields no records; a non-empty one must start with the header.
  return records;
}

inline std::vector<EventRecord> read_events(const std::filesystem::path& path) {
  return parse_events(read_file(path), path.string());
}

/// Parses "UTC", "UTC+02:00", "-05:00" or "+0530" into minutes east of UTC.
inline std::optional<int> parse_utc_offset(std::string s) {
  if (s.rfind("UTC", 0) == 0) s = s.substr(3);
  if (s.empty() || s == "Z") return 0;
  if (s[0] != '+' && s[0] != '-') return std::nullopt;
  const int sign = s[0] == '-' ? -1 : 1;
  std::string digits;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] != ':') digits += s[i];
  if (digits.size() != 2 && digits.size() != 4) return std::nullopt;
  auto h = parse_int<int>(digits.substr(0, 2));
  auto m = digits.size() == 4 ? parse_int<int>(digits.substr(2)) : std::optional<int>(0);
  if (!h || !m || *h > 14 || *m > 59) return std::nullopt;
  return sign * (*h * 60 + *m);
}

inline std::string format_utc_offset(int minutes) {
  char buf[16];
  const int a = minutes < 0 ? -minutes : minutes;
  std::snprintf(buf, sizeof buf, "UTC%c%02d:%02d", minutes < 0 ? '-' : '+', a / 60, a % 60);
  return buf;
}

inline std::optional<std::chrono::year_month_day> parse_iso_date(const std::string& s) {
  const auto f = split(s, '-');
  if (f.size() != 3 || f[0].size() != 4 || f[1].size() != 2 || f[2].size() != 2) return std::nullopt;
  auto y = parse_int<int>(f[0]);
  auto m = parse_int<unsigned>(f[1]);
  auto d = parse_int<unsigned>(f[2]);
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

inline std::string format_iso_date(const std::chrono::year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

inline FeatureSchema parse_schema(std::string_view text, const std::string& source = "<schema>") {
  LineReader reader(text, source);
  FeatureSchema schema;
  schema.variables.clear();
  std::string line;
  bool have_date = false;
  bool have_days = false;
  while (reader.next(line)) {
    const auto hash = line.find('#');
    const auto t = tokens(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const std::string& key = t[0];
    if (key == "study_start_date" && t.size() == 2) {
      auto d = parse_iso_date(t[1]);
      if (!d) throw DataError(reader.where() + "invalid date '" + t[1] + "' (expected YYYY-MM-DD)");
      schema.study_start = *d;
      have_date = true;
    } else if (key == "n_days" && t.size() == 2) {
      auto n = parse_int<std::size_t>(t[1]);
      if (!n) throw DataError(reader.where() + "invalid n_days");
      schema.n_days = *n;
      have_days = true;
    } else if (key == "timezone" && t.size() == 2) {
      auto off = parse_utc_offset(t[1]);
      if (!off) throw DataError(reader.where() + "invalid timezone '" + t[1] + "' (expected UTC+HH:MM)");
      schema.utc_offset_minutes = *off;
    } else if (key == "states" && t.size() >= 3) {
      auto stream = parse_stream(t[1]);
      if (!stream || is_identifier_stream(*stream))
        throw DataError(reader.where() + "states can only be listed for categorical streams");
      schema.vocabulary[*stream] = std::vector<std::string>(t.begin() + 2, t.end());
    } else if (key == "variable" && t.size() == 6) {
      VariableDef v;
      v.name = t[1];
      auto stream = parse_stream(t[2]);
      auto kind = parse_feature_kind(t[4]);
      auto bin = parse_time_bin(t[5]);
      if (!stream) throw DataError(reader.where() + "unknown stream '" + t[2] + "'");
      if (!kind) throw DataError(reader.where() + "unknown feature kind '" + t[4] + "'");
      if (!bin) throw DataError(reader.where() + "unknown time bin '" + t[5] + "'");
      v.stream = *stream;
      v.state = t[3] == "-" ? "" : t[3];
      v.kind = *kind;
      v.bin = *bin;
      schema.variables.push_back(std::move(v));
    } else {
      throw DataError(reader.where() + "unrecognized schema line");
    }
  }
  if (!have_date) throw DataError(source + ": missing study_start_date");
  if (!have_days) throw DataError(source + ": missing n_days");
  try {
    schema.validate();
  } catch (const UsageError& e) {
    throw DataError(source + ": " + e.what());
  }
  return schema;
}

inline FeatureSchema read_schema(const std::filesystem::path& path) {
  return parse_schema(read_file(path), path.string());
}

inline std::string format_schema(const FeatureSchema& schema) {
  std::string out = "# lifetensor feature schema; variable order defines the tensor's variable axis\n";
  out += "study_start_date " + format_iso_date(schema.study_start) + "\n";
  out += "n_days " + std::to_string(schema.n_days) + "\n";
  out += "timezone " + format_utc_offset(schema.utc_offset_minutes) + "\n";
  for (const auto& [stream, states] : schema.vocabulary) {
    out += "states " + to_string(stream);
    for (const auto& s : states) out += " " + s;
    out += "\n";
  }
  out += "# variable <name> <stream> <state|-> <kind> <bin>\n";
  for (const VariableDef& v : schema.variables)
    out += "variable " + v.name + " " + to_string(v.stream) + " " + (v.state.empty() ? "-" : v.state) +
           " " + to_string(v.kind) + " " + to_string(v.bin) + "\n";
  return out;
}

inline MetadataTable parse_metadata(std::string_view text, const std::string& source = "<metadata>") {
  LineReader reader(text, source);
  MetadataTable table;
  std::string line;
  bool header = false;
  while (reader.next(line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (!header) {
      if (f != std::vector<std::string>{"user_id", "metric", "value"})
        throw DataError(reader.where() + "expected header 'user_id,metric,value'");
      header = true;
      continue;
    }
    if (f.size() != 3) throw DataError(reader.where() + "expected 3 fields");
    auto v = parse_double(f[2]);
    if (!v || !std::isfinite(*v)) throw DataError(reader.where() + "invalid value '" + f[2] + "'");
    try {
      table.add(f[0], f[1], *v);
    } catch (const DataError& e) {
      throw DataError(reader.where() + e.what());
    }
  }
  if (!header) throw DataError(source + ": missing header");
  return table;
}

inline MetadataTable read_metadata(const std::filesystem::path& path) {
  return parse_metadata(read_file(path), path.string());
}

}  // namespace lifetensor::io
