#pragma once

// Turns long-format logs of inferred behavioral states into an
// individuals x variables x days tensor. Each day is split into four local
// six-hour bins and every variable is one (feature kind, stream, state, bin)
// combination from the schema.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "lifetensor/dataset.hpp"
#include "lifetensor/error.hpp"

namespace lifetensor {

enum class Stream { activity, audio, conversation, dark, gps_location, wifi_location, bluetooth };
enum class FeatureKind { duration, frequency, transitions, unique_count };
enum class TimeBin { bedtime, morning, afternoon, evening };

inline constexpr std::array<Stream, 7> kAllStreams = {
    Stream::activity,     Stream::audio,         Stream::conversation, Stream::dark,
    Stream::gps_location, Stream::wifi_location, Stream::bluetooth};
inline constexpr std::array<TimeBin, 4> kAllBins = {TimeBin::bedtime, TimeBin::morning,
                                                    TimeBin::afternoon, TimeBin::evening};

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerBin = 6.0 * 3600.0;

inline std::string to_string(Stream s) {
  switch (s) {
    case Stream::activity: return "activity";
    case Stream::audio: return "audio";
    case Stream::conversation: return "conversation";
    case Stream::dark: return "dark";
    case Stream::gps_location: return "gps_location";
    case Stream::wifi_location: return "wifi_location";
    case Stream::bluetooth: return "bluetooth";
  }
  return "?";
}

inline std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::duration: return "duration";
    case FeatureKind::frequency: return "frequency";
    case FeatureKind::transitions: return "transitions";
    case FeatureKind::unique_count: return "unique_count";
  }
  return "?";
}

inline std::string to_string(TimeBin b) {
  switch (b) {
    case TimeBin::bedtime: return "bedtime";
    case TimeBin::morning: return "morning";
    case TimeBin::afternoon: return "afternoon";
    case TimeBin::evening: return "evening";
  }
  return "?";
}

inline std::optional<Stream> parse_stream(const std::string& s) {
  for (Stream v : kAllStreams)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::optional<FeatureKind> parse_feature_kind(const std::string& s) {
  for (FeatureKind v : {FeatureKind::duration, FeatureKind::frequency, FeatureKind::transitions,
                        FeatureKind::unique_count})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::optional<TimeBin> parse_time_bin(const std::string& s) {
  for (TimeBin v : kAllBins)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

/// Streams whose states are free-form identifiers (places, devices).
inline bool is_identifier_stream(Stream s) {
  return s == Stream::gps_location || s == Stream::wifi_location || s == Stream::bluetooth;
}

struct EventRecord {
  std::string user_id;
  Stream stream = Stream::activity;
  std::string state;
  double start = 0.0;  // unix seconds
  double end = 0.0;    // >= start; equal for point events
  std::size_t source_line = 0;

  auto key() const { return std::tie(user_id, stream, start, end, state); }
  friend bool operator<(const EventRecord& a, const EventRecord& b) { return a.key() < b.key(); }
};

struct VariableDef {
  std::string name;
  Stream stream = Stream::activity;
  std::string state;  // empty for transitions and unique_count
  FeatureKind kind = FeatureKind::duration;
  TimeBin bin = TimeBin::bedtime;
};

struct FeatureSchema {
  std::vector<VariableDef> variables;
  std::chrono::year_month_day study_start{std::chrono::year{2013}, std::chrono::month{3},
                                          std::chrono::day{27}};
  std::size_t n_days = 66;
  int utc_offset_minutes = 0;
  /// Allowed states of the categorical streams; identifier streams accept any
  /// non-empty state.
  std::map<Stream, std::vector<std::string>> vocabulary = default_vocabulary();

  static std::map<Stream, std::vector<std::string>> default_vocabulary() {
    return {{Stream::activity, {"stationary", "walk", "run", "unknown"}},
            {Stream::audio, {"silence", "voice", "noise", "unknown"}},
            {Stream::conversation, {"conversation"}},
            {Stream::dark, {"dark"}}};
  }

  /// Unix time of local midnight that starts study day `day`.
  double day_start(long day) const {
    const auto days = std::chrono::sys_days(study_start).time_since_epoch().count();
    return (static_cast<double>(days) + static_cast<double>(day)) * kSecondsPerDay -
           60.0 * utc_offset_minutes;
  }

  bool state_allowed(Stream s, const std::string& state) const {
    if (state.empty()) return false;
    if (is_identifier_stream(s)) return true;
    auto it = vocabulary.find(s);
    if (it == vocabulary.end()) return false;
    return std::find(it->second.begin(), it->second.end(), state) != it->second.end();
  }

  void validate() const {
    if (!study_start.ok()) throw UsageError("schema: invalid study_start_date");
    if (n_days == 0) throw UsageError("schema: n_days must be positive (zero days)");
    if (variables.empty()) throw UsageError("schema: no variables defined");
    std::set<std::string> names;
    for (const VariableDef& v : variables) {
      if (v.name.empty()) throw UsageError("schema: variable with empty name");
      if (!names.insert(v.name).second) throw UsageError("schema: duplicate variable '" + v.name + "'");
      const bool needs_state = v.kind == FeatureKind::duration || v.kind == FeatureKind::frequency;
      if (needs_state && !state_allowed(v.stream, v.state))
        throw UsageError("schema: variable '" + v.name + "' has invalid state '" + v.state +
                         "' for stream " + to_string(v.stream));
      if (!needs_state && !v.state.empty())
        throw UsageError("schema: variable '" + v.name + "' (" + to_string(v.kind) +
                         ") must not name a state");
    }
  }
};

/// Canonical variable name: kind_stream[_state]_bin.
inline std::string variable_name(FeatureKind kind, Stream stream, const std::string& state,
                                 TimeBin bin) {
  std::string n = to_string(kind) + "_" + to_string(stream);
  if (!state.empty()) n += "_" + state;
  return n + "_" + to_string(bin);
}

/// Schema shipped with the toolkit: per time bin, durations and frequencies of
/// the activity and audio states plus conversation and darkness, state
/// changes of activity and audio, and unique GPS places, WiFi places and
/// Bluetooth devices (84 variables).
inline FeatureSchema default_schema() {
  FeatureSchema schema;
  const std::vector<std::pair<Stream, std::string>> states = {
      {Stream::activity, "stationary"}, {Stream::activity, "walk"}, {Stream::activity, "run"},
      {Stream::audio, "silence"},       {Stream::audio, "voice"},   {Stream::audio, "noise"},
      {Stream::dark, "dark"},           {Stream::conversation, "conversation"}};
  for (FeatureKind kind : {FeatureKind::duration, FeatureKind::frequency})
    for (const auto& [stream, state] : states)
      for (TimeBin bin : kAllBins)
        schema.variables.push_back({variable_name(kind, stream, state, bin), stream, state, kind, bin});
  for (Stream stream : {Stream::activity, Stream::audio})
    for (TimeBin bin : kAllBins)
      schema.variables.push_back(
          {variable_name(FeatureKind::transitions, stream, "", bin), stream, "", FeatureKind::transitions, bin});
  for (Stream stream : {Stream::gps_location, Stream::wifi_location, Stream::bluetooth})
    for (TimeBin bin : kAllBins)
      schema.variables.push_back({variable_name(FeatureKind::unique_count, stream, "", bin), stream, "",
                                  FeatureKind::unique_count, bin});
  return schema;
}

namespace detail {

inline double bin_begin(double day_start, TimeBin b) {
  return day_start + kSecondsPerBin * static_cast<double>(static_cast<int>(b));
}

// Half-open bin [b0, b1). A point event belongs to the bin containing it; an
// interval intersects when it overlaps the bin with positive length.
inline bool intersects(double start, double end, double b0, double b1) {
  if (end == start) return start >= b0 && start < b1;
  return start < b1 && end > b0;
}

}  // namespace detail

/// Minutes of [start, end] falling in each bin of the local day starting at
/// `day_start` (unix seconds). Parts outside the day are ignored.
inline std::array<double, 4> assign_bins(double start, double end, double day_start) {
  if (end < start) throw UsageError("assign_bins: interval ends before it starts");
  std::array<double, 4> minutes{};
  for (TimeBin b : kAllBins) {
    const double b0 = detail::bin_begin(day_start, b);
    const double b1 = b0 + kSecondsPerBin;
    const double overlap = std::min(end, b1) - std::max(start, b0);
    if (overlap > 0.0) minutes[static_cast<std::size_t>(b)] = overlap / 60.0;
  }
  return minutes;
}

/// Feature values (schema order) for one user-day. `records` may include
/// events reaching outside the day; only their parts inside a bin count, and
/// a state change is attributed to the bin holding the later event's start.
inline std::vector<double> bin_features(const std::vector<EventRecord>& records,
                                        const FeatureSchema& schema, double day_start) {
  for (const EventRecord& r : records) {
    if (r.end < r.start)
      throw DataError("record for user '" + r.user_id + "' (line " + std::to_string(r.source_line) +
                      ") ends before it starts");
    if (!schema.state_allowed(r.stream, r.state))
      throw DataError("record for user '" + r.user_id + "' (line " + std::to_string(r.source_line) +
                      "): state '" + r.state + "' is not valid for stream " + to_string(r.stream));
  }

  // Per-stream records in time order, for state-change counting.
  std::map<Stream, std::vector<const EventRecord*>> by_stream;
  for (const EventRecord& r : records) by_stream[r.stream].push_back(&r);
  for (auto& [stream, list] : by_stream)
    std::sort(list.begin(), list.end(),
              [](const EventRecord* a, const EventRecord* b) { return *a < *b; });

  std::vector<double> values;
  values.reserve(schema.variables.size());
  for (const VariableDef& var : schema.variables) {
    const double b0 = detail::bin_begin(day_start, var.bin);
    const double b1 = b0 + kSecondsPerBin;
    double value = 0.0;
    auto it = by_stream.find(var.stream);
    if (it != by_stream.end()) {
      const auto& list = it->second;
      switch (var.kind) {
        case FeatureKind::duration:
          for (const EventRecord* r : list)
            if (r->state == var.state)
              value += std::max(0.0, std::min(r->end, b1) - std::max(r->start, b0)) / 60.0;
          break;
        case FeatureKind::frequency:
          for (const EventRecord* r : list)
            if (r->state == var.state && detail::intersects(r->start, r->end, b0, b1)) value += 1.0;
          break;
        case FeatureKind::transitions:
          for (std::size_t n = 1; n < list.size(); ++n) {
            const double boundary = list[n]->start;
            if (list[n]->state != list[n - 1]->state && boundary >= b0 && boundary < b1) value += 1.0;
          }
          break;
        case FeatureKind::unique_count: {
          std::set<std::string> seen;
          for (const EventRecord* r : list)
            if (detail::intersects(r->start, r->end, b0, b1)) seen.insert(r->state);
          value = static_cast<double>(seen.size());
          break;
        }
      }
    }
    values.push_back(value);
  }
  return values;
}

struct BuildReport {
  std::size_t records_used = 0;
  std::size_t records_dropped = 0;  // entirely outside the study window
  std::size_t missing_slices = 0;   // (user, day) pairs with no records
};

struct BuildResult {
  TensorDataset dataset;
  BuildReport report;
};

/// Assembles the raw (unnormalized) tensor. Users are ordered by ID. A
/// (user, day) with no record in any stream is marked missing across all
/// variables; idle-but-present days are observed zeros.
inline BuildResult build_tensor(const std::vector<EventRecord>& records, const FeatureSchema& schema) {
  schema.validate();
  const double origin = schema.day_start(0);
  const auto n_days = static_cast<long>(schema.n_days);

  BuildResult out;
  // Canonical order makes the result independent of input order.
  std::vector<EventRecord> sorted;
  sorted.reserve(records.size());
  for (const EventRecord& r : records) {
    if (r.end < r.start)
      throw DataError("record for user '" + r.user_id + "' (line " + std::to_string(r.source_line) +
                      ") ends before it starts");
    const double first = std::floor((r.start - origin) / kSecondsPerDay);
    const double last = r.end > r.start ? std::ceil((r.end - origin) / kSecondsPerDay) - 1.0 : first;
    if (last < 0.0 || first >= static_cast<double>(n_days)) {
      ++out.report.records_dropped;
      continue;
    }
    sorted.push_back(r);
  }
  std::sort(sorted.begin(), sorted.end());
  out.report.records_used = sorted.size();

  std::vector<std::string> users;
  for (const EventRecord& r : sorted)
    if (users.empty() || users.back() != r.user_id) users.push_back(r.user_id);
  if (users.empty()) throw DataError("zero users: no records fall inside the study window");

  const std::size_t n_vars = schema.variables.size();
  Tensor3 x({users.size(), n_vars, schema.n_days});
  std::size_t begin = 0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    std::size_t end = begin;
    while (end < sorted.size() && sorted[end].user_id == users[u]) ++end;
    for (long day = 0; day < n_days; ++day) {
      const double d0 = schema.day_start(day);
      const double d1 = d0 + kSecondsPerDay;
      std::vector<EventRecord> day_records;
      bool present = false;
      // Latest earlier record per stream, so a state change at the start of
      // the day is still seen.
      std::map<Stream, const EventRecord*> predecessor;
      for (std::size_t n = begin; n < end; ++n) {
        const EventRecord& r = sorted[n];
        if (detail::intersects(r.start, r.end, d0, d1)) {
          day_records.push_back(r);
          present = true;
        } else if (r.start < d0) {
          auto& p = predecessor[r.stream];
          if (p == nullptr || *p < r) p = &r;
        }
      }
      if (!present) {
        ++out.report.missing_slices;
        for (std::size_t j = 0; j < n_vars; ++j) {
          x(u, j, static_cast<std::size_t>(day)) = std::numeric_limits<double>::quiet_NaN();
          x.set_observed(u, j, static_cast<std::size_t>(day), false);
        }
        continue;
      }
      for (const auto& [stream, rec] : predecessor) day_records.push_back(*rec);
      const std::vector<double> values = bin_features(day_records, schema, d0);
      for (std::size_t j = 0; j < n_vars; ++j) x(u, j, static_cast<std::size_t>(day)) = values[j];
    }
    begin = end;
  }

  out.dataset.tensor = std::move(x);
  out.dataset.labels.individuals = users;
  for (const VariableDef& v : schema.variables) out.dataset.labels.variables.push_back(v.name);
  for (long d = 0; d < n_days; ++d) out.dataset.labels.days.push_back(d);
  return out;
}

/// Per-variable min-max scaling to [0, 1] over observed cells. A variable
/// with a single observed value maps to 0. Masked cells are left untouched.
inline TensorDataset minmax_normalize(const TensorDataset& ds) {
  TensorDataset out = ds;
  Tensor3& x = out.tensor;
  const Dims& d = x.dims();
  for (std::size_t j = 0; j < d[1]; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d[2]; ++k)
      for (std::size_t i = 0; i < d[0]; ++i)
        if (x.observed(i, j, k)) {
          lo = std::min(lo, x(i, j, k));
          hi = std::max(hi, x(i, j, k));
        }
    if (!(lo <= hi)) continue;  // nothing observed
    const double range = hi - lo;
    for (std::size_t k = 0; k < d[2]; ++k)
      for (std::size_t i = 0; i < d[0]; ++i)
        if (x.observed(i, j, k)) x(i, j, k) = range > 0.0 ? (x(i, j, k) - lo) / range : 0.0;
  }
  return out;
}

struct ImputationReport {
  std::vector<std::size_t> imputed_per_variable;
  std::size_t total() const {
    std::size_t n = 0;
    for (std::size_t c : imputed_per_variable) n += c;
    return n;
  }
};

struct ImputeResult {
  TensorDataset dataset;
  ImputationReport report;
};

/// Fills each masked cell with the mean of its variable's observed cells and
/// marks everything observed.
inline ImputeResult impute_mean(const TensorDataset& ds) {
  ImputeResult out{ds, {}};
  Tensor3& x = out.dataset.tensor;
  const Dims& d = x.dims();
  out.report.imputed_per_variable.assign(d[1], 0);
  for (std::size_t j = 0; j < d[1]; ++j) {
    double sum = 0.0;
    std::size_t observed = 0;
    for (std::size_t k = 0; k < d[2]; ++k)
      for (std::size_t i = 0; i < d[0]; ++i)
        if (x.observed(i, j, k)) {
          sum += x(i, j, k);
          ++observed;
        }
    if (observed == 0) {
      const std::string name = j < ds.labels.variables.size() ? ds.labels.variables[j] : std::to_string(j);
      throw DataError("impute_mean: variable '" + name + "' has no observed cells");
    }
    const double mean = sum / static_cast<double>(observed);
    for (std::size_t k = 0; k < d[2]; ++k)
      for (std::size_t i = 0; i < d[0]; ++i)
        if (!x.observed(i, j, k)) {
          x(i, j, k) = mean;
          x.set_observed(i, j, k, true);
          ++out.report.imputed_per_variable[j];
        }
  }
  return out;
}

}  // namespace lifetensor
