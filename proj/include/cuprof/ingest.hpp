#pragma once

// Extractor log parsing and per-minute activity aggregation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cuprof/error.hpp"

namespace cuprof {

/// FILETIME value of 1970-01-01T00:00:00Z.
inline constexpr std::uint64_t kUnixEpochFiletime = 116444736000000000ULL;
inline constexpr std::uint64_t kFiletimeTicksPerSecond = 10'000'000ULL;
inline constexpr std::int64_t kMinutesPerDay = 1440;

enum class EventKind { ProcessEvent, NetworkEvent, MouseClick, KeystrokeBurst };
enum class Direction { Inbound, Outbound };

const char* to_string(EventKind kind);

struct NetworkInfo {
  std::string dst_ip;
  std::optional<std::string> dst_domain;
  Direction direction = Direction::Outbound;

  bool operator==(const NetworkInfo&) const = default;
};

struct RawEventRecord {
  EventKind kind = EventKind::ProcessEvent;
  std::uint32_t pid = 0;
  std::string exe_path;
  std::uint64_t timestamp_filetime = kUnixEpochFiletime;
  std::optional<NetworkInfo> net;  // present iff kind == NetworkEvent
  std::uint32_t count = 1;
  // Input lines may carry an explicit trailing count field; remembered so
  // that serialization reproduces the source line.
  bool explicit_count = false;

  bool operator==(const RawEventRecord&) const = default;
};

/// Parses one pipe-delimited extractor record.
///
/// Accepted layouts (every field terminated by '|'):
///   process / input : `PID|path|FILETIME|` or, for input kinds, `PID|path|FILETIME|COUNT|`
///   network         : `PID|path|FILETIME|dst_ip|direction|`
/// Numbers must be canonical decimal (no sign, no leading zeros) so that
/// serialize_event_line() reproduces the line byte for byte.
RawEventRecord parse_event_line(std::string_view line, EventKind kind_hint);

std::string serialize_event_line(const RawEventRecord& record);

/// Seconds since the Unix epoch. long double keeps 100 ns resolution for
/// present-day timestamps. Throws PreEpochTimestamp below kUnixEpochFiletime.
long double filetime_to_epoch_seconds(std::uint64_t filetime);

/// Exact integer minute index since the Unix epoch (floor).
std::int64_t filetime_to_epoch_minute(std::uint64_t filetime);

std::uint64_t epoch_seconds_to_filetime(std::int64_t seconds);

struct ParseIssue {
  std::size_t line_no = 0;  // 1-based
  ErrorCode code = ErrorCode::FormatError;
  std::string message;
};

struct ParseReport {
  std::vector<RawEventRecord> records;
  std::vector<ParseIssue> issues;
  std::size_t lines_seen = 0;  // non-blank lines
};

/// Parses a whole log stream. Bad lines are collected into the report; the
/// batch throws BatchRejected only when the bad fraction exceeds
/// `max_bad_fraction`.
ParseReport parse_event_log(std::istream& in, EventKind kind_hint, double max_bad_fraction = 0.01);

using DnsMap = std::unordered_map<std::string, std::string>;

/// Reads `ip,domain` lines. A leading `ip,domain` header line is skipped.
DnsMap read_dns_map(std::istream& in);

/// Mapped domain if present, otherwise the dotted quad itself.
std::string resolve_domain(std::string_view ip, const DnsMap& dns_map);

bool is_valid_ipv4(std::string_view ip);

/// Fills `net->dst_domain` for every network record that lacks one.
void resolve_domains(std::span<RawEventRecord> records, const DnsMap& dns_map);

std::string process_token(std::string_view exe_path);
std::string domain_token(std::string_view domain);

struct ActivityMinute {
  std::int64_t minute_epoch = 0;
  std::vector<std::string> processes;
  std::vector<std::string> domains;
  std::uint32_t clicks = 0;
  std::uint32_t keystrokes = 0;
  bool background = false;

  bool operator==(const ActivityMinute&) const = default;
};

/// Per-user activity matrix: one row per active minute, strictly ascending.
struct UserDataset {
  std::string user_id;
  std::vector<ActivityMinute> minutes;

  bool empty() const { return minutes.empty(); }
  std::size_t size() const { return minutes.size(); }

  /// Calendar day (minutes / 1440) of the first row.
  std::int64_t first_day() const;
  /// 1-based study day of a minute, counted from first_day().
  int study_day(std::int64_t minute_epoch) const;
  /// Number of calendar days from the first to the last row inclusive.
  int span_days() const;

  bool operator==(const UserDataset&) const = default;
};

/// Checks the ActivityMinute and UserDataset invariants; throws FormatError.
void validate(const UserDataset& dataset);

/// Aggregates events into one row per calendar minute that has events.
/// Network records contribute their resolved domain (or the raw IP).
UserDataset build_activity_matrix(std::span<const RawEventRecord> events, std::string user_id);

/// Activity CSV: `minute_epoch,processes,domains,clicks,keystrokes,background`
/// with ';'-joined token lists.
void write_activity_csv(std::ostream& out, const UserDataset& dataset);
UserDataset read_activity_csv(std::istream& in, std::string user_id);

}  // namespace cuprof
