#include "cuprof/ingest.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "cuprof/detail/text.hpp"

namespace cuprof {

namespace {

std::string line_error(std::string_view what, std::string_view line) {
  std::string msg(what);
  msg += " in record '";
  msg += line.substr(0, 120);
  msg += "'";
  return msg;
}

bool is_input_kind(EventKind kind) {
  return kind == EventKind::MouseClick || kind == EventKind::KeystrokeBurst;
}

void push_unique(std::vector<std::string>& tokens, std::string token) {
  if (std::find(tokens.begin(), tokens.end(), token) == tokens.end()) tokens.push_back(std::move(token));
}

std::string sanitize_token(std::string token) {
  for (char& c : token) {
    if (c == ';' || c == '|') c = '_';
  }
  return token;
}

}  // namespace

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::ProcessEvent: return "process";
    case EventKind::NetworkEvent: return "network";
    case EventKind::MouseClick: return "click";
    case EventKind::KeystrokeBurst: return "keystroke";
  }
  return "unknown";
}

RawEventRecord parse_event_line(std::string_view line, EventKind kind_hint) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

  const auto fields = detail::split(line, '|');
  // Every field is '|'-terminated, so the split yields one trailing empty piece.
  const std::size_t n = fields.size();
  const bool terminated = n >= 1 && fields.back().empty();
  const std::size_t n_fields = terminated ? n - 1 : n;

  bool ok_count = false;
  switch (kind_hint) {
    case EventKind::ProcessEvent: ok_count = n_fields == 3; break;
    case EventKind::NetworkEvent: ok_count = n_fields == 5; break;
    case EventKind::MouseClick:
    case EventKind::KeystrokeBurst: ok_count = n_fields == 3 || n_fields == 4; break;
  }
  if (!terminated || !ok_count) {
    throw Error(ErrorCode::WrongFieldCount, line_error("unexpected field layout", line));
  }

  RawEventRecord rec;
  rec.kind = kind_hint;

  const auto pid = detail::parse_canonical_uint<std::uint32_t>(fields[0]);
  if (!pid) throw Error(ErrorCode::NonNumericField, line_error("pid is not a canonical integer", line));
  rec.pid = *pid;

  if (fields[1].empty()) throw Error(ErrorCode::EmptyPath, line_error("empty executable path", line));
  rec.exe_path = std::string(fields[1]);

  const auto ts = detail::parse_canonical_uint<std::uint64_t>(fields[2]);
  if (!ts) throw Error(ErrorCode::NonNumericField, line_error("timestamp is not a canonical integer", line));
  if (*ts < kUnixEpochFiletime) {
    throw Error(ErrorCode::PreEpochTimestamp, line_error("timestamp precedes 1970-01-01", line));
  }
  rec.timestamp_filetime = *ts;

  if (kind_hint == EventKind::NetworkEvent) {
    NetworkInfo net;
    if (!is_valid_ipv4(fields[3])) throw Error(ErrorCode::MalformedIp, line_error("bad destination ip", line));
    net.dst_ip = std::string(fields[3]);
    if (fields[4] == "inbound") {
      net.direction = Direction::Inbound;
    } else if (fields[4] == "outbound") {
      net.direction = Direction::Outbound;
    } else {
      throw Error(ErrorCode::FormatError, line_error("direction must be inbound|outbound", line));
    }
    rec.net = std::move(net);
  } else if (is_input_kind(kind_hint) && n_fields == 4) {
    const auto count = detail::parse_canonical_uint<std::uint32_t>(fields[3]);
    if (!count || *count == 0) throw Error(ErrorCode::NonNumericField, line_error("count must be positive", line));
    rec.count = *count;
    rec.explicit_count = true;
  }
  return rec;
}

std::string serialize_event_line(const RawEventRecord& rec) {
  std::string out = std::to_string(rec.pid);
  out += '|';
  out += rec.exe_path;
  out += '|';
  out += std::to_string(rec.timestamp_filetime);
  out += '|';
  if (rec.kind == EventKind::NetworkEvent && rec.net) {
    out += rec.net->dst_ip;
    out += '|';
    out += rec.net->direction == Direction::Inbound ? "inbound" : "outbound";
    out += '|';
  } else if (is_input_kind(rec.kind) && rec.explicit_count) {
    out += std::to_string(rec.count);
    out += '|';
  }
  return out;
}

long double filetime_to_epoch_seconds(std::uint64_t filetime) {
  if (filetime < kUnixEpochFiletime) {
    throw Error(ErrorCode::PreEpochTimestamp, std::to_string(filetime) + " precedes 1970-01-01");
  }
  const std::uint64_t ticks = filetime - kUnixEpochFiletime;
  const auto whole = static_cast<long double>(ticks / kFiletimeTicksPerSecond);
  const auto frac = static_cast<long double>(ticks % kFiletimeTicksPerSecond) / 1e7L;
  return whole + frac;
}

std::int64_t filetime_to_epoch_minute(std::uint64_t filetime) {
  if (filetime < kUnixEpochFiletime) {
    throw Error(ErrorCode::PreEpochTimestamp, std::to_string(filetime) + " precedes 1970-01-01");
  }
  return static_cast<std::int64_t>((filetime - kUnixEpochFiletime) / (60 * kFiletimeTicksPerSecond));
}

std::uint64_t epoch_seconds_to_filetime(std::int64_t seconds) {
  return kUnixEpochFiletime + static_cast<std::uint64_t>(seconds) * kFiletimeTicksPerSecond;
}

ParseReport parse_event_log(std::istream& in, EventKind kind_hint, double max_bad_fraction) {
  ParseReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++report.lines_seen;
    try {
      report.records.push_back(parse_event_line(line, kind_hint));
    } catch (const Error& e) {
      report.issues.push_back({line_no, e.code(), e.what()});
    }
  }
  if (report.lines_seen > 0) {
    const double bad = static_cast<double>(report.issues.size()) / static_cast<double>(report.lines_seen);
    if (bad > max_bad_fraction) {
      const auto& first = report.issues.front();
      throw Error(ErrorCode::BatchRejected, std::to_string(report.issues.size()) + " of " +
                                                std::to_string(report.lines_seen) + " lines bad (first at line " +
                                                std::to_string(first.line_no) + ": " + first.message + ")");
    }
  }
  return report;
}

bool is_valid_ipv4(std::string_view ip) {
  const auto parts = detail::split(ip, '.');
  if (parts.size() != 4) return false;
  for (auto p : parts) {
    if (p.empty() || p.size() > 3) return false;
    const auto v = detail::parse_canonical_uint<unsigned>(p);
    if (!v || *v > 255) return false;
  }
  return true;
}

DnsMap read_dns_map(std::istream& in) {
  DnsMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (line_no == 1 && t == "ip,domain") continue;
    const auto comma = t.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::FormatError, "dns map line " + std::to_string(line_no) + " lacks a comma");
    }
    const auto ip = detail::trim(t.substr(0, comma));
    const auto domain = detail::trim(t.substr(comma + 1));
    if (!is_valid_ipv4(ip)) {
      throw Error(ErrorCode::MalformedIp, "dns map line " + std::to_string(line_no) + ": " + std::string(ip));
    }
    map.emplace(std::string(ip), std::string(domain));
  }
  return map;
}

std::string resolve_domain(std::string_view ip, const DnsMap& dns_map) {
  if (!is_valid_ipv4(ip)) throw Error(ErrorCode::MalformedIp, std::string(ip));
  if (const auto it = dns_map.find(std::string(ip)); it != dns_map.end() && !it->second.empty()) {
    return it->second;
  }
  return std::string(ip);
}

void resolve_domains(std::span<RawEventRecord> records, const DnsMap& dns_map) {
  for (auto& r : records) {
    if (r.net && !r.net->dst_domain) r.net->dst_domain = resolve_domain(r.net->dst_ip, dns_map);
  }
}

std::string process_token(std::string_view exe_path) {
  std::string token(exe_path);
  for (char& c : token) {
    if (c == '\\') c = '/';
    else if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return sanitize_token(std::move(token));
}

std::string domain_token(std::string_view domain) { return sanitize_token(std::string(domain)); }

std::int64_t UserDataset::first_day() const {
  if (minutes.empty()) return 0;
  const auto m = minutes.front().minute_epoch;
  return m >= 0 ? m / kMinutesPerDay : -((-m + kMinutesPerDay - 1) / kMinutesPerDay);
}

int UserDataset::study_day(std::int64_t minute_epoch) const {
  return static_cast<int>(minute_epoch / kMinutesPerDay - first_day()) + 1;
}

int UserDataset::span_days() const {
  if (minutes.empty()) return 0;
  return study_day(minutes.back().minute_epoch);
}

void validate(const UserDataset& dataset) {
  for (std::size_t i = 0; i < dataset.minutes.size(); ++i) {
    const auto& m = dataset.minutes[i];
    if (i > 0 && m.minute_epoch <= dataset.minutes[i - 1].minute_epoch) {
      throw Error(ErrorCode::FormatError, "rows not strictly ascending at minute " + std::to_string(m.minute_epoch));
    }
    if (m.background && (m.clicks != 0 || m.keystrokes != 0 || m.domains.empty())) {
      throw Error(ErrorCode::FormatError, "inconsistent background flag at minute " + std::to_string(m.minute_epoch));
    }
    for (const auto* list : {&m.processes, &m.domains}) {
      for (const auto& tok : *list) {
        if (tok.empty() || tok.find('|') != std::string::npos || tok.find(';') != std::string::npos) {
          throw Error(ErrorCode::FormatError, "bad token at minute " + std::to_string(m.minute_epoch));
        }
      }
    }
  }
}

UserDataset build_activity_matrix(std::span<const RawEventRecord> events, std::string user_id) {
  UserDataset ds;
  ds.user_id = std::move(user_id);
  if (events.empty()) return ds;

  // Stable ordering by time keeps first-seen token order deterministic for
  // events sharing a minute.
  std::vector<const RawEventRecord*> ordered;
  ordered.reserve(events.size());
  for (const auto& e : events) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    return a->timestamp_filetime < b->timestamp_filetime;
  });

  for (const auto* e : ordered) {
    const auto minute = filetime_to_epoch_minute(e->timestamp_filetime);
    if (ds.minutes.empty() || ds.minutes.back().minute_epoch != minute) {
      ds.minutes.push_back(ActivityMinute{});
      ds.minutes.back().minute_epoch = minute;
    }
    auto& row = ds.minutes.back();
    switch (e->kind) {
      case EventKind::ProcessEvent:
        push_unique(row.processes, process_token(e->exe_path));
        break;
      case EventKind::NetworkEvent:
        push_unique(row.processes, process_token(e->exe_path));
        if (e->net) push_unique(row.domains, domain_token(e->net->dst_domain.value_or(e->net->dst_ip)));
        break;
      case EventKind::MouseClick:
        row.clicks += e->count;
        break;
      case EventKind::KeystrokeBurst:
        row.keystrokes += e->count;
        break;
    }
  }
  for (auto& row : ds.minutes) {
    row.background = !row.domains.empty() && row.clicks == 0 && row.keystrokes == 0;
  }
  return ds;
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ';';
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  for (auto t : detail::split(s, ';')) out.emplace_back(t);
  return out;
}

}  // namespace

void write_activity_csv(std::ostream& out, const UserDataset& dataset) {
  out << "minute_epoch,processes,domains,clicks,keystrokes,background\n";
  for (const auto& m : dataset.minutes) {
    out << m.minute_epoch << ',' << detail::csv_quote(join_tokens(m.processes)) << ','
        << detail::csv_quote(join_tokens(m.domains)) << ',' << m.clicks << ',' << m.keystrokes << ','
        << (m.background ? 1 : 0) << '\n';
  }
}

UserDataset read_activity_csv(std::istream& in, std::string user_id) {
  UserDataset ds;
  ds.user_id = std::move(user_id);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (line_no == 1 && line.rfind("minute_epoch", 0) == 0) continue;
    const auto fields = detail::csv_split(line);
    if (!fields || fields->size() != 6) {
      throw Error(ErrorCode::FormatError, "activity csv line " + std::to_string(line_no) + ": expected 6 fields");
    }
    const auto& f = *fields;
    ActivityMinute m;
    const auto minute = detail::parse_number<std::int64_t>(f[0]);
    const auto clicks = detail::parse_number<std::uint32_t>(f[3]);
    const auto keys = detail::parse_number<std::uint32_t>(f[4]);
    if (!minute || !clicks || !keys || (f[5] != "0" && f[5] != "1")) {
      throw Error(ErrorCode::NonNumericField, "activity csv line " + std::to_string(line_no));
    }
    m.minute_epoch = *minute;
    m.processes = split_tokens(f[1]);
    m.domains = split_tokens(f[2]);
    m.clicks = *clicks;
    m.keystrokes = *keys;
    m.background = f[5] == "1";
    ds.minutes.push_back(std::move(m));
  }
  validate(ds);
  return ds;
}

}  // namespace cuprof
