#include "cuprof/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

std::array<bool, 24> hours_mask(int first_hour, int last_hour_exclusive) {
  std::array<bool, 24> mask{};
  for (int h = std::max(0, first_hour); h < std::min(24, last_hour_exclusive); ++h) mask[static_cast<std::size_t>(h)] = true;
  return mask;
}

void validate(const SyntheticUserSpec& spec) {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (spec.processes.empty()) throw Error(ErrorCode::InvalidSpec, spec.user_id + ": empty process vocabulary");
  for (const auto& list : {spec.processes, spec.domains}) {
    for (const auto& [tok, p] : list) {
      if (!prob_ok(p)) throw Error(ErrorCode::InvalidSpec, spec.user_id + ": probability of '" + tok + "' outside [0,1]");
      if (tok.empty()) throw Error(ErrorCode::InvalidSpec, spec.user_id + ": empty token");
    }
  }
  if (!prob_ok(spec.activity_prob) || !prob_ok(spec.background_prob)) {
    throw Error(ErrorCode::InvalidSpec, spec.user_id + ": activity/background probability outside [0,1]");
  }
  if (std::none_of(spec.active_hours.begin(), spec.active_hours.end(), [](bool b) { return b; })) {
    throw Error(ErrorCode::InvalidSpec, spec.user_id + ": no active hour");
  }
  if (spec.days <= 0) throw Error(ErrorCode::InvalidSpec, spec.user_id + ": days must be positive");
  if (spec.click_rate < 0.0 || spec.keystroke_rate < 0.0) {
    throw Error(ErrorCode::InvalidSpec, spec.user_id + ": negative input rate");
  }
}

UserDataset generate_synthetic_user(const SyntheticUserSpec& spec) {
  validate(spec);
  auto rng = make_rng(spec.seed, 0x73796e);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::poisson_distribution<unsigned> clicks(spec.click_rate), keys(spec.keystroke_rate);
  std::vector<double> weights;
  for (const auto& p : spec.processes) weights.push_back(std::max(p.second, 1e-12));
  std::discrete_distribution<std::size_t> fallback(weights.begin(), weights.end());

  UserDataset ds{spec.user_id, {}};
  for (int d = 0; d < spec.days; ++d) {
    for (int h = 0; h < 24; ++h) {
      if (!spec.active_hours[static_cast<std::size_t>(h)]) continue;
      for (int m = 0; m < 60; ++m) {
        if (unit(rng) >= spec.activity_prob) continue;
        ActivityMinute row;
        row.minute_epoch = (spec.start_day + d) * kMinutesPerDay + h * 60 + m;
        for (const auto& [tok, p] : spec.processes) {
          if (unit(rng) < p) row.processes.push_back(tok);
        }
        if (row.processes.empty()) row.processes.push_back(spec.processes[fallback(rng)].first);
        for (const auto& [tok, p] : spec.domains) {
          if (unit(rng) < p) row.domains.push_back(tok);
        }
        if (unit(rng) >= spec.background_prob) {
          row.clicks = clicks(rng);
          row.keystrokes = keys(rng);
        }
        row.background = !row.domains.empty() && row.clicks == 0 && row.keystrokes == 0;
        ds.minutes.push_back(std::move(row));
      }
    }
  }
  return ds;
}

std::vector<SyntheticUserSpec> make_cohort_specs(const CohortOptions& o, std::uint64_t seed) {
  if (o.n_users <= 0 || o.shared_processes <= 0 || o.domains_per_user < 0) {
    throw Error(ErrorCode::InvalidSpec, "cohort needs users and processes");
  }
  auto rng = make_rng(seed, 0x636f68);
  std::uniform_real_distribution<double> proc_p(0.05, 0.5), dom_p(0.05, 0.3), click(1.0, 6.0), key(5.0, 30.0);
  std::vector<std::pair<std::string, double>> shared_procs;
  for (int p = 0; p < o.shared_processes; ++p) {
    shared_procs.emplace_back("c:/program files/app" + std::to_string(p) + "/app" + std::to_string(p) + ".exe",
                              proc_p(rng));
  }
  const double shared_click = click(rng), shared_key = key(rng);
  std::vector<SyntheticUserSpec> specs;
  for (int u = 0; u < o.n_users; ++u) {
    SyntheticUserSpec s;
    s.user_id = "user" + std::string(u < 10 ? "0" : "") + std::to_string(u);
    s.processes = shared_procs;
    if (!o.domains_only) {
      for (auto& p : s.processes) p.second = proc_p(rng);
    }
    for (int k = 0; k < o.domains_per_user; ++k) {
      s.domains.emplace_back("site" + std::to_string(k) + "." + s.user_id + ".example", dom_p(rng));
    }
    s.active_hours = hours_mask(o.first_hour, o.last_hour);
    s.activity_prob = o.activity_prob;
    s.click_rate = o.domains_only ? shared_click : click(rng);
    s.keystroke_rate = o.domains_only ? shared_key : key(rng);
    s.days = o.days;
    s.seed = mix64(seed ^ (0xA24BAED4963EE407ULL * static_cast<std::uint64_t>(u + 1)));
    specs.push_back(std::move(s));
  }
  return specs;
}

std::vector<UserDataset> make_cohort(const CohortOptions& options, std::uint64_t seed) {
  std::vector<UserDataset> out;
  if (options.shifted_users < 0 || options.shifted_users > options.n_users) {
    throw Error(ErrorCode::InvalidSpec, "shifted_users outside [0, n_users]");
  }
  if (options.shifted_users > 0 && (options.shift_day < 2 || options.shift_day > options.days)) {
    throw Error(ErrorCode::InvalidSpec, "shift_day outside the cohort span");
  }
  if (!(options.shift_domain_fraction >= 0.0 && options.shift_domain_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "shift_domain_fraction must lie in [0, 1]");
  }
  auto rng = make_rng(seed, 0x736866);
  std::uniform_real_distribution<double> proc_p(0.05, 0.5), click(1.0, 6.0), key(5.0, 30.0);
  const auto specs = make_cohort_specs(options, seed);
  for (std::size_t u = 0; u < specs.size(); ++u) {
    const auto& s = specs[u];
    if (static_cast<int>(u) < options.n_users - options.shifted_users) {
      out.push_back(generate_synthetic_user(s));
      continue;
    }
    SyntheticUserSpec before = s, after = s;
    before.days = options.shift_day - 1;
    after.days = options.days - before.days;
    after.start_day = s.start_day + before.days;
    after.seed = mix64(s.seed ^ 0x5348494654ULL);
    if (!options.domains_only) {
      for (auto& p : after.processes) p.second = proc_p(rng);
      after.click_rate = click(rng);
      after.keystroke_rate = key(rng);
    }
    const auto n_swap = static_cast<std::size_t>(std::lround(options.shift_domain_fraction * after.domains.size()));
    for (std::size_t k = 0; k < n_swap; ++k) {
      after.domains[k].first = "site" + std::to_string(k) + "." + s.user_id + ".shifted.example";
    }
    auto d = generate_synthetic_user(before);
    auto tail = generate_synthetic_user(after);
    d.minutes.insert(d.minutes.end(), std::make_move_iterator(tail.minutes.begin()),
                     std::make_move_iterator(tail.minutes.end()));
    out.push_back(std::move(d));
  }
  return out;
}

std::string assign_ip(const std::string& domain, DnsMap& dns_map) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : domain) h = (h ^ c) * 0x100000001b3ULL;
  for (std::uint32_t probe = 0;; ++probe) {
    const auto v = static_cast<std::uint32_t>(mix64(h + probe)) & 0xFFFFFFu;
    const std::string ip = "10." + std::to_string(v >> 16) + "." + std::to_string((v >> 8) & 0xFF) + "." +
                           std::to_string(v & 0xFF);
    const auto it = dns_map.find(ip);
    if (it == dns_map.end()) {
      dns_map.emplace(ip, domain);
      return ip;
    }
    if (it->second == domain) return ip;
  }
}

RawLogs synthesize_raw_logs(const UserDataset& dataset, DnsMap& dns_map) {
  RawLogs logs;
  std::map<std::string, std::string> ip_of;
  for (const auto& [ip, dom] : dns_map) {
    if (auto [it, ok] = ip_of.emplace(dom, ip); !ok && ip < it->second) it->second = ip;
  }
  std::map<std::string, std::uint32_t> pid_of;
  auto pid = [&](const std::string& p) {
    return pid_of.emplace(p, static_cast<std::uint32_t>(1000 + 4 * pid_of.size())).first->second;
  };
  for (const auto& row : dataset.minutes) {
    const auto base = epoch_seconds_to_filetime(row.minute_epoch * 60);
    std::uint64_t tick = 0;
    auto at = [&] { return base + (tick++) * kFiletimeTicksPerSecond; };
    for (const auto& p : row.processes) {
      logs.process.push_back({EventKind::ProcessEvent, pid(p), p, at(), std::nullopt, 1, false});
    }
    for (const auto& d : row.domains) {
      auto it = ip_of.find(d);
      if (it == ip_of.end()) it = ip_of.emplace(d, assign_ip(d, dns_map)).first;
      const auto& p = row.processes.front();
      logs.network.push_back(
          {EventKind::NetworkEvent, pid(p), p, at(), NetworkInfo{it->second, std::nullopt, Direction::Outbound}, 1, false});
    }
    if (row.clicks > 0) logs.clicks.push_back({EventKind::MouseClick, 0, "mouse", at(), std::nullopt, row.clicks, true});
    if (row.keystrokes > 0) {
      logs.keystrokes.push_back({EventKind::KeystrokeBurst, 0, "keyboard", at(), std::nullopt, row.keystrokes, true});
    }
  }
  return logs;
}

namespace {
void write_lines(const std::filesystem::path& file, const std::vector<RawEventRecord>& records) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  for (const auto& r : records) out << serialize_event_line(r) << '\n';
}
}  // namespace

void write_raw_logs(const std::filesystem::path& dir, const RawLogs& logs) {
  std::filesystem::create_directories(dir);
  write_lines(dir / "process.log", logs.process);
  write_lines(dir / "network.log", logs.network);
  write_lines(dir / "click.log", logs.clicks);
  write_lines(dir / "keystroke.log", logs.keystrokes);
}

void write_dns_map(const std::filesystem::path& file, const DnsMap& dns_map) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + file.string());
  std::map<std::string, std::string> sorted(dns_map.begin(), dns_map.end());
  out << "ip,domain\n";
  for (const auto& [ip, dom] : sorted) out << ip << ',' << dom << '\n';
}

}  // namespace cuprof
