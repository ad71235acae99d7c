#pragma once

// Seeded synthetic users standing in for real extractor data.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cuprof/ingest.hpp"

namespace cuprof {

struct SyntheticUserSpec {
  std::string user_id;
  std::vector<std::pair<std::string, double>> processes;  // token, per-minute usage probability
  std::vector<std::pair<std::string, double>> domains;
  std::array<bool, 24> active_hours{};
  double activity_prob = 0.4;    // chance an active-hour minute has any activity
  double background_prob = 0.1; // chance an active minute has no input events
  double click_rate = 3.0;       // Poisson means per active minute
  double keystroke_rate = 15.0;
  int days = 14;
  std::int64_t start_day = 18190;  // days since 1970-01-01 (a Monday)
  std::uint64_t seed = 0;
};

std::array<bool, 24> hours_mask(int first_hour, int last_hour_exclusive);

/// Throws InvalidSpec on probabilities outside [0, 1], an empty process list,
/// no active hour or non-positive days.
void validate(const SyntheticUserSpec& spec);

/// Every active minute carries at least one process; background minutes
/// have no input events.
UserDataset generate_synthetic_user(const SyntheticUserSpec& spec);

struct CohortOptions {
  int n_users = 10;
  int days = 14;
  int first_hour = 9;
  int last_hour = 17;  // exclusive
  int shared_processes = 12;
  int domains_per_user = 8;
  double activity_prob = 0.4;
  // When set, users share process probabilities and input rates, so only
  // their domain vocabularies tell them apart.
  bool domains_only = false;
  // Habit shift: the last `shifted_users` users redraw process
  // probabilities and input rates from `shift_day` on and swap this share
  // of their domains for new ones.
  int shifted_users = 0;
  int shift_day = 8;
  double shift_domain_fraction = 1.0;
};

/// Users with disjoint domain vocabularies over a shared process pool.
std::vector<SyntheticUserSpec> make_cohort_specs(const CohortOptions& options, std::uint64_t seed);
std::vector<UserDataset> make_cohort(const CohortOptions& options, std::uint64_t seed);

/// Extractor events whose aggregation reproduces `dataset`, plus the DNS map
/// resolving their IPs.
struct RawLogs {
  std::vector<RawEventRecord> process;
  std::vector<RawEventRecord> network;
  std::vector<RawEventRecord> clicks;
  std::vector<RawEventRecord> keystrokes;
};
RawLogs synthesize_raw_logs(const UserDataset& dataset, DnsMap& dns_map);

/// Deterministic private address for a domain, unique within dns_map.
std::string assign_ip(const std::string& domain, DnsMap& dns_map);

/// Writes process.log, network.log, click.log and keystroke.log under dir.
void write_raw_logs(const std::filesystem::path& dir, const RawLogs& logs);
void write_dns_map(const std::filesystem::path& file, const DnsMap& dns_map);

}  // namespace cuprof
