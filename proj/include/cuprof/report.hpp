#pragma once

// Per-run evaluation rows and the aggregated (classifier, window, mode) tables.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cuprof {

struct ResultRow {
  std::string user;
  std::string classifier;
  int window = 0;
  std::string mode;  // "offline" or "prequential"
  int run = 0;
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  std::optional<double> auc;

  bool operator==(const ResultRow&) const = default;
};

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_csv(std::istream& in);

struct TableRow {
  std::string classifier;
  int window = 0;
  std::string mode;
  int users = 0;
  int runs = 0;
  double precision = 0.0;  // means over runs of the per-run user mean
  double recall = 0.0;
  double fscore = 0.0;
  double fscore_sd = 0.0;
  std::optional<std::pair<double, double>> fscore_ci95;  // omitted for a single run
  std::optional<double> auc;

  bool ci_omitted() const { return !fscore_ci95.has_value(); }
};

/// Rows sorted by (classifier, window, mode). Each run contributes the mean
/// over users; the interval is mean +/- 1.96 sd / sqrt(runs).
std::vector<TableRow> report_tables(std::span<const ResultRow> results);

/// Fixed six-decimal formatting so repeated invocations are byte-identical.
std::string tables_csv(std::span<const TableRow> rows);
std::string tables_json(std::span<const TableRow> rows);

}  // namespace cuprof
