#pragma once

// Confusion-matrix metrics, offline and prequential evaluation, ROC AUC.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cuprof/classifiers.hpp"

namespace cuprof {

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
};

/// Zero denominators yield 0.
Metrics compute_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn);

struct EvalReport {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fscore = 0.0;
  std::optional<std::vector<double>> per_step_curve;
  int runs = 1;
  std::optional<std::pair<double, double>> ci95;

  void record(int predicted, int actual);
  void finalize();  // recompute precision/recall/fscore from the counts
  std::string to_json() const;
};

/// Labels: +1 positive (target user), -1 negative (other users / outliers).
EvalReport evaluate_offline(const Model& model, const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                            const Thresholds& thr = {});

enum class CurveMode { Cumulative, Sliding };

struct PrequentialOptions {
  CurveMode mode = CurveMode::Cumulative;
  int sliding_window = 100;
  Thresholds thresholds;
  // Half-space trees learn only from rows labelled as the target user.
  bool oneclass_update_target_only = true;
};

/// Test-then-train over the rows in order, starting from a copy of warm_start.
EvalReport evaluate_prequential(const Model& warm_start, const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                                const PrequentialOptions& options = {});

/// Area under the ROC curve; higher scores should indicate the positive
/// label. Ties contribute one half.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Mean with normal-approximation 95% interval; the interval is omitted for
/// a single value.
struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;
  int n = 0;
  std::optional<std::pair<double, double>> ci95;
};
Aggregate aggregate(const std::vector<double>& values);

}  // namespace cuprof
