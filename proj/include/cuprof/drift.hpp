#pragma once

// Classification curves over sliding time slices, drift categorization and
// controlled drift synthesis.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cuprof/classifiers.hpp"
#include "cuprof/features.hpp"
#include "cuprof/ingest.hpp"

namespace cuprof {

enum class DriftLabel { NoDrift, Sudden, Gradual, Incremental, Recurring, Unidentifiable };
const char* to_string(DriftLabel label);
DriftLabel drift_label_from_string(const std::string& name);

struct CurveParams {
  int train_days = 7;
  int window_len_hours = 168;
  int step_hours = 1;
  WindowSpec window;
  ScalingMode scaling = ScalingMode::MaxAbs;
  ModelKind model = ModelKind::OneClassLinear;
  TrainingOptions training;
};

struct ClassificationCurve {
  std::vector<std::int64_t> start_hour;  // epoch hour of each slice start
  std::vector<double> score;             // fraction of slice windows labelled as the user
  std::vector<std::size_t> n_windows;
  int window_len_hours = 168;
  int step_hours = 1;

  std::size_t size() const { return score.size(); }
  /// Slice length in curve points.
  double window_points() const { return static_cast<double>(window_len_hours) / step_hours; }
  std::string to_csv() const;
};

/// A one-class model is fitted on the first train_days; each later slice of
/// window_len_hours (advancing step_hours) scores the fraction of its
/// windows accepted. Slices without windows are skipped. Throws
/// InsufficientSpan when no slice fits after the training span.
ClassificationCurve drift_curve(const UserDataset& dataset, const CurveParams& params, std::uint64_t seed);

struct DriftThresholds {
  double flat_tolerance = 0.1;   // max |score - median| for NoDrift
  double min_shift = 0.2;        // level change accepted by segmentation
  double recovery = 0.1;         // distance to the pre-shift level for Recurring
  double sudden_factor = 1.1;    // max 10-90% transition, in slice lengths
  double alpha = 0.01;           // slope test level for Incremental
  double min_r2 = 0.9;
  double plateau_factor = 1.5;   // tail length, in slice lengths, checked for a plateau
  std::size_t min_points = 10;
};

struct DriftResult {
  DriftLabel label = DriftLabel::Unidentifiable;
  std::vector<std::pair<std::size_t, std::size_t>> segments;  // [begin, end) of each level
  std::vector<double> levels;
  std::map<std::string, double> evidence;

  std::string to_json() const;
};

/// Mean-shift segments by recursive binary splitting; a split is kept when
/// the two sides differ by at least min_shift.
std::vector<std::pair<std::size_t, std::size_t>> segment_levels(const std::vector<double>& curve, double min_shift,
                                                                  std::size_t min_len);

/// Cascade: NoDrift, Recurring, Sudden, Gradual, Incremental, otherwise
/// Unidentifiable. Throws CurveTooShort.
DriftResult categorize_drift(const ClassificationCurve& curve, const DriftThresholds& thresholds = {});

struct DriftDataset {
  UserDataset data;
  DriftLabel truth = DriftLabel::NoDrift;
  std::vector<double> mix;  // per study day, share of the second source
};

/// Splices two users on the first user's calendar. Second-source rows keep
/// their minute of day and are re-timed onto the matching day. Throws
/// SourceTooShort below three weeks and InvalidSpec for Unidentifiable.
DriftDataset synthesize_drift_dataset(DriftLabel kind, const UserDataset& a, const UserDataset& b,
                                      std::uint64_t seed);

}  // namespace cuprof
