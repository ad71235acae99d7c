#pragma once

// Plain-text `key = value` pipeline configuration.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cuprof/classifiers.hpp"
#include "cuprof/drift.hpp"
#include "cuprof/features.hpp"

namespace cuprof {

struct PipelineConfig {
  std::optional<std::filesystem::path> logs_dir;  // one subdirectory per user
  std::optional<std::filesystem::path> dns_map;
  std::filesystem::path out_dir = "cuprof_out";

  std::vector<int> window_sizes{std::begin(kCompatWindowSizes), std::end(kCompatWindowSizes)};
  int window_stride = 1;
  ScalingMode scaling = ScalingMode::MaxAbs;
  std::vector<ModelKind> models{ModelKind::SgdHinge,        ModelKind::Perceptron,     ModelKind::RandomForest,
                                ModelKind::IsolationForest, ModelKind::OneClassLinear, ModelKind::HalfSpaceTrees};
  std::optional<std::uint64_t> seed;
  int runs = 1;
  int forest_trees = 100;
  int isolation_trees = 100;

  int som_width = 20;
  int som_height = 20;
  int som_epochs = 30;
  int som_window = 10;

  int drift_window = 10;
  int drift_stride = 1;
  int drift_curve_hours = 168;
  int drift_step_hours = 1;
  DriftThresholds drift;

  int surrogates = 100;
  bool paper_compat = false;
  int jobs = 1;

  int synth_users = 10;
  int synth_days = 14;
  bool synth_domains_only = false;
  int synth_shifted_users = 0;

  std::uint64_t seed_or_throw() const;
};

/// Lines are `key = value`; `#` starts a comment; lists are comma separated.
/// Unknown keys and malformed values throw ConfigError.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& file);

/// Applies one `key = value` assignment (also used for CLI overrides).
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

/// Checks value ranges, seed presence, paper-compat constraints and that
/// referenced inputs exist. `needs_logs` also requires logs_dir to be set.
void validate_config(const PipelineConfig& config, bool needs_logs);

/// Canonical `key = value` rendering; parse_config(render_config(c)) == c.
std::string render_config(const PipelineConfig& config);

}  // namespace cuprof
