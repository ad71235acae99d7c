#pragma once

// Per-user Gini importance ranking from weekly one-vs-rest random forests.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cuprof/features.hpp"
#include "cuprof/forest.hpp"
#include "cuprof/ingest.hpp"

namespace cuprof {

struct ImportanceOptions {
  WindowSpec window{10, 1, std::nullopt};
  bool weekly = true;
  int top_k = 10;
  int min_windows = 5;  // per class and week; sparser weeks are skipped
  ForestParams forest;
  ScalingMode scaling = ScalingMode::MaxAbs;
};

struct UserTopFeatures {
  std::string user_id;
  std::vector<std::pair<std::string, double>> top;  // (feature name, mean importance)
  int weeks_used = 0;
};

struct ImportanceReport {
  std::vector<UserTopFeatures> users;
  std::vector<std::string> warnings;
};

/// For each user and study week, trains a forest separating that user's
/// windows from every other user's windows of the same week. Importances
/// are averaged over the user's weeks by feature name (absent = 0); ties
/// keep first-seen order.
ImportanceReport feature_importance_report(std::span<const UserDataset> datasets, const ImportanceOptions& options,
                                           std::uint64_t seed);

/// True for names produced for the domain tf-idf block.
bool is_domain_feature(const std::string& name);

}  // namespace cuprof
