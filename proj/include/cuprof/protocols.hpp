#pragma once

// Experiment protocols: the first-week split, binary tasks with disjoint
// negative users, one-class outlier sets, and task featurization.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cuprof/features.hpp"
#include "cuprof/ingest.hpp"
#include "cuprof/linear.hpp"

namespace cuprof {

inline constexpr int kTrainingDays = 7;

struct DaySplit {
  UserDataset train;  // study days 1..train_days
  UserDataset test;   // the remainder, in order
};

/// Throws InsufficientDays when the test part would be empty.
DaySplit split_seven_days(const UserDataset& dataset, int train_days = kTrainingDays);

/// Rows of study days 1..days (possibly everything) and rows after that.
UserDataset rows_through_day(const UserDataset& dataset, int days);
UserDataset rows_after_day(const UserDataset& dataset, int days);

struct WindowTask {
  std::vector<FeatureWindow> train;
  Labels train_labels;
  std::vector<FeatureWindow> test;
  Labels test_labels;
};

struct BinaryTask : WindowTask {
  std::vector<std::string> train_negative_users;
  std::vector<std::string> test_negative_users;
};

/// Splits `others` into floor(n/2) training negatives and the rest for
/// testing, shuffled by seed. Returns indices into `others`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_negative_users(std::size_t n_others,
                                                                                       std::uint64_t seed);

/// Positives: the target's windows (first week for training, the rest for
/// test). Negatives: first-week windows of the training users and post-week
/// windows of the test users. Throws TooFewNegativeUsers with < 2 others.
BinaryTask assemble_binary_task(const UserDataset& target, std::span<const UserDataset> others,
                                const WindowSpec& spec, std::uint64_t seed);

/// Post-week windows of every other user, ordered by (user id, time).
std::vector<FeatureWindow> assemble_oneclass_outliers(std::span<const UserDataset> others, const WindowSpec& spec);

/// Train: the target's first week. Test: the target's remaining windows (+1)
/// followed by every other user's post-week windows (-1).
WindowTask assemble_oneclass_task(const UserDataset& target, std::span<const UserDataset> others,
                                  const WindowSpec& spec);

struct DenseTask {
  Eigen::MatrixXd x_train;
  Labels y_train;
  Eigen::MatrixXd x_test;
  Labels y_test;
  Vocabulary processes;
  Vocabulary domains;
  Scaler scaler;
};

/// Vocabularies and scaler are fit on the training windows only.
DenseTask featurize_task(const WindowTask& task, ScalingMode mode = ScalingMode::MaxAbs);

/// Row order for a time-ordered stream: by window end, ties kept in input order.
std::vector<Eigen::Index> chronological_order(std::span<const FeatureWindow> windows);

}  // namespace cuprof
