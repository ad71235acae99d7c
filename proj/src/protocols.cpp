#include "cuprof/protocols.hpp"

#include <algorithm>
#include <numeric>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

namespace {

// Slices too short for a single window contribute nothing.
std::vector<FeatureWindow> windows_or_empty(const UserDataset& d, const WindowSpec& spec) {
  if (d.size() < static_cast<std::size_t>(spec.t)) return {};
  return slide_windows(d, spec);
}

void append(std::vector<FeatureWindow>& out, std::vector<int>& labels, std::vector<FeatureWindow>&& w, int label) {
  labels.insert(labels.end(), w.size(), label);
  out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
}

Labels to_labels(const std::vector<int>& v) {
  Labels y(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) y(static_cast<Eigen::Index>(i)) = v[i];
  return y;
}

}  // namespace

UserDataset rows_through_day(const UserDataset& dataset, int days) {
  UserDataset out{dataset.user_id, {}};
  for (const auto& m : dataset.minutes) {
    if (dataset.study_day(m.minute_epoch) <= days) out.minutes.push_back(m);
  }
  return out;
}

UserDataset rows_after_day(const UserDataset& dataset, int days) {
  UserDataset out{dataset.user_id, {}};
  for (const auto& m : dataset.minutes) {
    if (dataset.study_day(m.minute_epoch) > days) out.minutes.push_back(m);
  }
  return out;
}

DaySplit split_seven_days(const UserDataset& dataset, int train_days) {
  DaySplit s{rows_through_day(dataset, train_days), rows_after_day(dataset, train_days)};
  if (s.test.empty()) {
    throw Error(ErrorCode::InsufficientDays, dataset.user_id + " has no data after study day " +
                                                 std::to_string(train_days));
  }
  return s;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition_negative_users(std::size_t n_others,
                                                                                       std::uint64_t seed) {
  if (n_others < 2) {
    throw Error(ErrorCode::TooFewNegativeUsers, "need at least 2 other users, got " + std::to_string(n_others));
  }
  std::vector<std::size_t> idx(n_others);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed, 0x6e6567);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::ptrdiff_t>(n_others / 2);
  std::vector<std::size_t> train(idx.begin(), idx.begin() + n_train), test(idx.begin() + n_train, idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

BinaryTask assemble_binary_task(const UserDataset& target, std::span<const UserDataset> others,
                                const WindowSpec& spec, std::uint64_t seed) {
  const auto [train_users, test_users] = partition_negative_users(others.size(), seed);
  const auto split = split_seven_days(target);
  BinaryTask task;
  std::vector<int> ytr, yte;
  append(task.train, ytr, windows_or_empty(split.train, spec), +1);
  for (auto i : train_users) {
    append(task.train, ytr, windows_or_empty(rows_through_day(others[i], kTrainingDays), spec), -1);
    task.train_negative_users.push_back(others[i].user_id);
  }
  append(task.test, yte, windows_or_empty(split.test, spec), +1);
  for (auto i : test_users) {
    append(task.test, yte, windows_or_empty(rows_after_day(others[i], kTrainingDays), spec), -1);
    task.test_negative_users.push_back(others[i].user_id);
  }
  task.train_labels = to_labels(ytr);
  task.test_labels = to_labels(yte);
  return task;
}

std::vector<FeatureWindow> assemble_oneclass_outliers(std::span<const UserDataset> others, const WindowSpec& spec) {
  if (others.empty()) throw Error(ErrorCode::NoOutlierData, "no other users supplied");
  std::vector<std::size_t> order(others.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return others[a].user_id < others[b].user_id; });
  std::vector<FeatureWindow> out;
  for (auto i : order) {
    auto w = windows_or_empty(rows_after_day(others[i], kTrainingDays), spec);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  if (out.empty()) throw Error(ErrorCode::NoOutlierData, "other users have no windows after the first week");
  return out;
}

WindowTask assemble_oneclass_task(const UserDataset& target, std::span<const UserDataset> others,
                                  const WindowSpec& spec) {
  const auto split = split_seven_days(target);
  WindowTask task;
  std::vector<int> ytr, yte;
  append(task.train, ytr, windows_or_empty(split.train, spec), +1);
  append(task.test, yte, windows_or_empty(split.test, spec), +1);
  append(task.test, yte, assemble_oneclass_outliers(others, spec), -1);
  task.train_labels = to_labels(ytr);
  task.test_labels = to_labels(yte);
  return task;
}

DenseTask featurize_task(const WindowTask& task, ScalingMode mode) {
  DenseTask d;
  d.processes = fit_vocabulary(task.train, TokenField::Process);
  d.domains = fit_vocabulary(task.train, TokenField::Domain);
  const auto dim = static_cast<Eigen::Index>(kNumericFeatures + d.processes.size() + d.domains.size());
  auto vectorize = [&](const std::vector<FeatureWindow>& ws) -> Eigen::MatrixXd {
    if (ws.empty()) return Eigen::MatrixXd(0, dim);
    std::vector<FeatureVector> rows;
    rows.reserve(ws.size());
    for (const auto& w : ws) rows.push_back(tfidf_vectorize(w, d.processes, d.domains));
    return to_dense(rows);
  };
  auto scaled = scale_features(vectorize(task.train), vectorize(task.test), mode);
  d.x_train = std::move(scaled.train);
  d.x_test = std::move(scaled.applied);
  d.scaler = std::move(scaled.scaler);
  d.y_train = task.train_labels;
  d.y_test = task.test_labels;
  return d;
}

std::vector<Eigen::Index> chronological_order(std::span<const FeatureWindow> windows) {
  std::vector<Eigen::Index> order(windows.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return windows[static_cast<std::size_t>(a)].end_minute_epoch < windows[static_cast<std::size_t>(b)].end_minute_epoch;
  });
  return order;
}

}  // namespace cuprof
