#pragma once

// Isolation forest (random axis-parallel isolation trees on subsamples).

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace cuprof {

struct IsolationNode {
  int feature = -1;  // -1 marks an external node
  double threshold = 0.0;  // x[feature] < threshold goes left
  int left = -1;
  int right = -1;
  int size = 0;  // training points that reached the node

  bool is_external() const { return feature < 0; }
  bool operator==(const IsolationNode&) const = default;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // preorder, root first

  /// Edges to the external node plus c(size) for the unresolved remainder.
  double path_length(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int height() const;
  bool operator==(const IsolationTree&) const = default;
};

/// Average unsuccessful-search path length in a BST of n points:
/// 0 for n <= 1, 1 for n = 2, else 2 (ln(n-1) + gamma) - 2 (n-1)/n.
double average_path_length(double n);

struct IsolationParams {
  int n_trees = 100;
  int subsample = 256;
};

struct IsolationForestModel {
  std::vector<IsolationTree> trees;
  int n_trees = 0;
  int subsample = 0;
  double c_psi = 0.0;
  Eigen::Index dim = 0;
  std::uint64_t rng_seed = 0;

  double mean_path_length(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// s(x) = 2^(-E[h(x)] / c(psi)) in (0, 1); higher means more anomalous.
  double anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Subsample size is clamped to the number of rows (a warning is recorded in
/// `clamped` when that happens). Height limit is ceil(log2 psi).
IsolationForestModel train_isolation_forest(const Eigen::Ref<const Eigen::MatrixXd>& x, const IsolationParams& params,
                                            std::uint64_t seed, bool* clamped = nullptr);

}  // namespace cuprof
