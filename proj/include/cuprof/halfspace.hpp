#pragma once

// Streaming half-space trees. Features are expected in [0, 1] (max-abs
// scaled non-negative data); split points come from randomly perturbed work
// ranges, so values moderately outside that interval are still handled.

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace cuprof {

struct HstNode {
  int feature = 0;
  double split = 0.0;  // x[feature] < split goes left
  double reference_mass = 0.0;
  double latest_mass = 0.0;

  bool operator==(const HstNode&) const = default;
};

/// Complete binary tree of fixed depth, materialized lazily. Node ids use
/// heap numbering (root = 1, children 2i and 2i + 1); a node's split is a
/// pure function of (seed, tree, id) and its work range, so lazily created
/// nodes are reproducible.
struct HstTree {
  std::uint64_t seed = 0;
  Eigen::VectorXd range_lo;
  Eigen::VectorXd range_hi;
  std::map<std::uint32_t, HstNode> nodes;
};

struct HalfSpaceParams {
  int n_trees = 25;
  int depth = 15;
  int window_size = 250;
};

struct HalfSpaceTreesModel {
  std::vector<HstTree> trees;
  int n_trees = 0;
  int depth = 0;
  int window_size = 0;
  Eigen::Index dim = 0;
  long updates_seen = 0;
  long windows_completed = 0;
  double threshold = 0.5;  // anomaly-score cut used for labels

  /// Cumulative mass profile along x's path, stopping once the reference
  /// mass drops below 10% of the window. Returns 1 - normalized mass, so
  /// higher means more anomalous, in [0, 1].
  double anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Adds x to the latest-window masses along its root-to-leaf path in every
  /// tree; every window_size updates the latest masses become the reference.
  void update(const Eigen::Ref<const Eigen::VectorXd>& x);

  double size_limit() const { return 0.1 * window_size; }
};

HalfSpaceTreesModel make_half_space_trees(Eigen::Index dim, const HalfSpaceParams& params, std::uint64_t seed);

/// Streams every row through update() and then sets `threshold` to the
/// (1 - contamination) quantile of the rows' anomaly scores.
HalfSpaceTreesModel train_half_space_trees(const Eigen::Ref<const Eigen::MatrixXd>& x, const HalfSpaceParams& params,
                                           std::uint64_t seed, double contamination = 0.1);

}  // namespace cuprof
