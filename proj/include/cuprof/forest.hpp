#pragma once

// CART random forest with Gini splits and mean-decrease-impurity importances.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cuprof/linear.hpp"

namespace cuprof {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;
  int n_samples = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

/// Nodes stored in preorder; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::size_t depth() const;
  bool operator==(const DecisionTree&) const = default;
};

struct ForestParams {
  int n_trees = 100;
  int max_features = 0;  // 0 selects floor(sqrt(dim))
  bool bootstrap = true;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  int n_trees = 0;
  int max_features = 0;
  Eigen::Index dim = 0;
  Eigen::VectorXd feature_importances;
  std::uint64_t rng_seed = 0;

  /// Mean over trees of the leaf's positive-class fraction.
  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

RandomForestModel train_random_forest(const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                                      const ForestParams& params, std::uint64_t seed);

}  // namespace cuprof
