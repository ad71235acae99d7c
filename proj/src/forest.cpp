#include "cuprof/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

const TreeNode& DecisionTree::leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double RandomForestModel::predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "forest expects " + std::to_string(dim) + " features, got " + std::to_string(x.size()));
  }
  double acc = 0.0;
  for (const auto& t : trees) acc += t.leaf_for(x).positive_fraction;
  return trees.empty() ? 0.0 : acc / static_cast<double>(trees.size());
}

namespace {

inline double gini(double pos, double n) {
  if (n <= 0) return 0.0;
  const double p = pos / n;
  return 2.0 * p * (1.0 - p);
}

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double child_impurity = 0.0;  // n_l * gini_l + n_r * gini_r
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y, int max_features, Rng& rng,
              Eigen::VectorXd& importances)
      : x_(x), y_(y), max_features_(max_features), rng_(rng), importances_(importances) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<Eigen::Index> samples) {
    samples_ = std::move(samples);
    DecisionTree tree;
    struct Pending {
      std::size_t begin, end;
      int parent;
      bool is_left;
    };
    std::vector<Pending> stack{{0, samples_.size(), -1, false}};
    while (!stack.empty()) {
      const Pending p = stack.back();
      stack.pop_back();
      const int id = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      if (p.parent >= 0) {
        auto& parent = tree.nodes[static_cast<std::size_t>(p.parent)];
        (p.is_left ? parent.left : parent.right) = id;
      }
      const auto n = static_cast<double>(p.end - p.begin);
      double pos = 0;
      for (std::size_t i = p.begin; i < p.end; ++i) pos += y_(samples_[i]) == 1 ? 1.0 : 0.0;
      {
        auto& node = tree.nodes.back();
        node.n_samples = static_cast<int>(p.end - p.begin);
        node.positive_fraction = pos / n;
      }
      if (pos == 0.0 || pos == n) continue;  // pure

      const auto split = best_split(p.begin, p.end, pos);
      if (split.feature < 0) continue;  // nothing separable left

      importances_(split.feature) += n * gini(pos, n) - split.child_impurity;
      auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(p.begin),
                                samples_.begin() + static_cast<std::ptrdiff_t>(p.end),
                                [&](Eigen::Index s) { return x_(s, split.feature) <= split.threshold; });
      const auto m = static_cast<std::size_t>(mid - samples_.begin());
      auto& node = tree.nodes.back();
      node.feature = split.feature;
      node.threshold = split.threshold;
      // Right pushed first so the left subtree is emitted next (preorder).
      stack.push_back({m, p.end, id, false});
      stack.push_back({p.begin, m, id, true});
    }
    return tree;
  }

 private:
  SplitCandidate best_split(std::size_t begin, std::size_t end, double pos_total) {
    SplitCandidate best;
    const auto n = static_cast<double>(end - begin);
    // Zero-gain splits are accepted so impure nodes keep splitting to purity.
    double best_imp = std::numeric_limits<double>::infinity();
    int informative = 0;
    const std::size_t d = features_.size();
    for (std::size_t k = 0; k < d && informative < max_features_; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, d - 1);
      std::swap(features_[k], features_[pick(rng_)]);
      const int f = features_[k];

      scratch_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        scratch_.emplace_back(x_(samples_[i], f), y_(samples_[i]) == 1 ? 1 : 0);
      }
      const auto [lo, hi] = std::minmax_element(scratch_.begin(), scratch_.end());
      if (lo->first == hi->first) continue;  // constant here; does not count toward max_features
      ++informative;
      std::sort(scratch_.begin(), scratch_.end());
      double left_pos = 0;
      for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
        left_pos += scratch_[i].second;
        if (scratch_[i].first == scratch_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double imp = nl * gini(left_pos, nl) + nr * gini(pos_total - left_pos, nr);
        if (imp < best_imp) {
          best_imp = imp;
          best.feature = f;
          double thr = 0.5 * (scratch_[i].first + scratch_[i + 1].first);
          if (thr >= scratch_[i + 1].first) thr = scratch_[i].first;
          best.threshold = thr;
          best.child_impurity = imp;
        }
      }
    }
    return best;
  }

  const Eigen::Ref<const Eigen::MatrixXd>& x_;
  const Labels& y_;
  int max_features_;
  Rng& rng_;
  Eigen::VectorXd& importances_;
  std::vector<int> features_;
  std::vector<Eigen::Index> samples_;
  std::vector<std::pair<double, int>> scratch_;
};

}  // namespace

RandomForestModel train_random_forest(const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                                      const ForestParams& params, std::uint64_t seed) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "rows and labels differ");
  if ((y.array() == 1).count() == 0 || (y.array() == -1).count() == 0) {
    throw Error(ErrorCode::SingleClassTraining, "binary training needs both classes");
  }
  if (params.n_trees <= 0) throw Error(ErrorCode::InvalidSpec, "n_trees must be positive");

  RandomForestModel model;
  model.n_trees = params.n_trees;
  model.dim = x.cols();
  model.rng_seed = seed;
  model.max_features = params.max_features > 0
                           ? params.max_features
                           : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  model.feature_importances = Eigen::VectorXd::Zero(x.cols());

  const auto n = static_cast<std::size_t>(x.rows());
  for (int t = 0; t < params.n_trees; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    std::vector<Eigen::Index> samples(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<Eigen::Index> draw(0, x.rows() - 1);
      for (auto& s : samples) s = draw(rng);
    } else {
      std::iota(samples.begin(), samples.end(), Eigen::Index{0});
    }
    Eigen::VectorXd tree_imp = Eigen::VectorXd::Zero(x.cols());
    TreeBuilder builder(x, y, model.max_features, rng, tree_imp);
    model.trees.push_back(builder.build(std::move(samples)));
    const double total = tree_imp.sum();
    if (total > 0) model.feature_importances += tree_imp / total;
  }
  const double total = model.feature_importances.sum();
  if (total > 0) model.feature_importances /= total;
  return model;
}

}  // namespace cuprof
