#include "cuprof/halfspace.hpp"

#include <algorithm>
#include <cmath>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

namespace {

struct RangeOverride {
  int feature;
  double lo, hi;
};

HstNode make_node(const HstTree& tree, std::uint32_t id, Eigen::Index dim, const std::vector<RangeOverride>& ov) {
  HstNode node;
  node.feature = static_cast<int>(mix64(tree.seed ^ (static_cast<std::uint64_t>(id) * 0x2545F4914F6CDD1DULL)) %
                                  static_cast<std::uint64_t>(dim));
  double lo = tree.range_lo(node.feature), hi = tree.range_hi(node.feature);
  for (const auto& o : ov) {
    if (o.feature == node.feature) {
      lo = o.lo;
      hi = o.hi;
    }
  }
  node.split = 0.5 * (lo + hi);
  return node;
}

void narrow(std::vector<RangeOverride>& ov, const HstTree& tree, const HstNode& node, bool left) {
  double lo = tree.range_lo(node.feature), hi = tree.range_hi(node.feature);
  auto it = std::find_if(ov.begin(), ov.end(), [&](const auto& o) { return o.feature == node.feature; });
  if (it != ov.end()) {
    lo = it->lo;
    hi = it->hi;
  } else {
    ov.push_back({node.feature, lo, hi});
    it = ov.end() - 1;
  }
  if (left) it->hi = node.split;
  else it->lo = node.split;
}

}  // namespace

HalfSpaceTreesModel make_half_space_trees(Eigen::Index dim, const HalfSpaceParams& params, std::uint64_t seed) {
  if (dim <= 0 || params.n_trees <= 0 || params.depth <= 0 || params.window_size <= 0 || params.depth > 30) {
    throw Error(ErrorCode::InvalidSpec, "half-space trees need positive dim/n_trees/window and depth in 1..30");
  }
  HalfSpaceTreesModel m;
  m.n_trees = params.n_trees;
  m.depth = params.depth;
  m.window_size = params.window_size;
  m.dim = dim;
  for (int t = 0; t < params.n_trees; ++t) {
    HstTree tree;
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    tree.seed = rng();
    tree.range_lo.resize(dim);
    tree.range_hi.resize(dim);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Eigen::Index q = 0; q < dim; ++q) {
      const double s = unit(rng);
      const double w = 2.0 * std::max(s, 1.0 - s);
      tree.range_lo(q) = s - w;
      tree.range_hi(q) = s + w;
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

double HalfSpaceTreesModel::anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "half-space trees expect " + std::to_string(dim) + " features, got " + std::to_string(x.size()));
  }
  double mass = 0.0;
  for (const auto& tree : trees) {
    std::uint32_t id = 1;
    for (int d = 0; d <= depth; ++d) {
      const auto it = tree.nodes.find(id);
      if (it == tree.nodes.end()) break;
      const auto& node = it->second;
      mass += node.reference_mass * std::ldexp(1.0, d);
      if (node.reference_mass < size_limit() || d == depth) break;
      id = 2 * id + (x(node.feature) < node.split ? 0u : 1u);
    }
  }
  const double max_mass = static_cast<double>(n_trees) * window_size * (std::ldexp(1.0, depth + 1) - 1.0);
  return 1.0 - mass / max_mass;
}

void HalfSpaceTreesModel::update(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "half-space trees expect " + std::to_string(dim) + " features, got " + std::to_string(x.size()));
  }
  std::vector<RangeOverride> ov;
  for (auto& tree : trees) {
    ov.clear();
    std::uint32_t id = 1;
    for (int d = 0; d <= depth; ++d) {
      auto it = tree.nodes.find(id);
      if (it == tree.nodes.end()) it = tree.nodes.emplace(id, make_node(tree, id, dim, ov)).first;
      auto& node = it->second;
      node.latest_mass += 1.0;
      if (d == depth) break;
      const bool left = x(node.feature) < node.split;
      narrow(ov, tree, node, left);
      id = 2 * id + (left ? 0u : 1u);
    }
  }
  ++updates_seen;
  if (updates_seen % window_size == 0) {
    for (auto& tree : trees) {
      for (auto it = tree.nodes.begin(); it != tree.nodes.end();) {
        it->second.reference_mass = it->second.latest_mass;
        it->second.latest_mass = 0.0;
        // Empty nodes are re-derivable, drop them to bound memory.
        if (it->second.reference_mass == 0.0) it = tree.nodes.erase(it);
        else ++it;
      }
    }
    ++windows_completed;
  }
}

HalfSpaceTreesModel train_half_space_trees(const Eigen::Ref<const Eigen::MatrixXd>& x, const HalfSpaceParams& params,
                                           std::uint64_t seed, double contamination) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "half-space trees need training rows");
  auto m = make_half_space_trees(x.cols(), params, seed);
  for (Eigen::Index i = 0; i < x.rows(); ++i) m.update(x.row(i).transpose());
  std::vector<double> scores(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) scores[static_cast<std::size_t>(i)] = m.anomaly_score(x.row(i).transpose());
  std::sort(scores.begin(), scores.end());
  const auto k = static_cast<std::size_t>(std::floor((1.0 - contamination) * static_cast<double>(scores.size() - 1)));
  m.threshold = scores[std::min(k, scores.size() - 1)];
  return m;
}

}  // namespace cuprof
