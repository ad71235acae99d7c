#include "cuprof/isolation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

namespace {
constexpr double kEulerGamma = 0.5772156649015329;
}

double average_path_length(double n) {
  if (n <= 1.0) return 0.0;
  if (n <= 2.0) return 1.0;
  return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

double IsolationTree::path_length(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  std::size_t i = 0;
  double edges = 0.0;
  while (!nodes[i].is_external()) {
    i = static_cast<std::size_t>(x(nodes[i].feature) < nodes[i].threshold ? nodes[i].left : nodes[i].right);
    edges += 1.0;
  }
  return edges + average_path_length(nodes[i].size);
}

int IsolationTree::height() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_external()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double IsolationForestModel::mean_path_length(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "isolation forest expects " + std::to_string(dim) + " features, got " + std::to_string(x.size()));
  }
  double acc = 0.0;
  for (const auto& t : trees) acc += t.path_length(x);
  return acc / static_cast<double>(trees.size());
}

double IsolationForestModel::anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return std::exp2(-mean_path_length(x) / c_psi);
}

namespace {

IsolationTree grow_tree(const Eigen::Ref<const Eigen::MatrixXd>& x, std::vector<Eigen::Index> rows, int height_limit,
                        Rng& rng) {
  IsolationTree tree;
  struct Pending {
    std::size_t begin, end;
    int depth, parent;
    bool is_left;
  };
  std::vector<Pending> stack{{0, rows.size(), 0, -1, false}};
  std::vector<int> candidates;
  while (!stack.empty()) {
    const auto p = stack.back();
    stack.pop_back();
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.back().size = static_cast<int>(p.end - p.begin);
    if (p.parent >= 0) {
      auto& parent = tree.nodes[static_cast<std::size_t>(p.parent)];
      (p.is_left ? parent.left : parent.right) = id;
    }
    if (p.depth >= height_limit || p.end - p.begin <= 1) continue;

    // Split only on features that vary inside the node.
    candidates.clear();
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      const double first = x(rows[p.begin], f);
      for (std::size_t i = p.begin + 1; i < p.end; ++i) {
        if (x(rows[i], f) != first) {
          candidates.push_back(static_cast<int>(f));
          break;
        }
      }
    }
    if (candidates.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const int f = candidates[pick(rng)];
    double lo = x(rows[p.begin], f), hi = lo;
    for (std::size_t i = p.begin; i < p.end; ++i) {
      lo = std::min(lo, x(rows[i], f));
      hi = std::max(hi, x(rows[i], f));
    }
    std::uniform_real_distribution<double> cut(lo, hi);
    double thr = cut(rng);
    if (thr <= lo) thr = std::nextafter(lo, hi);  // keep both sides non-empty
    auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(p.begin),
                              rows.begin() + static_cast<std::ptrdiff_t>(p.end),
                              [&](Eigen::Index r) { return x(r, f) < thr; });
    const auto m = static_cast<std::size_t>(mid - rows.begin());
    tree.nodes.back().feature = f;
    tree.nodes.back().threshold = thr;
    stack.push_back({m, p.end, p.depth + 1, id, false});
    stack.push_back({p.begin, m, p.depth + 1, id, true});
  }
  return tree;
}

}  // namespace

IsolationForestModel train_isolation_forest(const Eigen::Ref<const Eigen::MatrixXd>& x, const IsolationParams& params,
                                            std::uint64_t seed, bool* clamped) {
  if (x.rows() < 2) throw Error(ErrorCode::EmptyInput, "isolation forest needs at least two rows");
  if (params.n_trees <= 0 || params.subsample < 2) {
    throw Error(ErrorCode::InvalidSpec, "n_trees must be positive and subsample >= 2");
  }
  IsolationForestModel model;
  model.n_trees = params.n_trees;
  model.dim = x.cols();
  model.rng_seed = seed;
  model.subsample = params.subsample;
  if (clamped) *clamped = false;
  if (model.subsample > x.rows()) {
    model.subsample = static_cast<int>(x.rows());
    if (clamped) *clamped = true;
  }
  model.c_psi = average_path_length(model.subsample);
  const int height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(model.subsample))));

  std::vector<Eigen::Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  for (int t = 0; t < params.n_trees; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    // Sample without replacement: partial Fisher-Yates.
    auto pool = all;
    for (int i = 0; i < model.subsample; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    }
    pool.resize(static_cast<std::size_t>(model.subsample));
    model.trees.push_back(grow_tree(x, std::move(pool), height_limit, rng));
  }
  return model;
}

}  // namespace cuprof
