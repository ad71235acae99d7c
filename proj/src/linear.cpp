#include "cuprof/linear.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

const char* to_string(LinearLoss loss) { return loss == LinearLoss::Hinge ? "hinge" : "perceptron"; }

double LinearModel::decision(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "linear model expects " + std::to_string(weights.size()) +
                                                  " features, got " + std::to_string(x.size()));
  }
  return weights.dot(x) + bias;
}

void update_online(LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y) {
  if (y != 1 && y != -1) throw Error(ErrorCode::MissingLabel, "binary update needs a +1/-1 label");
  const double decision = model.decision(x);
  const double margin = y * decision;
  if (model.loss == LinearLoss::Perceptron) {
    // Mistake-driven: the predicted label is +1 iff decision >= 0.
    if ((decision >= 0.0 ? 1 : -1) != y) {
      model.weights += model.lr * y * x;
      model.bias += model.lr * y;
    }
    return;
  }
  model.weights *= 1.0 - model.lr * model.l2;
  if (margin < 1.0) {
    model.weights += model.lr * y * x;
    model.bias += model.lr * y;
  }
}

LinearModel train_linear(const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y, LinearLoss loss,
                         const LinearParams& params, std::uint64_t seed) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "rows and labels differ");
  if ((y.array() == 1).count() == 0 || (y.array() == -1).count() == 0) {
    throw Error(ErrorCode::SingleClassTraining, "binary training needs both classes");
  }
  LinearModel model;
  model.weights = Eigen::VectorXd::Zero(x.cols());
  model.loss = loss;
  model.lr = params.lr;
  model.l2 = params.l2;

  auto rng = make_rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int e = 0; e < params.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto i : order) update_online(model, x.row(i).transpose(), y(i));
    ++model.epochs_seen;
  }
  return model;
}

double OneClassLinearModel::decision(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one-class model expects " + std::to_string(weights.size()) +
                                                  " features, got " + std::to_string(x.size()));
  }
  return weights.dot(x) - rho;
}

OneClassLinearModel train_oneclass_linear(const Eigen::Ref<const Eigen::MatrixXd>& x, const OneClassParams& params,
                                          std::uint64_t seed) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "one-class training set is empty");
  if (!(params.nu > 0.0 && params.nu <= 1.0)) throw Error(ErrorCode::InvalidSpec, "nu must lie in (0, 1]");
  OneClassLinearModel m;
  m.weights = Eigen::VectorXd::Zero(x.cols());
  m.nu = params.nu;
  m.lr = params.lr;

  auto rng = make_rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double inv_nu = 1.0 / params.nu;
  for (int e = 0; e < params.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto i : order) {
      const auto xi = x.row(i).transpose();
      const bool violated = m.weights.dot(xi) < m.rho;
      m.weights *= 1.0 - params.lr;
      if (violated) {
        m.weights += params.lr * inv_nu * xi;
        m.rho -= params.lr * (inv_nu - 1.0);
      } else {
        m.rho += params.lr;
      }
    }
  }
  return m;
}

}  // namespace cuprof
