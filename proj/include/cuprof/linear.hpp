#pragma once

// Linear binary classifiers (hinge-loss SGD, perceptron) and the linear
// one-class model trained by stochastic subgradient descent.

#include <cstdint>

#include <Eigen/Dense>

namespace cuprof {

using Labels = Eigen::VectorXi;  // +1 / -1

enum class LinearLoss { Hinge, Perceptron };
const char* to_string(LinearLoss loss);

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  LinearLoss loss = LinearLoss::Hinge;
  double lr = 1e-3;
  double l2 = 1e-4;
  long epochs_seen = 0;

  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct LinearParams {
  double lr = 1e-3;
  double l2 = 1e-4;
  int epochs = 20;

  static LinearParams hinge_defaults() { return {}; }
  static LinearParams perceptron_defaults() { return {1.0, 0.0, 20}; }
};

/// Fixed epochs over a freshly shuffled order each epoch.
LinearModel train_linear(const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y, LinearLoss loss,
                         const LinearParams& params, std::uint64_t seed);

/// One online step. Hinge: subgradient step every call. Perceptron: update on mistakes only.
void update_online(LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y);

struct OneClassLinearModel {
  Eigen::VectorXd weights;
  double rho = 0.0;
  double nu = 0.1;
  double lr = 1e-3;

  /// w.x - rho; non-negative means "target".
  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct OneClassParams {
  double nu = 0.1;
  double lr = 1e-3;
  int epochs = 20;
};

/// Minimizes 0.5|w|^2 + (1/nu) mean(max(0, rho - w.x)) - rho by stochastic subgradient steps.
OneClassLinearModel train_oneclass_linear(const Eigen::Ref<const Eigen::MatrixXd>& x, const OneClassParams& params,
                                          std::uint64_t seed);

}  // namespace cuprof
