#pragma once

// Uniform facade over the model families: training entry points, scoring
// with documented polarity, labelling and online updates.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "cuprof/forest.hpp"
#include "cuprof/halfspace.hpp"
#include "cuprof/isolation.hpp"
#include "cuprof/linear.hpp"

namespace cuprof {

using Model = std::variant<LinearModel, RandomForestModel, IsolationForestModel, OneClassLinearModel,
                           HalfSpaceTreesModel>;

enum class ModelKind { SgdHinge, Perceptron, RandomForest, IsolationForest, OneClassLinear, HalfSpaceTrees };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
ModelKind kind_of(const Model& model);
bool is_binary(ModelKind kind);
bool is_online_capable(ModelKind kind);

struct TrainingOptions {
  LinearParams hinge = LinearParams::hinge_defaults();
  LinearParams perceptron = LinearParams::perceptron_defaults();
  ForestParams forest;
  IsolationParams isolation;
  OneClassParams oneclass;
  HalfSpaceParams half_space;
  double half_space_contamination = 0.1;
};

/// SgdHinge, Perceptron or RandomForest on +/-1 labels.
Model train_offline_binary(ModelKind kind, const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                           std::uint64_t seed, const TrainingOptions& options = {});

/// IsolationForest, OneClassLinear or HalfSpaceTrees on target rows only.
Model train_offline_oneclass(ModelKind kind, const Eigen::Ref<const Eigen::MatrixXd>& x, std::uint64_t seed,
                             const TrainingOptions& options = {});

/// Raw model score.
///  - linear binary: w.x + b, higher = more positive class
///  - random forest: positive vote fraction in [0, 1]
///  - one-class linear: w.x - rho, higher = more normal
///  - isolation forest and half-space trees: anomaly score in [0, 1], higher = more anomalous
double score(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& x);

struct Thresholds {
  double linear = 0.0;
  double forest = 0.5;
  double isolation = 0.5;
  double oneclass = 0.0;
  std::optional<double> half_space;  // defaults to the model's calibrated threshold
};

/// +1 for "target user / positive", -1 otherwise.
int predict_label(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& x, const Thresholds& thr = {});

/// Online step. Linear models need a label (MissingLabel otherwise);
/// half-space trees ignore it. Other kinds are not online-capable.
void update_online(Model& model, const Eigen::Ref<const Eigen::VectorXd>& x, std::optional<int> y);

}  // namespace cuprof
