#include "cuprof/classifiers.hpp"

#include "cuprof/error.hpp"

namespace cuprof {

namespace {
template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::SgdHinge: return "sgd_hinge";
    case ModelKind::Perceptron: return "perceptron";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::IsolationForest: return "isolation_forest";
    case ModelKind::OneClassLinear: return "oneclass_linear";
    case ModelKind::HalfSpaceTrees: return "half_space_trees";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::SgdHinge, ModelKind::Perceptron, ModelKind::RandomForest, ModelKind::IsolationForest,
                 ModelKind::OneClassLinear, ModelKind::HalfSpaceTrees}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorCode::ConfigError, "unknown model kind '" + name + "'");
}

ModelKind kind_of(const Model& model) {
  return std::visit(Overloaded{
                        [](const LinearModel& m) {
                          return m.loss == LinearLoss::Hinge ? ModelKind::SgdHinge : ModelKind::Perceptron;
                        },
                        [](const RandomForestModel&) { return ModelKind::RandomForest; },
                        [](const IsolationForestModel&) { return ModelKind::IsolationForest; },
                        [](const OneClassLinearModel&) { return ModelKind::OneClassLinear; },
                        [](const HalfSpaceTreesModel&) { return ModelKind::HalfSpaceTrees; },
                    },
                    model);
}

bool is_binary(ModelKind kind) {
  return kind == ModelKind::SgdHinge || kind == ModelKind::Perceptron || kind == ModelKind::RandomForest;
}

bool is_online_capable(ModelKind kind) {
  return kind == ModelKind::SgdHinge || kind == ModelKind::Perceptron || kind == ModelKind::HalfSpaceTrees;
}

Model train_offline_binary(ModelKind kind, const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                           std::uint64_t seed, const TrainingOptions& options) {
  switch (kind) {
    case ModelKind::SgdHinge: return train_linear(x, y, LinearLoss::Hinge, options.hinge, seed);
    case ModelKind::Perceptron: return train_linear(x, y, LinearLoss::Perceptron, options.perceptron, seed);
    case ModelKind::RandomForest: return train_random_forest(x, y, options.forest, seed);
    default: break;
  }
  throw Error(ErrorCode::InvalidSpec, std::string(to_string(kind)) + " is not a binary model");
}

Model train_offline_oneclass(ModelKind kind, const Eigen::Ref<const Eigen::MatrixXd>& x, std::uint64_t seed,
                             const TrainingOptions& options) {
  switch (kind) {
    case ModelKind::IsolationForest: return train_isolation_forest(x, options.isolation, seed);
    case ModelKind::OneClassLinear: return train_oneclass_linear(x, options.oneclass, seed);
    case ModelKind::HalfSpaceTrees:
      return train_half_space_trees(x, options.half_space, seed, options.half_space_contamination);
    default: break;
  }
  throw Error(ErrorCode::InvalidSpec, std::string(to_string(kind)) + " is not a one-class model");
}

double score(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return std::visit(Overloaded{
                        [&](const LinearModel& m) { return m.decision(x); },
                        [&](const RandomForestModel& m) { return m.predict_proba(x); },
                        [&](const IsolationForestModel& m) { return m.anomaly_score(x); },
                        [&](const OneClassLinearModel& m) { return m.decision(x); },
                        [&](const HalfSpaceTreesModel& m) { return m.anomaly_score(x); },
                    },
                    model);
}

int predict_label(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& x, const Thresholds& thr) {
  const double s = score(model, x);
  const bool positive = std::visit(Overloaded{
                                       [&](const LinearModel&) { return s >= thr.linear; },
                                       [&](const RandomForestModel&) { return s >= thr.forest; },
                                       [&](const IsolationForestModel&) { return s <= thr.isolation; },
                                       [&](const OneClassLinearModel&) { return s >= thr.oneclass; },
                                       [&](const HalfSpaceTreesModel& m) {
                                         return s <= thr.half_space.value_or(m.threshold);
                                       },
                                   },
                                   model);
  return positive ? 1 : -1;
}

void update_online(Model& model, const Eigen::Ref<const Eigen::VectorXd>& x, std::optional<int> y) {
  std::visit(Overloaded{
                 [&](LinearModel& m) {
                   if (!y) throw Error(ErrorCode::MissingLabel, "linear online update needs a label");
                   update_online(m, x, *y);
                 },
                 [&](HalfSpaceTreesModel& m) { m.update(x); },
                 [&](auto& m) {
                   throw Error(ErrorCode::InvalidSpec,
                               std::string(to_string(kind_of(Model(m)))) + " does not support online updates");
                 },
             },
             model);
}

}  // namespace cuprof
