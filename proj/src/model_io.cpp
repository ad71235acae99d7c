#include "cuprof/model_io.hpp"

#include <json.hpp>

#include "cuprof/error.hpp"

namespace cuprof {

using json = nlohmann::ordered_json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const LinearModel& m) {
  return {{"weights", vec_to_json(m.weights)}, {"bias", m.bias},  {"lr", m.lr},
          {"l2", m.l2},                       {"epochs_seen", m.epochs_seen}};
}

json to_json(const OneClassLinearModel& m) {
  return {{"weights", vec_to_json(m.weights)}, {"rho", m.rho}, {"nu", m.nu}, {"lr", m.lr}};
}

json to_json(const RandomForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json f = json::array(), thr = json::array(), l = json::array(), r = json::array(), p = json::array(),
         n = json::array();
    for (const auto& node : t.nodes) {
      f.push_back(node.feature);
      thr.push_back(node.threshold);
      l.push_back(node.left);
      r.push_back(node.right);
      p.push_back(node.positive_fraction);
      n.push_back(node.n_samples);
    }
    trees.push_back({{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r}, {"positive_fraction", p},
                     {"n_samples", n}});
  }
  return {{"n_trees", m.n_trees},
          {"max_features", m.max_features},
          {"dim", m.dim},
          {"rng_seed", m.rng_seed},
          {"feature_importances", vec_to_json(m.feature_importances)},
          {"trees", trees}};
}

json to_json(const IsolationForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json f = json::array(), thr = json::array(), l = json::array(), r = json::array(), s = json::array();
    for (const auto& node : t.nodes) {
      f.push_back(node.feature);
      thr.push_back(node.threshold);
      l.push_back(node.left);
      r.push_back(node.right);
      s.push_back(node.size);
    }
    trees.push_back({{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r}, {"size", s}});
  }
  return {{"n_trees", m.n_trees}, {"subsample", m.subsample}, {"c_psi", m.c_psi},
          {"dim", m.dim},         {"rng_seed", m.rng_seed},   {"trees", trees}};
}

json to_json(const HalfSpaceTreesModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json id = json::array(), f = json::array(), s = json::array(), ref = json::array(), lat = json::array();
    for (const auto& [k, node] : t.nodes) {
      id.push_back(k);
      f.push_back(node.feature);
      s.push_back(node.split);
      ref.push_back(node.reference_mass);
      lat.push_back(node.latest_mass);
    }
    trees.push_back({{"seed", t.seed},
                     {"range_lo", vec_to_json(t.range_lo)},
                     {"range_hi", vec_to_json(t.range_hi)},
                     {"id", id},
                     {"feature", f},
                     {"split", s},
                     {"reference_mass", ref},
                     {"latest_mass", lat}});
  }
  return {{"n_trees", m.n_trees},
          {"depth", m.depth},
          {"window_size", m.window_size},
          {"dim", m.dim},
          {"updates_seen", m.updates_seen},
          {"windows_completed", m.windows_completed},
          {"threshold", m.threshold},
          {"trees", trees}};
}

template <class T>
std::vector<T> arr(const json& t, const char* key) {
  return t.at(key).get<std::vector<T>>();
}

Model from_json(ModelKind kind, const json& p) {
  switch (kind) {
    case ModelKind::SgdHinge:
    case ModelKind::Perceptron: {
      LinearModel m;
      m.loss = kind == ModelKind::SgdHinge ? LinearLoss::Hinge : LinearLoss::Perceptron;
      m.weights = vec_from_json(p.at("weights"));
      m.bias = p.at("bias").get<double>();
      m.lr = p.at("lr").get<double>();
      m.l2 = p.at("l2").get<double>();
      m.epochs_seen = p.at("epochs_seen").get<long>();
      return m;
    }
    case ModelKind::OneClassLinear: {
      OneClassLinearModel m;
      m.weights = vec_from_json(p.at("weights"));
      m.rho = p.at("rho").get<double>();
      m.nu = p.at("nu").get<double>();
      m.lr = p.at("lr").get<double>();
      return m;
    }
    case ModelKind::RandomForest: {
      RandomForestModel m;
      m.n_trees = p.at("n_trees").get<int>();
      m.max_features = p.at("max_features").get<int>();
      m.dim = p.at("dim").get<Eigen::Index>();
      m.rng_seed = p.at("rng_seed").get<std::uint64_t>();
      m.feature_importances = vec_from_json(p.at("feature_importances"));
      for (const auto& t : p.at("trees")) {
        const auto f = arr<int>(t, "feature"), l = arr<int>(t, "left"), r = arr<int>(t, "right"),
                   n = arr<int>(t, "n_samples");
        const auto thr = arr<double>(t, "threshold"), pf = arr<double>(t, "positive_fraction");
        DecisionTree tree;
        for (std::size_t i = 0; i < f.size(); ++i) tree.nodes.push_back({f[i], thr.at(i), l.at(i), r.at(i), pf.at(i), n.at(i)});
        m.trees.push_back(std::move(tree));
      }
      return m;
    }
    case ModelKind::IsolationForest: {
      IsolationForestModel m;
      m.n_trees = p.at("n_trees").get<int>();
      m.subsample = p.at("subsample").get<int>();
      m.c_psi = p.at("c_psi").get<double>();
      m.dim = p.at("dim").get<Eigen::Index>();
      m.rng_seed = p.at("rng_seed").get<std::uint64_t>();
      for (const auto& t : p.at("trees")) {
        const auto f = arr<int>(t, "feature"), l = arr<int>(t, "left"), r = arr<int>(t, "right"),
                   s = arr<int>(t, "size");
        const auto thr = arr<double>(t, "threshold");
        IsolationTree tree;
        for (std::size_t i = 0; i < f.size(); ++i) tree.nodes.push_back({f[i], thr.at(i), l.at(i), r.at(i), s.at(i)});
        m.trees.push_back(std::move(tree));
      }
      return m;
    }
    case ModelKind::HalfSpaceTrees: {
      HalfSpaceTreesModel m;
      m.n_trees = p.at("n_trees").get<int>();
      m.depth = p.at("depth").get<int>();
      m.window_size = p.at("window_size").get<int>();
      m.dim = p.at("dim").get<Eigen::Index>();
      m.updates_seen = p.at("updates_seen").get<long>();
      m.windows_completed = p.at("windows_completed").get<long>();
      m.threshold = p.at("threshold").get<double>();
      for (const auto& t : p.at("trees")) {
        HstTree tree;
        tree.seed = t.at("seed").get<std::uint64_t>();
        tree.range_lo = vec_from_json(t.at("range_lo"));
        tree.range_hi = vec_from_json(t.at("range_hi"));
        const auto id = arr<std::uint32_t>(t, "id");
        const auto f = arr<int>(t, "feature");
        const auto s = arr<double>(t, "split"), ref = arr<double>(t, "reference_mass"),
                   lat = arr<double>(t, "latest_mass");
        for (std::size_t i = 0; i < id.size(); ++i) tree.nodes[id[i]] = {f.at(i), s.at(i), ref.at(i), lat.at(i)};
        m.trees.push_back(std::move(tree));
      }
      return m;
    }
  }
  throw Error(ErrorCode::FormatError, "unhandled model kind");
}

}  // namespace

std::string model_to_json(const Model& model) {
  json j;
  j["schema"] = kModelSchema;
  j["kind"] = to_string(kind_of(model));
  j["params"] = std::visit([](const auto& m) { return to_json(m); }, model);
  return j.dump();
}

Model model_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    if (j.at("schema").get<std::string>() != kModelSchema) {
      throw Error(ErrorCode::FormatError, "unsupported model schema " + j.at("schema").dump());
    }
    return from_json(model_kind_from_string(j.at("kind").get<std::string>()), j.at("params"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("model JSON: ") + e.what());
  }
}

}  // namespace cuprof
