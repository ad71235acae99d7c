#include "cuprof/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <json.hpp>

#include "cuprof/error.hpp"

namespace cuprof {

Metrics compute_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t /*tn*/, std::uint64_t fn) {
  Metrics m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0) m.fscore = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

void EvalReport::record(int predicted, int actual) {
  if (actual > 0) (predicted > 0 ? tp : fn) += 1;
  else (predicted > 0 ? fp : tn) += 1;
}

void EvalReport::finalize() {
  const auto m = compute_metrics(tp, fp, tn, fn);
  precision = m.precision;
  recall = m.recall;
  fscore = m.fscore;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["tp"] = tp;
  j["fp"] = fp;
  j["tn"] = tn;
  j["fn"] = fn;
  j["precision"] = precision;
  j["recall"] = recall;
  j["fscore"] = fscore;
  j["runs"] = runs;
  if (ci95) j["ci95"] = {ci95->first, ci95->second};
  if (per_step_curve) j["per_step_curve"] = *per_step_curve;
  return j.dump();
}

namespace {
void check_rows(const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature rows and labels differ in length");
  }
}
}  // namespace

EvalReport evaluate_offline(const Model& model, const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                            const Thresholds& thr) {
  check_rows(x, y);
  EvalReport r;
  for (Eigen::Index i = 0; i < x.rows(); ++i) r.record(predict_label(model, x.row(i).transpose(), thr), y(i));
  r.finalize();
  return r;
}

EvalReport evaluate_prequential(const Model& warm_start, const Eigen::Ref<const Eigen::MatrixXd>& x, const Labels& y,
                                const PrequentialOptions& options) {
  check_rows(x, y);
  const auto kind = kind_of(warm_start);
  if (!is_online_capable(kind)) {
    throw Error(ErrorCode::InvalidSpec, std::string(to_string(kind)) + " cannot be evaluated prequentially");
  }
  if (options.mode == CurveMode::Sliding && options.sliding_window <= 0) {
    throw Error(ErrorCode::InvalidSpec, "sliding window must be positive");
  }
  Model model = warm_start;
  EvalReport r;
  std::deque<std::pair<int, int>> recent;
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd xi = x.row(i).transpose();
    const int predicted = predict_label(model, xi, options.thresholds);
    r.record(predicted, y(i));
    if (options.mode == CurveMode::Cumulative) {
      const auto m = compute_metrics(r.tp, r.fp, r.tn, r.fn);
      curve.push_back(m.fscore);
    } else {
      recent.emplace_back(predicted, y(i));
      if (static_cast<int>(recent.size()) > options.sliding_window) recent.pop_front();
      EvalReport w;
      for (const auto& [p, a] : recent) w.record(p, a);
      w.finalize();
      curve.push_back(w.fscore);
    }
    if (kind == ModelKind::HalfSpaceTrees) {
      if (!options.oneclass_update_target_only || y(i) > 0) update_online(model, xi, std::nullopt);
    } else {
      update_online(model, xi, y(i));
    }
  }
  r.finalize();
  r.per_step_curve = std::move(curve);
  return r;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::DimensionMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with average ranks for ties.
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] > 0) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::InvalidSpec, "ROC AUC needs both classes");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.n;
  if (a.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.sd = std::sqrt(ss / (a.n - 1));
    const double half = 1.96 * a.sd / std::sqrt(static_cast<double>(a.n));
    a.ci95 = std::make_pair(a.mean - half, a.mean + half);
  }
  return a;
}

}  // namespace cuprof
