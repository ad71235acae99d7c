#include "cuprof/importance.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "cuprof/error.hpp"
#include "cuprof/protocols.hpp"

namespace cuprof {

bool is_domain_feature(const std::string& name) { return name.rfind("dom:", 0) == 0; }

namespace {

UserDataset rows_in_days(const UserDataset& d, int first, int last) {
  UserDataset out{d.user_id, {}};
  for (const auto& m : d.minutes) {
    const int day = d.study_day(m.minute_epoch);
    if (day >= first && day <= last) out.minutes.push_back(m);
  }
  return out;
}

std::vector<FeatureWindow> windows_or_empty(const UserDataset& d, const WindowSpec& spec) {
  if (d.size() < static_cast<std::size_t>(spec.t)) return {};
  return slide_windows(d, spec);
}

}  // namespace

ImportanceReport feature_importance_report(std::span<const UserDataset> datasets, const ImportanceOptions& options,
                                           std::uint64_t seed) {
  if (datasets.size() < 2) throw Error(ErrorCode::TooFewNegativeUsers, "importance needs at least two users");
  int max_days = 0;
  for (const auto& d : datasets) max_days = std::max(max_days, d.span_days());
  const int n_weeks = options.weekly ? (max_days + 6) / 7 : 1;

  ImportanceReport report;
  for (std::size_t u = 0; u < datasets.size(); ++u) {
    std::vector<std::string> order;
    std::map<std::string, double> sum;
    int used = 0;
    for (int w = 0; w < n_weeks; ++w) {
      const int first = options.weekly ? 7 * w + 1 : 1;
      const int last = options.weekly ? 7 * w + 7 : max_days;
      WindowTask task;
      std::vector<int> labels;
      std::size_t n_pos = 0, n_neg = 0;
      for (std::size_t v = 0; v < datasets.size(); ++v) {
        auto ws = windows_or_empty(rows_in_days(datasets[v], first, last), options.window);
        const int y = v == u ? 1 : -1;
        (v == u ? n_pos : n_neg) += ws.size();
        labels.insert(labels.end(), ws.size(), y);
        task.train.insert(task.train.end(), std::make_move_iterator(ws.begin()), std::make_move_iterator(ws.end()));
      }
      const auto min_w = static_cast<std::size_t>(std::max(1, options.min_windows));
      if (n_pos < min_w || n_neg < min_w) {
        report.warnings.push_back(std::string(to_string(ErrorCode::WeekTooSparse)) + ": " + datasets[u].user_id +
                                  " week " + std::to_string(w + 1) + " skipped");
        continue;
      }
      task.train_labels = Labels::Map(labels.data(), static_cast<Eigen::Index>(labels.size()));
      const auto dense = featurize_task(task, options.scaling);
      const auto rf = train_random_forest(dense.x_train, dense.y_train, options.forest,
                                          seed ^ (0x9E3779B97F4A7C15ULL * (u * 1024 + static_cast<std::size_t>(w) + 1)));
      const auto names = feature_names(dense.processes, dense.domains);
      for (std::size_t f = 0; f < names.size(); ++f) {
        auto [it, inserted] = sum.emplace(names[f], 0.0);
        if (inserted) order.push_back(names[f]);
        it->second += rf.feature_importances(static_cast<Eigen::Index>(f));
      }
      ++used;
    }
    UserTopFeatures top{datasets[u].user_id, {}, used};
    if (used > 0) {
      std::vector<std::size_t> idx(order.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sum[order[a]] > sum[order[b]]; });
      const auto k = std::min(idx.size(), static_cast<std::size_t>(std::max(0, options.top_k)));
      for (std::size_t i = 0; i < k; ++i) top.top.emplace_back(order[idx[i]], sum[order[idx[i]]] / used);
    }
    report.users.push_back(std::move(top));
  }
  return report;
}

}  // namespace cuprof
