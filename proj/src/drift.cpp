#include "cuprof/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"
#include "cuprof/timeseries.hpp"

namespace cuprof {

namespace {

constexpr std::pair<DriftLabel, const char*> kLabelNames[] = {
    {DriftLabel::NoDrift, "NoDrift"},         {DriftLabel::Sudden, "Sudden"},
    {DriftLabel::Gradual, "Gradual"},         {DriftLabel::Incremental, "Incremental"},
    {DriftLabel::Recurring, "Recurring"},     {DriftLabel::Unidentifiable, "Unidentifiable"},
};

double mean_of(const std::vector<double>& v, std::size_t b, std::size_t e) {
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(b), v.begin() + static_cast<std::ptrdiff_t>(e),
                         0.0) /
         static_cast<double>(e - b);
}

struct LineFit {
  double slope = 0.0;
  double r2 = 0.0;
  double t = 0.0;
};

LineFit fit_line(const std::vector<double>& y, std::size_t b, std::size_t e) {
  const auto n = static_cast<double>(e - b);
  const double mx = (n - 1.0) / 2.0, my = mean_of(y, b, e);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = b; i < e; ++i) {
    const double dx = static_cast<double>(i - b) - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit f;
  if (sxx == 0.0) return f;
  f.slope = sxy / sxx;
  const double ssr = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : 0.0;
  if (n > 2.0) {
    const double se = std::sqrt(ssr / (n - 2.0) / sxx);
    f.t = se > 0.0 ? f.slope / se : (f.slope == 0.0 ? 0.0 : std::copysign(HUGE_VAL, f.slope));
  }
  return f;
}

void split_recursive(const std::vector<double>& prefix, std::size_t b, std::size_t e, double min_shift,
                     std::size_t min_len, std::vector<std::pair<std::size_t, std::size_t>>& out) {
  std::size_t best = 0;
  double best_stat = -1.0, best_shift = 0.0;
  for (std::size_t k = b + min_len; k + min_len <= e; ++k) {
    const double n1 = static_cast<double>(k - b), n2 = static_cast<double>(e - k);
    const double m1 = (prefix[k] - prefix[b]) / n1, m2 = (prefix[e] - prefix[k]) / n2;
    const double stat = std::abs(m1 - m2) * std::sqrt(n1 * n2 / (n1 + n2));
    if (stat > best_stat) {
      best_stat = stat;
      best = k;
      best_shift = std::abs(m1 - m2);
    }
  }
  if (best_stat < 0.0 || best_shift < min_shift) {
    out.emplace_back(b, e);
    return;
  }
  split_recursive(prefix, b, best, min_shift, min_len, out);
  split_recursive(prefix, best, e, min_shift, min_len, out);
}

}  // namespace

const char* to_string(DriftLabel label) {
  for (const auto& [l, name] : kLabelNames) {
    if (l == label) return name;
  }
  return "Unidentifiable";
}

DriftLabel drift_label_from_string(const std::string& name) {
  for (const auto& [l, n] : kLabelNames) {
    if (name == n) return l;
  }
  throw Error(ErrorCode::ConfigError, "unknown drift label '" + name + "'");
}

std::string ClassificationCurve::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "hour,score,n_windows\n";
  for (std::size_t i = 0; i < score.size(); ++i) out << start_hour[i] << ',' << score[i] << ',' << n_windows[i] << '\n';
  return out.str();
}

ClassificationCurve drift_curve(const UserDataset& dataset, const CurveParams& params, std::uint64_t seed) {
  if (params.train_days < 1 || params.window_len_hours < 1 || params.step_hours < 1) {
    throw Error(ErrorCode::InvalidSpec, "curve spans must be positive");
  }
  if (is_binary(params.model)) throw Error(ErrorCode::InvalidSpec, "drift curves need a one-class model");
  const std::int64_t first_hour = dataset.first_day() * 24;
  const std::int64_t begin = first_hour + params.train_days * 24;
  const std::int64_t end = first_hour + static_cast<std::int64_t>(dataset.span_days()) * 24;
  if (dataset.empty() || begin + params.window_len_hours > end) {
    throw Error(ErrorCode::InsufficientSpan, dataset.user_id + " spans " + std::to_string(dataset.span_days()) +
                                                 " days, too short for training plus one slice");
  }
  if (dataset.size() < static_cast<std::size_t>(params.window.t)) {
    throw Error(ErrorCode::DatasetTooShort, dataset.user_id + " has fewer rows than one window");
  }

  const auto windows = slide_windows(dataset, params.window);
  auto in_training = [&](const FeatureWindow& w) { return dataset.study_day(w.end_minute_epoch) <= params.train_days; };
  const auto split = static_cast<std::size_t>(
      std::partition_point(windows.begin(), windows.end(), in_training) - windows.begin());
  if (split == 0) throw Error(ErrorCode::InsufficientSpan, dataset.user_id + " has no windows in the training span");

  const std::span<const FeatureWindow> train(windows.data(), split);
  const auto processes = fit_vocabulary(train, TokenField::Process);
  const auto domains = fit_vocabulary(train, TokenField::Domain);
  std::vector<FeatureVector> rows;
  rows.reserve(windows.size());
  for (const auto& w : windows) rows.push_back(tfidf_vectorize(w, processes, domains));
  const Eigen::MatrixXd all = to_dense(rows);
  const auto scaled = scale_features(all.topRows(static_cast<Eigen::Index>(split)),
                                     all.bottomRows(all.rows() - static_cast<Eigen::Index>(split)), params.scaling);
  const Model model = train_offline_oneclass(params.model, scaled.train, seed, params.training);

  // accepted_prefix[i] = accepted windows among the first i test windows.
  std::vector<std::size_t> accepted_prefix(windows.size() - split + 1, 0);
  for (Eigen::Index i = 0; i < scaled.applied.rows(); ++i) {
    const bool ok = predict_label(model, scaled.applied.row(i).transpose()) == 1;
    accepted_prefix[static_cast<std::size_t>(i) + 1] = accepted_prefix[static_cast<std::size_t>(i)] + (ok ? 1 : 0);
  }
  std::vector<std::int64_t> end_minutes;
  end_minutes.reserve(windows.size() - split);
  for (std::size_t i = split; i < windows.size(); ++i) end_minutes.push_back(windows[i].end_minute_epoch);

  ClassificationCurve c;
  c.window_len_hours = params.window_len_hours;
  c.step_hours = params.step_hours;
  for (std::int64_t s = begin; s + params.window_len_hours <= end; s += params.step_hours) {
    const auto lo = std::lower_bound(end_minutes.begin(), end_minutes.end(), s * 60) - end_minutes.begin();
    const auto hi = std::lower_bound(end_minutes.begin(), end_minutes.end(), (s + params.window_len_hours) * 60) -
                    end_minutes.begin();
    if (hi == lo) continue;
    const auto n = static_cast<std::size_t>(hi - lo);
    c.start_hour.push_back(s);
    c.score.push_back(static_cast<double>(accepted_prefix[static_cast<std::size_t>(hi)] -
                                          accepted_prefix[static_cast<std::size_t>(lo)]) /
                      static_cast<double>(n));
    c.n_windows.push_back(n);
  }
  if (c.score.empty()) throw Error(ErrorCode::InsufficientSpan, dataset.user_id + " has no windows after training");
  return c;
}

std::vector<std::pair<std::size_t, std::size_t>> segment_levels(const std::vector<double>& curve, double min_shift,
                                                                  std::size_t min_len) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (curve.empty()) return out;
  std::vector<double> prefix(curve.size() + 1, 0.0);
  for (std::size_t i = 0; i < curve.size(); ++i) prefix[i + 1] = prefix[i] + curve[i];
  split_recursive(prefix, 0, curve.size(), min_shift, std::max<std::size_t>(1, min_len), out);
  return out;
}

DriftResult categorize_drift(const ClassificationCurve& curve, const DriftThresholds& thr) {
  const auto& y = curve.score;
  const std::size_t n = y.size();
  if (n < thr.min_points) {
    throw Error(ErrorCode::CurveTooShort, "curve has " + std::to_string(n) + " points, need " +
                                              std::to_string(thr.min_points));
  }
  DriftResult r;
  auto& ev = r.evidence;
  ev["n_points"] = static_cast<double>(n);

  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double max_dev = 0.0;
  for (double v : y) max_dev = std::max(max_dev, std::abs(v - median));
  ev["median"] = median;
  ev["max_deviation"] = max_dev;

  r.segments = segment_levels(y, thr.min_shift, std::max<std::size_t>(3, n / 50));
  for (const auto& [b, e] : r.segments) r.levels.push_back(mean_of(y, b, e));
  ev["n_segments"] = static_cast<double>(r.segments.size());

  if (max_dev < thr.flat_tolerance) {
    r.label = DriftLabel::NoDrift;
    return r;
  }

  // Recurring: a drop by min_shift followed by a return near the earlier level.
  for (std::size_t i = 0; i < r.levels.size() && r.label != DriftLabel::Recurring; ++i) {
    for (std::size_t j = i + 1; j < r.levels.size() && r.label != DriftLabel::Recurring; ++j) {
      if (r.levels[j] > r.levels[i] - thr.min_shift) continue;
      for (std::size_t k = j + 1; k < r.levels.size(); ++k) {
        if (r.levels[k] >= r.levels[i] - thr.recovery) {
          ev["recurring_pre_level"] = r.levels[i];
          ev["recurring_low_level"] = r.levels[j];
          ev["recurring_post_level"] = r.levels[k];
          r.label = DriftLabel::Recurring;
          break;
        }
      }
    }
  }
  if (r.label == DriftLabel::Recurring) return r;

  const double hi = r.levels.front(), lo = r.levels.back();
  const double drop = hi - lo;
  const double window = curve.window_points();
  ev["drop"] = drop;

  bool monotone_down = r.levels.size() > 1;
  for (std::size_t i = 1; i < r.levels.size(); ++i) monotone_down = monotone_down && r.levels[i] < r.levels[i - 1];
  if (monotone_down && drop > 0.0) {
    std::size_t idx90 = n, idx10 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (y[i] <= hi - 0.9 * drop) {
        idx90 = i;
        break;
      }
    }
    if (idx90 < n) {
      for (std::size_t i = idx90; i-- > 0;) {
        if (y[i] >= hi - 0.1 * drop) {
          idx10 = i;
          break;
        }
      }
    }
    const double transition = static_cast<double>(idx90 - idx10);
    ev["transition_points"] = transition;
    if (transition <= thr.sudden_factor * window) {
      r.label = DriftLabel::Sudden;
      return r;
    }
  }

  const auto tail = std::min(n, static_cast<std::size_t>(std::ceil(thr.plateau_factor * window)));
  const auto tail_fit = fit_line(y, n - tail, n);
  const double tail_drift = std::abs(tail_fit.slope) * static_cast<double>(tail - 1);
  const double tail_mean = mean_of(y, n - tail, n);
  const double mid = 0.5 * (hi + lo);
  ev["tail_drift"] = tail_drift;
  ev["tail_mean"] = tail_mean;
  const bool low_plateau = drop >= thr.min_shift && tail_drift < thr.recovery && tail_mean < mid;

  double low_frac[3];
  for (int t = 0; t < 3; ++t) {
    const std::size_t b = n * static_cast<std::size_t>(t) / 3, e = n * static_cast<std::size_t>(t + 1) / 3;
    const auto below = std::count_if(y.begin() + static_cast<std::ptrdiff_t>(b),
                                     y.begin() + static_cast<std::ptrdiff_t>(e), [&](double v) { return v < mid; });
    low_frac[t] = e > b ? static_cast<double>(below) / static_cast<double>(e - b) : 0.0;
    ev["low_fraction_" + std::to_string(t + 1)] = low_frac[t];
  }
  if (low_plateau && low_frac[0] <= low_frac[1] && low_frac[1] <= low_frac[2] && low_frac[2] > low_frac[0]) {
    r.label = DriftLabel::Gradual;
    return r;
  }

  const auto fit = fit_line(y, 0, n);
  ev["slope"] = fit.slope;
  ev["r2"] = fit.r2;
  ev["t_stat"] = fit.t;
  const double crit = normal_quantile(1.0 - thr.alpha / 2.0);
  if (!low_plateau && fit.slope < 0.0 && -fit.t > crit && fit.r2 >= thr.min_r2) {
    r.label = DriftLabel::Incremental;
    return r;
  }
  r.label = DriftLabel::Unidentifiable;
  return r;
}

std::string DriftResult::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "cuprof.drift/1";
  j["label"] = to_string(label);
  j["levels"] = levels;
  auto segs = nlohmann::ordered_json::array();
  for (const auto& [b, e] : segments) segs.push_back({b, e});
  j["segments"] = segs;
  nlohmann::ordered_json e = nlohmann::ordered_json::object();
  for (const auto& [k, v] : evidence) e[k] = v;
  j["evidence"] = e;
  return j.dump(2);
}

namespace {

using DayRows = std::vector<std::vector<const ActivityMinute*>>;

DayRows rows_by_day(const UserDataset& d, int days) {
  DayRows out(static_cast<std::size_t>(days) + 1);
  for (const auto& m : d.minutes) {
    const int day = d.study_day(m.minute_epoch);
    if (day >= 1 && day <= days) out[static_cast<std::size_t>(day)].push_back(&m);
  }
  return out;
}

ActivityMinute retimed(const ActivityMinute& m, std::int64_t day_start) {
  ActivityMinute out = m;
  const auto mod = ((m.minute_epoch % kMinutesPerDay) + kMinutesPerDay) % kMinutesPerDay;
  out.minute_epoch = day_start + mod;
  return out;
}

std::uint32_t blend(std::uint32_t a, std::uint32_t b, double alpha) {
  return static_cast<std::uint32_t>(std::lround((1.0 - alpha) * a + alpha * b));
}

}  // namespace

DriftDataset synthesize_drift_dataset(DriftLabel kind, const UserDataset& a, const UserDataset& b,
                                      std::uint64_t seed) {
  constexpr int kMinDays = 21;
  constexpr int kRampStartDay = 7;  // incremental blending starts after the first week
  if (a.span_days() < kMinDays || b.span_days() < kMinDays) {
    throw Error(ErrorCode::SourceTooShort, "drift sources need at least " + std::to_string(kMinDays) + " days");
  }
  if (kind == DriftLabel::Unidentifiable) throw Error(ErrorCode::InvalidSpec, "cannot synthesize Unidentifiable");

  DriftDataset out;
  out.truth = kind;
  if (kind == DriftLabel::NoDrift) {
    out.data = a;
    out.mix.assign(static_cast<std::size_t>(a.span_days()), 0.0);
    return out;
  }

  const int days = std::min(a.span_days(), b.span_days());
  const int cut1 = static_cast<int>(std::lround(3.0 * days / 8.0));
  const int cut2 = static_cast<int>(std::lround(5.0 * days / 8.0));
  const auto a_days = rows_by_day(a, days), b_days = rows_by_day(b, days);
  auto rng = make_rng(seed, 0x647269);
  const double phase = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;

  out.data.user_id = a.user_id;
  out.mix.assign(static_cast<std::size_t>(days), 0.0);
  for (int d = 1; d <= days; ++d) {
    const std::int64_t day_start = (a.first_day() + d - 1) * kMinutesPerDay;
    double share = 0.0;
    switch (kind) {
      case DriftLabel::Sudden: share = d > days / 2 ? 1.0 : 0.0; break;
      case DriftLabel::Recurring: share = (d > cut1 && d <= cut2) ? 1.0 : 0.0; break;
      case DriftLabel::Gradual: {
        // Systematic sampling: day d comes from b with probability p_d, and
        // the running count of b days stays within one of the summed ramp.
        const double p = d <= cut1 ? 0.0 : d > cut2 ? 1.0 : static_cast<double>(d - cut1) / (cut2 - cut1 + 1);
        const double before = cumulative;
        cumulative += p;
        share = std::floor(cumulative + phase) > std::floor(before + phase) ? 1.0 : 0.0;
        break;
      }
      case DriftLabel::Incremental:
        share = std::clamp(static_cast<double>(d - kRampStartDay) / (days - kRampStartDay), 0.0, 1.0);
        break;
      default: break;
    }
    const auto& ar = a_days[static_cast<std::size_t>(d)];
    const auto& br = b_days[static_cast<std::size_t>(d)];
    if (kind != DriftLabel::Incremental) {
      const auto& src = share > 0.5 ? br : ar;
      for (const auto* m : src) out.data.minutes.push_back(retimed(*m, day_start));
    } else {
      const auto n_sub = br.empty() ? 0 : static_cast<std::size_t>(std::lround(share * static_cast<double>(ar.size())));
      for (std::size_t i = 0; i < ar.size(); ++i) {
        ActivityMinute m = *ar[i];
        if (i < n_sub) {
          const auto& s = *br[i % br.size()];
          m.processes = s.processes;
          m.domains = s.domains;
          m.clicks = blend(m.clicks, s.clicks, share);
          m.keystrokes = blend(m.keystrokes, s.keystrokes, share);
          m.background = m.clicks == 0 && m.keystrokes == 0 && !m.domains.empty();
        }
        out.data.minutes.push_back(std::move(m));
      }
    }
    out.mix[static_cast<std::size_t>(d - 1)] = share;
  }
  return out;
}

}  // namespace cuprof
