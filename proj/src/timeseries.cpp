#include "cuprof/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "cuprof/error.hpp"
#include "cuprof/rng.hpp"

namespace cuprof {

Eigen::VectorXd HourlySeries::as_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

HourlySeries build_hourly_series(const UserDataset& dataset, bool include_background) {
  HourlySeries s;
  s.include_background = include_background;
  if (dataset.empty()) return s;
  s.start_epoch_hour = dataset.first_day() * 24;
  s.values.assign(static_cast<std::size_t>(24 * dataset.span_days()), 0);
  for (const auto& m : dataset.minutes) {
    if (!include_background && m.background) continue;
    const auto h = m.minute_epoch / 60 - s.start_epoch_hour;
    ++s.values[static_cast<std::size_t>(h)];
  }
  return s;
}

Eigen::VectorXd znormalize(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() == 0) throw Error(ErrorCode::SeriesTooShort, "empty series");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  if (!(var > 0.0)) throw Error(ErrorCode::ZeroVarianceSeries, "series has zero variance");
  return (x.array() - mean) / std::sqrt(var);
}

TemplateCounts count_template_matches(const Eigen::Ref<const Eigen::VectorXd>& x, int m, double r) {
  TemplateCounts c;
  const Eigen::Index n = x.size();
  const Eigen::Index templates = n - m;
  for (Eigen::Index i = 0; i < templates; ++i) {
    for (Eigen::Index j = i + 1; j < templates; ++j) {
      int k = 0;
      while (k < m && std::abs(x(i + k) - x(j + k)) <= r) ++k;
      if (k < m) continue;
      ++c.b;
      if (std::abs(x(i + m) - x(j + m)) <= r) ++c.a;
    }
  }
  return c;
}

double sample_entropy(const Eigen::Ref<const Eigen::VectorXd>& x, const EntropyParams& params) {
  if (params.m < 1 || !(params.r > 0.0)) throw Error(ErrorCode::InvalidSpec, "sample entropy needs m >= 1, r > 0");
  if (x.size() <= params.m + 1) {
    throw Error(ErrorCode::SeriesTooShort, "sample entropy needs more than m + 1 points");
  }
  const auto z = znormalize(x);
  const auto c = count_template_matches(z, params.m, params.r);
  if (c.a == 0 || c.b == 0) {
    throw Error(ErrorCode::NoMatches,
                "undefined sample entropy (A=" + std::to_string(c.a) + ", B=" + std::to_string(c.b) + ")");
  }
  return -std::log(static_cast<double>(c.a) / static_cast<double>(c.b));
}

double hurst_exponent(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n < 64) throw Error(ErrorCode::SeriesTooShort, "Hurst exponent needs at least 64 points");
  std::vector<double> lx, ly;
  for (Eigen::Index w = 8; w <= n / 2; w *= 2) {
    double acc = 0.0;
    int used = 0;
    for (Eigen::Index start = 0; start + w <= n; start += w) {
      const auto seg = x.segment(start, w);
      const double mean = seg.mean();
      double y = 0.0, lo = 0.0, hi = 0.0;
      for (Eigen::Index i = 0; i < w; ++i) {
        y += seg(i) - mean;
        lo = i == 0 ? y : std::min(lo, y);
        hi = i == 0 ? y : std::max(hi, y);
      }
      const double sd = std::sqrt((seg.array() - mean).square().mean());
      if (sd > 0.0 && hi > lo) {
        acc += (hi - lo) / sd;
        ++used;
      }
    }
    if (used > 0) {
      lx.push_back(std::log(static_cast<double>(w)));
      ly.push_back(std::log(acc / used));
    }
  }
  if (lx.size() < 2) throw Error(ErrorCode::ZeroRange, "no window with non-zero range");
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return std::clamp(sxy / sxx, 0.0, 1.0);
}

std::vector<Eigen::VectorXd> make_surrogates(const Eigen::Ref<const Eigen::VectorXd>& x, int n, std::uint64_t seed) {
  if (x.size() < 2) throw Error(ErrorCode::SeriesTooShort, "surrogates need at least two points");
  if (n < 0) throw Error(ErrorCode::InvalidSpec, "surrogate count must be non-negative");
  auto rng = make_rng(seed, 0x737572);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s = x;
    std::shuffle(s.data(), s.data() + s.size(), rng);
    out.push_back(std::move(s));
  }
  return out;
}

const char* to_string(SurrogateMetric metric) { return metric == SurrogateMetric::Entropy ? "entropy" : "hurst"; }

double wilcoxon_signed_rank_p(const std::vector<double>& differences) {
  std::vector<double> d;
  for (double v : differences) {
    if (v != 0.0) d.push_back(v);
  }
  const auto n = d.size();
  if (n == 0) return 1.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(d[a]) < std::abs(d[b]); });
  double w_plus = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    const auto t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (d[order[k]] > 0) w_plus += rank;
    }
    i = j;
  }
  const auto nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) return 1.0;
  const double z = (w_plus - mean) / std::sqrt(var);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace {
double metric_value(const Eigen::Ref<const Eigen::VectorXd>& x, SurrogateMetric metric, const EntropyParams& params) {
  try {
    return metric == SurrogateMetric::Entropy ? sample_entropy(x, params) : hurst_exponent(x);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoMatches || e.code() == ErrorCode::ZeroRange ||
        e.code() == ErrorCode::ZeroVarianceSeries) {
      throw Error(ErrorCode::UndefinedMetric, std::string(to_string(metric)) + ": " + e.what());
    }
    throw;
  }
}
}  // namespace

SurrogateTestResult surrogate_test(const Eigen::Ref<const Eigen::VectorXd>& x, SurrogateMetric metric,
                                   const std::vector<Eigen::VectorXd>& ensemble, const EntropyParams& params,
                                   bool paper_compat) {
  if (ensemble.empty()) throw Error(ErrorCode::EmptyEnsemble, "surrogate ensemble is empty");
  SurrogateTestResult r;
  r.value = metric_value(x, metric, params);
  std::vector<double> s;
  s.reserve(ensemble.size());
  for (const auto& e : ensemble) s.push_back(metric_value(e, metric, params));
  const auto n = static_cast<double>(s.size());
  r.surrogate_mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s) ss += (v - r.surrogate_mean) * (v - r.surrogate_mean);
  r.surrogate_sd = s.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  int at_most = 0, at_least = 0;
  for (double v : s) {
    r.n_below += v < r.value;
    r.n_above += v > r.value;
    at_most += v <= r.value;
    at_least += v >= r.value;
  }
  const double p_lo = (1.0 + at_most) / (n + 1.0);
  const double p_hi = (1.0 + at_least) / (n + 1.0);
  r.p_value = std::min(1.0, 2.0 * std::min(p_lo, p_hi));
  r.below_surrogates = r.value < r.surrogate_mean;
  if (paper_compat) {
    std::vector<double> diff;
    for (double v : s) diff.push_back(r.value - v);
    r.wilcoxon_p = wilcoxon_signed_rank_p(diff);
  }
  return r;
}

Eigen::VectorXcd dft(const Eigen::Ref<const Eigen::VectorXd>& x) {
  Eigen::FFT<double> fft;
  const Eigen::VectorXd in = x;
  Eigen::VectorXcd out;
  fft.fwd(out, in);
  return out;
}

Periodogram periodogram_period(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Eigen::Index n = x.size();
  if (n < 16) throw Error(ErrorCode::SeriesTooShort, "periodogram needs at least 16 points");
  const Eigen::VectorXd centered = x.array() - x.mean();
  if (centered.cwiseAbs().maxCoeff() == 0.0) throw Error(ErrorCode::AllZeroSeries, "series is constant");
  const auto spec = dft(centered);
  Periodogram p;
  double best = -1.0;
  for (Eigen::Index k = 1; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(n);
    const double pw = std::norm(spec(k)) / static_cast<double>(n);
    p.frequency.push_back(f);
    p.power.push_back(pw);
    if (k >= 2 && pw > best) {  // k = 1 is a period of N samples, longer than N/2
      best = pw;
      p.peak_bin = static_cast<std::size_t>(k);
    }
  }
  if (p.peak_bin == 0) throw Error(ErrorCode::SeriesTooShort, "no admissible frequency bin");
  p.peak_frequency = static_cast<double>(p.peak_bin) / static_cast<double>(n);
  p.period = static_cast<double>(n) / static_cast<double>(p.peak_bin);
  return p;
}

Eigen::VectorXd autocorrelation(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index max_lag) {
  const Eigen::Index n = x.size();
  if (n < 2) throw Error(ErrorCode::SeriesTooShort, "autocorrelation needs at least two points");
  if (max_lag >= n) throw Error(ErrorCode::SeriesTooShortForLag, "lag " + std::to_string(max_lag) + " >= length");
  Eigen::Index m = 1;
  while (m < 2 * n) m *= 2;
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(m);
  padded.head(n) = x.array() - x.mean();
  if (padded.cwiseAbs().maxCoeff() == 0.0) throw Error(ErrorCode::ZeroVarianceSeries, "series is constant");
  Eigen::FFT<double> fft;
  Eigen::VectorXcd spec;
  fft.fwd(spec, padded);
  const Eigen::VectorXcd power = spec.cwiseAbs2().cast<std::complex<double>>();
  Eigen::VectorXd r;
  fft.inv(r, power);
  return r.head(max_lag + 1) / r(0);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidSpec, "quantile level must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

AutocorrCheck autocorrelation_check(const Eigen::Ref<const Eigen::VectorXd>& x, double period, int k_max,
                                    int tol_lags, std::optional<double> band_z) {
  if (!(period > 0.0) || k_max < 1 || tol_lags < 0) throw Error(ErrorCode::InvalidSpec, "bad autocorrelation check");
  const Eigen::Index n = x.size();
  const auto last = static_cast<Eigen::Index>(std::llround(k_max * period)) + tol_lags + 1;
  if (last >= n) {
    throw Error(ErrorCode::SeriesTooShortForLag,
                "length " + std::to_string(n) + " too short for lag " + std::to_string(last));
  }
  AutocorrCheck c;
  c.acf = autocorrelation(x, last);
  const double z = band_z.value_or(normal_quantile(1.0 - 0.05 / (2.0 * k_max * (2 * tol_lags + 1))));
  c.band = z / std::sqrt(static_cast<double>(n));
  for (int k = 1; k <= k_max; ++k) {
    const auto center = static_cast<Eigen::Index>(std::llround(k * period));
    Eigen::Index best = -1;
    for (Eigen::Index l = std::max<Eigen::Index>(1, center - tol_lags); l <= center + tol_lags; ++l) {
      const bool local_max = c.acf(l) >= c.acf(l - 1) && c.acf(l) >= c.acf(l + 1);
      if (local_max && c.acf(l) > c.band && (best < 0 || c.acf(l) > c.acf(best))) best = l;
    }
    c.ok.push_back(best >= 0);
    c.peak_lag.push_back(best);
  }
  return c;
}

PeriodicityReport analyze_periodicity(const HourlySeries& series, const std::string& user_id,
                                      const PeriodicityOptions& options, std::uint64_t seed) {
  PeriodicityReport r;
  r.user_id = user_id;
  r.include_background = series.include_background;
  r.length = series.values.size();
  r.seed = seed;
  const auto x = series.as_vector();
  r.psd = periodogram_period(x);
  try {
    r.autocorr = autocorrelation_check(x, r.psd.period, options.k_max, options.tol_lags,
                                       options.paper_compat ? std::optional<double>(1.96) : options.band_z);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SeriesTooShortForLag) throw;
  }
  const auto ensemble = make_surrogates(x, options.n_surrogates, seed);
  r.entropy = surrogate_test(x, SurrogateMetric::Entropy, ensemble, options.entropy, options.paper_compat);
  r.hurst = surrogate_test(x, SurrogateMetric::Hurst, ensemble, options.entropy, options.paper_compat);
  return r;
}

namespace {
nlohmann::ordered_json metric_json(const SurrogateTestResult& t) {
  nlohmann::ordered_json j;
  j["value"] = t.value;
  j["surrogate_mean"] = t.surrogate_mean;
  j["surrogate_sd"] = t.surrogate_sd;
  j["n_below"] = t.n_below;
  j["n_above"] = t.n_above;
  j["p_value"] = t.p_value;
  j["below_surrogates"] = t.below_surrogates;
  if (t.wilcoxon_p) j["wilcoxon_p"] = *t.wilcoxon_p;
  return j;
}
}  // namespace

std::string PeriodicityReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "cuprof.periodicity/1";
  j["user"] = user_id;
  j["condition"] = include_background ? "with_background" : "without_background";
  j["length"] = length;
  j["seed"] = seed;
  j["peak_frequency"] = psd.peak_frequency;
  j["period_hours"] = psd.period;
  j["autocorr_band"] = autocorr.band;
  j["autocorr_peaks_ok"] = autocorr.ok;
  j["autocorr_peak_lags"] = autocorr.peak_lag;
  j["sample_entropy"] = metric_json(entropy);
  j["hurst"] = metric_json(hurst);
  return j.dump(2);
}

std::string PeriodicityReport::psd_csv() const {
  std::ostringstream out;
  out << "frequency,period,power\n";
  char buf[96];
  for (std::size_t i = 0; i < psd.frequency.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", psd.frequency[i], 1.0 / psd.frequency[i], psd.power[i]);
    out << buf;
  }
  return out.str();
}

std::string PeriodicityReport::acf_csv() const {
  std::ostringstream out;
  out << "lag,acf\n";
  char buf[64];
  for (Eigen::Index i = 0; i < autocorr.acf.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%ld,%.10g\n", static_cast<long>(i), autocorr.acf(i));
    out << buf;
  }
  return out.str();
}

std::string line_plot_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                          const std::string& x_label, const std::string& y_label) {
  constexpr double W = 640, H = 320, L = 60, R = 20, T = 30, B = 40;
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\">\n", W, H);
  out << buf;
  out << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">" << y_label << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  const auto n = std::min(x.size(), y.size());
  if (n > 0) {
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    const double xs = *xmax > *xmin ? (W - L - R) / (*xmax - *xmin) : 0.0;
    const double ys = *ymax > *ymin ? (H - T - B) / (*ymax - *ymin) : 0.0;
    out << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", L + (x[i] - *xmin) * xs, H - B - (y[i] - *ymin) * ys);
      out << buf;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace cuprof
