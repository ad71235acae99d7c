#pragma once

// Hourly activity series and their temporal-consistency statistics:
// sample entropy, rescaled-range Hurst exponent, shuffle surrogates,
// periodogram and autocorrelation.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cuprof/ingest.hpp"

namespace cuprof {

struct HourlySeries {
  std::vector<int> values;  // active minutes per hour, 0..60
  std::int64_t start_epoch_hour = 0;
  bool include_background = true;

  Eigen::VectorXd as_vector() const;
};

/// Covers whole calendar days from the first to the last study day.
HourlySeries build_hourly_series(const UserDataset& dataset, bool include_background);

/// Zero mean, unit population variance. Throws ZeroVarianceSeries.
Eigen::VectorXd znormalize(const Eigen::Ref<const Eigen::VectorXd>& x);

struct EntropyParams {
  int m = 2;
  double r = 0.2;  // absolute tolerance on the z-normalized series
};

struct TemplateCounts {
  std::uint64_t a = 0;  // matching pairs of length m + 1
  std::uint64_t b = 0;  // matching pairs of length m
};

/// Pair counts over the first N - m templates of both lengths, Chebyshev
/// distance, self-matches excluded. Input is used as given.
TemplateCounts count_template_matches(const Eigen::Ref<const Eigen::VectorXd>& x, int m, double r);

/// -ln(A/B) of the z-normalized series. Throws NoMatches when A or B is 0,
/// ZeroVarianceSeries for constant input, SeriesTooShort when N <= m + 1.
double sample_entropy(const Eigen::Ref<const Eigen::VectorXd>& x, const EntropyParams& params = {});

template <class Derived>
double sample_entropy(const Eigen::MatrixBase<Derived>& x, const EntropyParams& params = {}) {
  const Eigen::VectorXd v = x.derived().template cast<double>();
  return sample_entropy(Eigen::Ref<const Eigen::VectorXd>(v), params);
}

/// Rescaled-range slope over dyadic windows 8, 16, ... <= N/2, clamped to
/// [0, 1]. Throws SeriesTooShort below 64 points and ZeroRange when no
/// window has spread.
double hurst_exponent(const Eigen::Ref<const Eigen::VectorXd>& x);

/// n independent uniform permutations of x.
std::vector<Eigen::VectorXd> make_surrogates(const Eigen::Ref<const Eigen::VectorXd>& x, int n, std::uint64_t seed);

enum class SurrogateMetric { Entropy, Hurst };
const char* to_string(SurrogateMetric metric);

struct SurrogateTestResult {
  double value = 0.0;  // metric of the original series
  double surrogate_mean = 0.0;
  double surrogate_sd = 0.0;
  int n_below = 0;  // surrogates strictly below the series value
  int n_above = 0;  // strictly above
  double p_value = 1.0;  // two-sided empirical rank p
  bool below_surrogates = false;  // value < surrogate mean
  std::optional<double> wilcoxon_p;  // paper-compat paired signed-rank test
};

/// Empirical p = min(1, 2 min(p_lo, p_hi)) with p_lo = (1 + #{s <= v}) / (n + 1)
/// and p_hi = (1 + #{s >= v}) / (n + 1). Throws EmptyEnsemble for n = 0 and
/// UndefinedMetric when the metric is undefined on any member.
SurrogateTestResult surrogate_test(const Eigen::Ref<const Eigen::VectorXd>& x, SurrogateMetric metric,
                                   const std::vector<Eigen::VectorXd>& ensemble, const EntropyParams& params = {},
                                   bool paper_compat = false);

/// Two-sided p of the Wilcoxon signed-rank test on the differences
/// (normal approximation with tie correction; zero differences dropped).
double wilcoxon_signed_rank_p(const std::vector<double>& differences);

/// Unnormalized forward DFT via FFT.
Eigen::VectorXcd dft(const Eigen::Ref<const Eigen::VectorXd>& x);

struct Periodogram {
  std::vector<double> frequency;  // cycles per sample, bins 1..N/2
  std::vector<double> power;      // |X_k|^2 / N of the mean-removed series
  std::size_t peak_bin = 0;
  double peak_frequency = 0.0;
  double period = 0.0;  // 1 / peak_frequency, in samples
};

/// Peak search skips DC and periods longer than N/2. Throws SeriesTooShort
/// below 16 points and AllZeroSeries for constant input.
Periodogram periodogram_period(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Biased, mean-removed autocorrelation (lag 0 = 1) for lags 0..max_lag,
/// via the power spectrum of the zero-padded series.
Eigen::VectorXd autocorrelation(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index max_lag);

struct AutocorrCheck {
  std::vector<bool> ok;  // index k-1
  std::vector<Eigen::Index> peak_lag;  // -1 when no qualifying peak
  double band = 0.0;
  Eigen::VectorXd acf;
};

/// ok(k): a local maximum within tol_lags of round(k T) above band_z / sqrt(N).
/// band_z defaults to a Bonferroni-corrected 95% level over the tested lags.
AutocorrCheck autocorrelation_check(const Eigen::Ref<const Eigen::VectorXd>& x, double period, int k_max = 5,
                                    int tol_lags = 1, std::optional<double> band_z = std::nullopt);

/// Two-sided standard-normal quantile used for the autocorrelation band.
double normal_quantile(double p);

struct PeriodicityOptions {
  EntropyParams entropy;
  int n_surrogates = 100;
  int k_max = 5;
  int tol_lags = 1;
  std::optional<double> band_z;
  bool paper_compat = false;
};

struct PeriodicityReport {
  std::string user_id;
  bool include_background = true;
  std::size_t length = 0;
  Periodogram psd;
  AutocorrCheck autocorr;
  SurrogateTestResult entropy;
  SurrogateTestResult hurst;
  std::uint64_t seed = 0;

  std::string to_json() const;
  std::string psd_csv() const;
  std::string acf_csv() const;
};

PeriodicityReport analyze_periodicity(const HourlySeries& series, const std::string& user_id,
                                      const PeriodicityOptions& options, std::uint64_t seed);

/// Minimal polyline SVG of y against x.
std::string line_plot_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                          const std::string& x_label, const std::string& y_label);

}  // namespace cuprof
