#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cuprof/synth.hpp"
#include "cuprof/timeseries.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cuprof;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd sinusoid(int n, double period, double amp = 1.0, double phase = 0.0) {
  const double pi = std::acos(-1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = amp * std::sin(2 * pi * i / period + phase);
  return x;
}

Eigen::VectorXd gaussian_noise(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

UserDataset office_user(int days, std::uint64_t seed) {
  SyntheticUserSpec s;
  s.user_id = "office";
  s.processes = {{"explorer.exe", 0.6}, {"outlook.exe", 0.3}};
  s.domains = {{"mail.example", 0.2}};
  s.active_hours = hours_mask(9, 17);
  s.activity_prob = 0.5;
  s.days = days;
  s.seed = seed;
  return generate_synthetic_user(s);
}

}  // namespace

TEST_SUITE("timeseries") {
  TEST_CASE("hourly series: saturation, exclusion, length") {
    UserDataset d{"u", {}};
    const std::int64_t day0 = 18000 * kMinutesPerDay;
    for (int m = 0; m < 60; ++m) d.minutes.push_back({day0 + 600 + m, {"p"}, {}, 1, 0, false});
    for (int m = 0; m < 3; ++m) d.minutes.push_back({day0 + 720 + m, {"p"}, {"d"}, 0, 0, true});
    const auto with = build_hourly_series(d, true);
    const auto without = build_hourly_series(d, false);
    REQUIRE(with.values.size() == 24);
    CHECK(with.values[10] == 60);
    CHECK(with.values[12] == 3);
    CHECK(without.values[12] == 0);
    CHECK(with.start_epoch_hour == 18000 * 24);
    CHECK(build_hourly_series(office_user(56, 1), true).values.size() == 1344);
  }

  TEST_CASE("hourly series: schedule mask and background monotonicity") {
    const auto d = office_user(14, 2);
    const auto with = build_hourly_series(d, true);
    const auto without = build_hourly_series(d, false);
    for (std::size_t h = 0; h < with.values.size(); ++h) {
      const auto hour = h % 24;
      if (hour < 9 || hour >= 17) CHECK(with.values[h] == 0);
      CHECK(with.values[h] >= 0);
      CHECK(with.values[h] <= 60);
      CHECK(without.values[h] <= with.values[h]);
    }
  }

  TEST_CASE("surrogates preserve the multiset and are distinct") {
    Eigen::VectorXd c = Eigen::VectorXd::Constant(50, 3.0);
    for (const auto& s : make_surrogates(c, 10, 1)) CHECK(s == c);
    const auto x = build_hourly_series(office_user(56, 3), true).as_vector();
    const auto ens = make_surrogates(x, 100, 7);
    REQUIRE(ens.size() == 100);
    auto sorted = to_std(x);
    std::sort(sorted.begin(), sorted.end());
    std::set<std::vector<double>> unique;
    for (const auto& s : ens) {
      auto v = to_std(s);
      unique.insert(v);
      std::sort(v.begin(), v.end());
      CHECK(v == sorted);
    }
    CHECK(unique.size() >= 99);
    CHECK(make_surrogates(x, 3, 7)[0] == ens[0]);
  }

  TEST_CASE("sample entropy matches brute-force template counting") {
    std::vector<Eigen::VectorXd> cases;
    Eigen::VectorXd alt(200);
    for (int i = 0; i < 200; ++i) alt(i) = i % 2 ? -1.0 : 1.0;
    cases.push_back(alt);
    std::mt19937_64 rng(11);
    for (int k = 0; k < 6; ++k) {
      std::uniform_int_distribution<int> len(20, 300), val(0, 12);
      Eigen::VectorXd v(len(rng));
      for (auto& e : v) e = val(rng);
      cases.push_back(v);
      cases.push_back(gaussian_noise(static_cast<int>(v.size()), k));
    }
    for (const auto& x : cases) {
      const double expected = oracle::sample_entropy(oracle::znorm(to_std(x)), 2, 0.2);
      if (std::isinf(expected)) {
        CHECK_THROWS_AS(sample_entropy(x), Error);
      } else {
        CHECK(std::abs(sample_entropy(x) - expected) <= 1e-12);
      }
    }
  }

  TEST_CASE("sample entropy error paths") {
    try {
      sample_entropy(Eigen::VectorXd::Constant(40, 2.0));
      FAIL("expected ZeroVarianceSeries");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroVarianceSeries);
    }
    Eigen::VectorXd ramp = Eigen::VectorXd::LinSpaced(30, 0, 1000);
    try {
      sample_entropy(ramp, {2, 0.01});
      FAIL("expected NoMatches");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoMatches);
    }
    Eigen::VectorXi ints(6);
    ints << 1, 2, 1, 2, 1, 2;
    CHECK(std::isfinite(sample_entropy(ints)));
  }

  TEST_CASE("Hurst exponent on reference processes") {
    double mean_h = 0;
    for (int s = 0; s < 10; ++s) mean_h += hurst_exponent(gaussian_noise(4096, 100 + s)) / 10;
    CHECK(mean_h == doctest::Approx(0.5).epsilon(0.2));
    CHECK(std::abs(hurst_exponent(gaussian_noise(4096, 5)) - 0.5) <= 0.1);
    Eigen::VectorXd walk = gaussian_noise(4096, 6);
    for (Eigen::Index i = 1; i < walk.size(); ++i) walk(i) += walk(i - 1);
    CHECK(hurst_exponent(walk) > 0.85);
    Eigen::VectorXd alt(1024);
    for (int i = 0; i < 1024; ++i) alt(i) = i % 2 ? -1.0 : 1.0;
    CHECK(hurst_exponent(alt) < 0.3);
    CHECK_THROWS_AS(hurst_exponent(Eigen::VectorXd::Constant(128, 1.0)), Error);
    CHECK_THROWS_AS(hurst_exponent(gaussian_noise(32, 1)), Error);
  }

  TEST_CASE("surrogate test: structured series is below its shuffles") {
    const auto x = build_hourly_series(office_user(28, 4), true).as_vector();
    const auto ens = make_surrogates(x, 100, 9);
    const auto r = surrogate_test(x, SurrogateMetric::Entropy, ens, {}, true);
    CHECK(r.n_below == 0);
    CHECK(r.p_value <= 0.02);
    CHECK(r.below_surrogates);
    REQUIRE(r.wilcoxon_p);
    CHECK(*r.wilcoxon_p < 0.001);
    try {
      surrogate_test(x, SurrogateMetric::Entropy, {});
      FAIL("expected EmptyEnsemble");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyEnsemble);
    }
  }

  TEST_CASE("surrogate test: i.i.d. data is not rejected") {
    int not_rejected = 0;
    for (int s = 0; s < 20; ++s) {
      const auto x = gaussian_noise(300, 500 + s);
      const auto r = surrogate_test(x, SurrogateMetric::Entropy, make_surrogates(x, 100, s));
      not_rejected += r.p_value > 0.05;
      CHECK(r.p_value > 0.0);
      CHECK(r.p_value <= 1.0);
    }
    CHECK(not_rejected >= 17);
  }

  TEST_CASE("Wilcoxon signed-rank p on small cases") {
    CHECK(wilcoxon_signed_rank_p({0, 0, 0}) == 1.0);
    // n = 10 all positive: W+ = 55, mean 27.5, var 96.25.
    std::vector<double> d{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(wilcoxon_signed_rank_p(d) == doctest::Approx(std::erfc((27.5 / std::sqrt(96.25)) / std::sqrt(2.0))));
    std::vector<double> sym{1, -1, 2, -2, 3, -3};
    CHECK(wilcoxon_signed_rank_p(sym) == doctest::Approx(1.0));
  }

  TEST_CASE("FFT equals the naive DFT") {
    for (int n : {16, 17, 100, 257, 1344, 2048}) {
      const auto x = gaussian_noise(n, static_cast<std::uint64_t>(n));
      const auto fast = dft(x);
      const auto slow = oracle::naive_dft(to_std(x));
      double worst = 0;
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast(k) - slow[static_cast<std::size_t>(k)]));
      CAPTURE(n);
      CHECK(worst <= 1e-9);
    }
  }

  TEST_CASE("periodogram peaks") {
    auto p = periodogram_period(sinusoid(1344, 24));
    CHECK(p.period == 24.0);
    CHECK(p.peak_bin == 56);
    CHECK(p.peak_frequency == doctest::Approx(1.0 / 24.0));
    Eigen::VectorXd mix = sinusoid(1344, 24, 2.0) + sinusoid(1344, 168, 1.0, 0.3);
    CHECK(periodogram_period(mix).period == 24.0);
    Eigen::VectorXd shifted = mix.array() + 37.5;
    const auto ps = periodogram_period(shifted);
    CHECK(ps.peak_bin == periodogram_period(mix).peak_bin);
    CHECK_THROWS_AS(periodogram_period(Eigen::VectorXd::Constant(64, 2.0)), Error);
    CHECK_THROWS_AS(periodogram_period(Eigen::VectorXd::Ones(8)), Error);
  }

  TEST_CASE("spectral autocorrelation equals the direct sum") {
    for (int n : {50, 333, 1344}) {
      const auto x = gaussian_noise(n, 70 + static_cast<std::uint64_t>(n));
      const auto fast = autocorrelation(x, n - 1);
      const auto slow = oracle::direct_autocorrelation(to_std(x));
      CHECK(fast(0) == doctest::Approx(1.0).epsilon(1e-15));
      double worst = 0;
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast(k) - slow[static_cast<std::size_t>(k)]));
      CHECK(worst <= 1e-9);
    }
  }

  TEST_CASE("autocorrelation check") {
    const auto c = autocorrelation_check(sinusoid(1344, 24), 24.0);
    REQUIRE(c.ok.size() == 5);
    for (int k = 0; k < 5; ++k) {
      CHECK(c.ok[static_cast<std::size_t>(k)]);
      CHECK(std::abs(c.peak_lag[static_cast<std::size_t>(k)] - 24 * (k + 1)) <= 1);
    }
    int clean = 0;
    for (int s = 0; s < 20; ++s) {
      const auto n = autocorrelation_check(gaussian_noise(1344, 900 + s), 24.0);
      clean += std::none_of(n.ok.begin(), n.ok.end(), [](bool b) { return b; });
    }
    CHECK(clean >= 18);
    try {
      autocorrelation_check(sinusoid(100, 24), 24.0);
      FAIL("expected SeriesTooShortForLag");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SeriesTooShortForLag);
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  }

  TEST_CASE("periodicity report of a daily schedule") {
    const auto series = build_hourly_series(office_user(56, 8), true);
    PeriodicityOptions o;
    o.n_surrogates = 20;
    const auto r = analyze_periodicity(series, "office", o, 3);
    CHECK(r.psd.period == 24.0);
    CHECK(std::all_of(r.autocorr.ok.begin(), r.autocorr.ok.end(), [](bool b) { return b; }));
    CHECK(r.to_json() == analyze_periodicity(series, "office", o, 3).to_json());
    CHECK(r.to_json().find("\"period_hours\": 24.0") != std::string::npos);
    CHECK(r.psd_csv().rfind("frequency,period,power\n", 0) == 0);
    CHECK(r.acf_csv().rfind("lag,acf\n0,1\n", 0) == 0);
    const auto svg = line_plot_svg(r.psd.frequency, r.psd.power, "psd", "f", "p");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
  }
}
