#pragma once

// Independent reference computations used to freeze expected values in the
// unit and acceptance suites. Nothing here calls into the library.

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// Smoothed tf-idf of `query` against `corpus`, L2-normalized, OOV dropped.
inline std::map<std::string, double> tfidf(const std::vector<std::vector<std::string>>& corpus,
                                           const std::vector<std::string>& query) {
  std::map<std::string, int> df;
  for (const auto& d : corpus) {
    std::set<std::string> s(d.begin(), d.end());
    for (const auto& t : s) ++df[t];
  }
  std::map<std::string, double> tf;
  for (const auto& t : query) {
    if (df.count(t)) tf[t] += 1.0;
  }
  double norm = 0.0;
  for (auto& [t, v] : tf) {
    v *= std::log((1.0 + corpus.size()) / (1.0 + df[t])) + 1.0;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (auto& [t, v] : tf) v /= norm;
  }
  return tf;
}

/// Sample entropy by O(n^2) template counting on an already-normalized
/// series; tolerance r is absolute. Uses the first n-m templates for both
/// lengths so that A and B are counted over the same template set.
inline double sample_entropy(const std::vector<double>& x, int m, double r) {
  const int n = static_cast<int>(x.size());
  auto count = [&](int len) {
    long long c = 0;
    for (int i = 0; i < n - m; ++i) {
      for (int j = i + 1; j < n - m; ++j) {
        bool match = true;
        for (int k = 0; k < len && match; ++k) match = std::abs(x[i + k] - x[j + k]) <= r;
        c += match;
      }
    }
    return c;
  };
  const long long b = count(m);
  const long long a = count(m + 1);
  if (a == 0 || b == 0) return std::numeric_limits<double>::infinity();
  return -std::log(static_cast<double>(a) / static_cast<double>(b));
}

inline std::vector<double> znorm(std::vector<double> x) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / x.size());
  for (double& v : x) v = (v - mean) / sd;
  return x;
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double pi = std::acos(-1.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

/// Biased, mean-removed autocorrelation normalized so that lag 0 equals 1.
inline std::vector<double> direct_autocorrelation(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  std::vector<double> acf(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    acf[lag] = s;
  }
  const double c0 = acf[0];
  for (double& v : acf) v /= c0;
  return acf;
}

}  // namespace oracle

namespace oracle {

/// U-matrix of a width x height offset-hexagonal grid (odd rows shifted
/// right) from explicit neighbour offsets; codebook rows are unit vectors
/// in row-major unit order.
inline std::vector<std::vector<double>> hex_umatrix(const std::vector<std::vector<double>>& codebook, int width,
                                                    int height) {
  auto dist = [&](int a, int b) {
    double s = 0.0;
    for (std::size_t k = 0; k < codebook[a].size(); ++k) s += (codebook[a][k] - codebook[b][k]) * (codebook[a][k] - codebook[b][k]);
    return std::sqrt(s);
  };
  std::vector<std::vector<double>> u(height, std::vector<double>(width, 0.0));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int shift = r % 2;  // odd rows reach one column further right
      const int offs[6][2] = {{0, -1}, {0, 1}, {-1, shift - 1}, {-1, shift}, {1, shift - 1}, {1, shift}};
      double sum = 0.0;
      int n = 0;
      for (const auto& o : offs) {
        const int rr = r + o[0], cc = c + o[1];
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        sum += dist(r * width + c, rr * width + cc);
        ++n;
      }
      u[r][c] = n ? sum / n : 0.0;
    }
  }
  return u;
}

}  // namespace oracle
