#include "cuprof/som.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "cuprof/rng.hpp"

namespace cuprof {

namespace detail {

PcaResult pca_power_iteration(const Eigen::MatrixXd& x, int k, int max_iter, double tol) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n == 0 || d == 0) throw Error(ErrorCode::EmptyInput, "PCA needs a non-empty matrix");
  const bool flat = ((x.colwise().maxCoeff() - x.colwise().minCoeff()).array() == 0.0).all();
  if (flat) throw Error(ErrorCode::ZeroVariance, "all columns are constant");

  PcaResult out;
  out.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd xc = x.rowwise() - out.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  k = std::clamp(k, 0, static_cast<int>(d));
  out.components = Eigen::MatrixXd::Zero(d, k);
  out.variances = Eigen::VectorXd::Zero(k);

  auto rng = make_rng(0x706361, 0);
  std::normal_distribution<double> gauss;
  auto orthogonalize = [&](Eigen::VectorXd& v, int upto) {
    for (int j = 0; j < upto; ++j) v -= out.components.col(j).dot(v) * out.components.col(j);
  };

  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = gauss(rng);
    orthogonalize(v, c);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Eigen::VectorXd w = xc.transpose() * (xc * v) / denom;
      orthogonalize(w, c);
      const double norm = w.norm();
      if (norm == 0.0) break;  // remaining directions carry no variance
      w /= norm;
      const bool converged = std::abs(norm - lambda) <= tol * std::max(norm, 1.0) && (w - v).norm() <= 1e-9;
      v = w;
      lambda = norm;
      if (converged) break;
    }
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.components.col(c) = v;
    out.variances(c) = (xc * v).squaredNorm() / denom;
  }
  return out;
}

}  // namespace detail

Eigen::Vector2d hex_position(int index, int width) {
  const int row = index / width, col = index % width;
  return {col + 0.5 * (row & 1), row * std::sqrt(3.0) / 2.0};
}

double hex_distance(int a, int b, int width) { return (hex_position(a, width) - hex_position(b, width)).norm(); }

namespace {

struct Assignment {
  Eigen::VectorXi bmu;
  Eigen::VectorXd distance;
};

Assignment assign(const Eigen::MatrixXd& codebook, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  constexpr Eigen::Index kChunk = 1024;
  Assignment a{Eigen::VectorXi(x.rows()), Eigen::VectorXd(x.rows())};
  const Eigen::VectorXd c_norm = codebook.rowwise().squaredNorm();
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, x.rows() - start);
    const auto block = x.middleRows(start, len);
    Eigen::MatrixXd d2 = -2.0 * block * codebook.transpose();
    d2.rowwise() += c_norm.transpose();
    for (Eigen::Index i = 0; i < len; ++i) {
      Eigen::Index j = 0;
      d2.row(i).minCoeff(&j);
      a.bmu(start + i) = static_cast<int>(j);
      a.distance(start + i) = (block.row(i) - codebook.row(j)).norm();
    }
  }
  return a;
}

Eigen::MatrixXd random_init(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Index units, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x736f6d);
  std::uniform_int_distribution<Eigen::Index> pick(0, x.rows() - 1);
  Eigen::MatrixXd c(units, x.cols());
  for (Eigen::Index u = 0; u < units; ++u) c.row(u) = x.row(pick(rng));
  return c;
}

// Codebook spread over the plane of the top two principal directions,
// one standard deviation either side of the mean along each axis.
Eigen::MatrixXd pca_init(const PcaResult& pca, int width, int height) {
  const Eigen::Index units = static_cast<Eigen::Index>(width) * height;
  Eigen::MatrixXd c = pca.mean.transpose().replicate(units, 1);
  const double max_x = (width - 1) + (height > 1 ? 0.5 : 0.0);
  const double max_y = (height - 1) * std::sqrt(3.0) / 2.0;
  for (Eigen::Index u = 0; u < units; ++u) {
    const auto p = hex_position(static_cast<int>(u), width);
    const double coord[2] = {max_x > 0 ? 2.0 * p.x() / max_x - 1.0 : 0.0,
                             max_y > 0 ? 2.0 * p.y() / max_y - 1.0 : 0.0};
    for (Eigen::Index k = 0; k < pca.components.cols(); ++k) {
      c.row(u) += coord[k] * std::sqrt(pca.variances(k)) * pca.components.col(k).transpose();
    }
  }
  return c;
}

}  // namespace

Eigen::VectorXi best_matching_units(const Eigen::MatrixXd& codebook, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  return assign(codebook, x).bmu;
}

double quantization_error(const Eigen::MatrixXd& codebook, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.rows() == 0) return 0.0;
  return assign(codebook, x).distance.mean();
}

SomGrid som_train(const Eigen::Ref<const Eigen::MatrixXd>& x, const SomParams& params, std::uint64_t seed) {
  if (params.width < 1 || params.height < 1 || params.epochs < 0) {
    throw Error(ErrorCode::InvalidSpec, "SOM grid must be at least 1x1 with non-negative epochs");
  }
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "SOM needs at least one sample");

  SomGrid g;
  g.width = params.width;
  g.height = params.height;
  g.epochs = params.epochs;
  g.init = params.init;
  g.seed = seed;
  const Eigen::Index units = g.units();

  if (params.init == SomInit::Pca) {
    try {
      g.codebook = pca_init(pca_top_components(x, 2), g.width, g.height);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
      g.codebook = random_init(x, units, seed);
      g.fell_back_to_random = true;
    }
  } else {
    g.codebook = random_init(x, units, seed);
  }

  Eigen::MatrixXd grid_d2(units, units);
  for (Eigen::Index a = 0; a < units; ++a) {
    for (Eigen::Index b = 0; b < units; ++b) {
      const double d = hex_distance(static_cast<int>(a), static_cast<int>(b), g.width);
      grid_d2(a, b) = d * d;
    }
  }

  const double sigma0 = std::max(1.0, std::max(g.width, g.height) / 2.0);
  Assignment current = assign(g.codebook, x);
  g.initial_quantization_error = current.distance.mean();
  for (int e = 0; e < g.epochs; ++e) {
    const double frac = g.epochs > 1 ? static_cast<double>(e) / (g.epochs - 1) : 1.0;
    const double sigma = sigma0 + (1.0 - sigma0) * frac;
    g.radius.push_back(sigma);

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(units, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(units);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      sums.row(current.bmu(i)) += x.row(i);
      counts(current.bmu(i)) += 1.0;
    }
    const Eigen::MatrixXd h = (-grid_d2.array() / (2.0 * sigma * sigma)).exp().matrix();
    const Eigen::VectorXd weight = h * counts;
    Eigen::MatrixXd next = h * sums;
    for (Eigen::Index u = 0; u < units; ++u) {
      if (weight(u) > 0.0) {
        g.codebook.row(u) = next.row(u) / weight(u);
      }
    }
    current = assign(g.codebook, x);
    g.quantization_error.push_back(current.distance.mean());
  }
  return g;
}

Eigen::MatrixXd umatrix(const SomGrid& grid) {
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(grid.height, grid.width);
  const int units = static_cast<int>(grid.units());
  for (int a = 0; a < units; ++a) {
    double sum = 0.0;
    int n = 0;
    for (int b = 0; b < units; ++b) {
      if (a == b || hex_distance(a, b, grid.width) > 1.0 + 1e-9) continue;
      sum += (grid.codebook.row(a) - grid.codebook.row(b)).norm();
      ++n;
    }
    u(a / grid.width, a % grid.width) = n > 0 ? sum / n : 0.0;
  }
  return u;
}

std::vector<std::uint8_t> umatrix_pixels(const Eigen::MatrixXd& u) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(u.size()), 0);
  if (u.size() == 0) return px;
  const double lo = u.minCoeff(), hi = u.maxCoeff();
  if (!(hi > lo)) return px;
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      px[k++] = static_cast<std::uint8_t>(std::lround(255.0 * (u(r, c) - lo) / (hi - lo)));
    }
  }
  return px;
}

Eigen::MatrixXd umatrix_render(const SomGrid& grid, const std::filesystem::path& path) {
  Eigen::MatrixXd u = umatrix(grid);
  const auto px = umatrix_pixels(u);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "P5\n" << grid.width << ' ' << grid.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  return u;
}

double codebook_displacement(const SomGrid& a, const SomGrid& b) {
  if (a.codebook.rows() != b.codebook.rows() || a.codebook.cols() != b.codebook.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "codebooks differ in shape");
  }
  if (a.codebook.rows() == 0) return 0.0;
  return (a.codebook - b.codebook).rowwise().norm().mean();
}

WeeklySomReport train_weekly_soms(const UserDataset& dataset, const WindowSpec& window, const SomParams& params,
                                  std::uint64_t seed, std::size_t min_windows) {
  if (dataset.size() < static_cast<std::size_t>(window.t)) {
    throw Error(ErrorCode::DatasetTooShort, dataset.user_id + " has fewer rows than one window");
  }
  const auto windows = slide_windows(dataset, window);
  const auto processes = fit_vocabulary(windows, TokenField::Process);
  const auto domains = fit_vocabulary(windows, TokenField::Domain);
  std::vector<FeatureVector> rows;
  rows.reserve(windows.size());
  for (const auto& w : windows) rows.push_back(tfidf_vectorize(w, processes, domains));
  const Eigen::MatrixXd x = Scaler::fit(to_dense(rows), ScalingMode::MaxAbs).apply(to_dense(rows));

  std::map<int, std::vector<Eigen::Index>> by_week;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    by_week[(dataset.study_day(windows[i].end_minute_epoch) - 1) / 7 + 1].push_back(static_cast<Eigen::Index>(i));
  }

  WeeklySomReport report;
  for (const auto& [week, idx] : by_week) {
    if (idx.size() < min_windows) {
      report.warnings.push_back(std::string(to_string(ErrorCode::WeekTooSparse)) + ": " + dataset.user_id +
                                " week " + std::to_string(week) + " has " + std::to_string(idx.size()) +
                                " windows");
      continue;
    }
    const Eigen::MatrixXd xw = x(idx, Eigen::all);
    WeeklySom w;
    w.week = week;
    w.grid = som_train(xw, params, mix64(seed ^ static_cast<std::uint64_t>(week)));
    w.umatrix = umatrix(w.grid);
    w.n_windows = idx.size();
    if (w.grid.fell_back_to_random) {
      report.warnings.push_back(std::string(to_string(ErrorCode::ZeroVariance)) + ": " + dataset.user_id + " week " +
                                std::to_string(week) + " used random initialization");
    }
    if (!report.weeks.empty()) report.displacement.push_back(codebook_displacement(report.weeks.back().grid, w.grid));
    report.weeks.push_back(std::move(w));
  }
  return report;
}

}  // namespace cuprof
