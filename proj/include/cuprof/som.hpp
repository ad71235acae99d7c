#pragma once

// PCA by power iteration, batch self-organizing maps on a hexagonal grid,
// and U-matrix rendering.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cuprof/error.hpp"
#include "cuprof/features.hpp"
#include "cuprof/ingest.hpp"

namespace cuprof {

struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // one unit direction per column
  Eigen::VectorXd variances;   // sample variance along each direction
};

namespace detail {
PcaResult pca_power_iteration(const Eigen::MatrixXd& x, int k, int max_iter, double tol);
}

/// Top-k principal directions by power iteration with deflation. Signs are
/// fixed so the largest-magnitude entry of each direction is positive.
/// Throws ZeroVariance when the data has no spread.
template <class Derived>
PcaResult pca_top_components(const Eigen::MatrixBase<Derived>& x, int k = 2, int max_iter = 1000,
                             double tol = 1e-12) {
  return detail::pca_power_iteration(x.derived().template cast<double>(), k, max_iter, tol);
}

enum class SomInit { Pca, Random };

struct SomParams {
  int width = 20;
  int height = 20;
  int epochs = 30;
  SomInit init = SomInit::Pca;
};

struct SomGrid {
  int width = 0;
  int height = 0;
  int epochs = 0;
  SomInit init = SomInit::Pca;
  std::uint64_t seed = 0;
  Eigen::MatrixXd codebook;  // (width * height) x dim, unit index = row * width + col
  std::vector<double> radius;             // per epoch
  std::vector<double> quantization_error;  // after each epoch
  double initial_quantization_error = 0.0;
  bool fell_back_to_random = false;

  Eigen::Index units() const { return static_cast<Eigen::Index>(width) * height; }
};

/// Offset hexagonal layout: odd rows shifted by half a cell, rows sqrt(3)/2 apart.
Eigen::Vector2d hex_position(int index, int width);
double hex_distance(int a, int b, int width);

/// Mean Euclidean distance from each row to its nearest codebook vector.
double quantization_error(const Eigen::MatrixXd& codebook, const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Index of the nearest codebook vector for every row (ties: lowest index).
Eigen::VectorXi best_matching_units(const Eigen::MatrixXd& codebook, const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Batch training with a Gaussian neighbourhood whose radius decays linearly
/// from max(width, height) / 2 to 1. epochs = 0 returns the initialization.
SomGrid som_train(const Eigen::Ref<const Eigen::MatrixXd>& x, const SomParams& params, std::uint64_t seed);

/// height x width matrix of mean distances to hexagonal neighbours.
Eigen::MatrixXd umatrix(const SomGrid& grid);

/// Grayscale bytes, min-max scaled to 0..255 (all zero for a flat map).
std::vector<std::uint8_t> umatrix_pixels(const Eigen::MatrixXd& u);

/// Writes a binary PGM (P5) and returns the U-matrix. Throws IoError.
Eigen::MatrixXd umatrix_render(const SomGrid& grid, const std::filesystem::path& path);

/// Mean Euclidean distance between corresponding codebook vectors.
double codebook_displacement(const SomGrid& a, const SomGrid& b);

struct WeeklySom {
  int week = 0;  // 1-based study week
  SomGrid grid;
  Eigen::MatrixXd umatrix;
  std::size_t n_windows = 0;
};

struct WeeklySomReport {
  std::vector<WeeklySom> weeks;
  std::vector<double> displacement;  // between consecutive trained weeks
  std::vector<std::string> warnings;
};

/// One map per study week on a feature space shared across the user's
/// weeks. Weeks with fewer than `min_windows` windows are skipped.
WeeklySomReport train_weekly_soms(const UserDataset& dataset, const WindowSpec& window, const SomParams& params,
                                  std::uint64_t seed, std::size_t min_windows = 20);

}  // namespace cuprof
