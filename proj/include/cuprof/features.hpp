#pragma once

// Sliding-window aggregation, TF-IDF vectorization and feature scaling.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cuprof/ingest.hpp"

namespace cuprof {

/// Window sizes (rows) required when paper_compat is set.
inline constexpr int kCompatWindowSizes[] = {1, 2, 5, 10, 30, 60};

/// Numeric features occupy these fixed leading indices of every FeatureVector.
inline constexpr Eigen::Index kClicksIndex = 0;
inline constexpr Eigen::Index kKeystrokesIndex = 1;
inline constexpr Eigen::Index kBackgroundIndex = 2;
inline constexpr Eigen::Index kNumericFeatures = 3;

struct WindowSpec {
  int t = 10;       // rows per window
  int stride = 1;   // rows between window starts
  // When set, a window never spans two consecutive rows further apart than
  // this many minutes (windows reset at long inactivity gaps).
  std::optional<std::int64_t> max_gap_minutes;
};

struct FeatureWindow {
  std::int64_t end_minute_epoch = 0;
  std::uint64_t clicks_sum = 0;
  std::uint64_t keystrokes_sum = 0;
  std::uint64_t background_sum = 0;
  std::vector<std::string> process_doc;
  std::vector<std::string> domain_doc;
};

/// Windows over consecutive rows (not wall-clock minutes); N - t + 1 windows at stride 1.
std::vector<FeatureWindow> slide_windows(const UserDataset& dataset, const WindowSpec& spec);

enum class TokenField { Process, Domain };
const char* to_string(TokenField field);

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(TokenField field, std::size_t n_docs, std::vector<std::string> tokens, std::vector<std::size_t> df);

  TokenField field() const { return field_; }
  std::size_t n_docs() const { return n_docs_; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& df() const { return df_; }

  std::optional<std::size_t> index_of(const std::string& token) const;
  /// Smoothed idf: ln((1 + n_docs) / (1 + df)) + 1.
  double idf(std::size_t index) const;

 private:
  TokenField field_ = TokenField::Process;
  std::size_t n_docs_ = 0;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Document frequency by presence; indices assigned in first-occurrence order.
Vocabulary fit_vocabulary(std::span<const FeatureWindow> windows, TokenField field);

struct FeatureVector {
  Eigen::SparseVector<double> values;
  std::optional<std::string> label;

  Eigen::Index dim() const { return values.size(); }
};

/// Layout: [clicks, keystrokes, background, process tf-idf..., domain tf-idf...].
/// Each tf-idf block is L2-normalized on its own; unknown tokens are dropped.
FeatureVector tfidf_vectorize(const FeatureWindow& window, const Vocabulary& processes, const Vocabulary& domains);

std::vector<std::string> feature_names(const Vocabulary& processes, const Vocabulary& domains);

Eigen::MatrixXd to_dense(std::span<const FeatureVector> rows);

enum class ScalingMode { MaxAbs, MinMax };
const char* to_string(ScalingMode mode);
ScalingMode scaling_mode_from_string(const std::string& name);

/// Column-wise affine scaler: x' = (x - offset) * factor. Columns that are
/// degenerate in the fit data get factor 0 (mapped to 0).
struct Scaler {
  ScalingMode mode = ScalingMode::MaxAbs;
  Eigen::VectorXd offset;
  Eigen::VectorXd factor;

  static Scaler fit(const Eigen::Ref<const Eigen::MatrixXd>& train, ScalingMode mode);
  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  Eigen::VectorXd apply_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct ScaledPair {
  Eigen::MatrixXd train;
  Eigen::MatrixXd applied;
  Scaler scaler;
};

/// Fits on `train` and transforms both matrices.
ScaledPair scale_features(const Eigen::Ref<const Eigen::MatrixXd>& train,
                          const Eigen::Ref<const Eigen::MatrixXd>& apply_to, ScalingMode mode);

// Persistence.
std::string vocabulary_to_json(const Vocabulary& vocab);
Vocabulary vocabulary_from_json(const std::string& text);

/// Sparse triplets `row,col,value` (header line included).
void write_triplets(std::ostream& out, std::span<const FeatureVector> rows);
/// Sidecar header {dim, labels}.
std::string feature_header_json(std::span<const FeatureVector> rows, Eigen::Index dim);
std::vector<FeatureVector> read_feature_matrix(std::istream& triplets, const std::string& header_json);

}  // namespace cuprof
