#include "cuprof/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "cuprof/detail/text.hpp"
#include "json.hpp"

namespace cuprof {

namespace {

void append_windows(const std::vector<ActivityMinute>& rows, std::size_t begin, std::size_t end, const WindowSpec& spec,
                    std::vector<FeatureWindow>& out) {
  const auto t = static_cast<std::size_t>(spec.t);
  if (end - begin < t) return;
  for (std::size_t start = begin; start + t <= end; start += static_cast<std::size_t>(spec.stride)) {
    FeatureWindow w;
    for (std::size_t i = start; i < start + t; ++i) {
      const auto& r = rows[i];
      w.clicks_sum += r.clicks;
      w.keystrokes_sum += r.keystrokes;
      w.background_sum += r.background ? 1 : 0;
      w.process_doc.insert(w.process_doc.end(), r.processes.begin(), r.processes.end());
      w.domain_doc.insert(w.domain_doc.end(), r.domains.begin(), r.domains.end());
    }
    w.end_minute_epoch = rows[start + t - 1].minute_epoch;
    out.push_back(std::move(w));
  }
}

}  // namespace

std::vector<FeatureWindow> slide_windows(const UserDataset& dataset, const WindowSpec& spec) {
  if (spec.t <= 0 || spec.stride <= 0) throw Error(ErrorCode::InvalidSpec, "window size and stride must be positive");
  const auto& rows = dataset.minutes;
  if (rows.size() < static_cast<std::size_t>(spec.t)) {
    throw Error(ErrorCode::DatasetTooShort, dataset.user_id + ": " + std::to_string(rows.size()) +
                                                " rows < window " + std::to_string(spec.t));
  }
  std::vector<FeatureWindow> out;
  if (!spec.max_gap_minutes) {
    out.reserve(rows.size() - static_cast<std::size_t>(spec.t) + 1);
    append_windows(rows, 0, rows.size(), spec, out);
    return out;
  }
  std::size_t seg = 0;
  for (std::size_t i = 1; i <= rows.size(); ++i) {
    if (i == rows.size() || rows[i].minute_epoch - rows[i - 1].minute_epoch > *spec.max_gap_minutes) {
      append_windows(rows, seg, i, spec, out);
      seg = i;
    }
  }
  return out;
}

const char* to_string(TokenField field) { return field == TokenField::Process ? "process" : "domain"; }

Vocabulary::Vocabulary(TokenField field, std::size_t n_docs, std::vector<std::string> tokens,
                       std::vector<std::size_t> df)
    : field_(field), n_docs_(n_docs), tokens_(std::move(tokens)), df_(std::move(df)) {
  if (tokens_.size() != df_.size()) throw Error(ErrorCode::FormatError, "vocabulary token/df length mismatch");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (df_[i] > n_docs_) throw Error(ErrorCode::FormatError, "df exceeds n_docs for '" + tokens_[i] + "'");
    if (!index_.emplace(tokens_[i], i).second) {
      throw Error(ErrorCode::FormatError, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::optional<std::size_t> Vocabulary::index_of(const std::string& token) const {
  if (const auto it = index_.find(token); it != index_.end()) return it->second;
  return std::nullopt;
}

double Vocabulary::idf(std::size_t index) const {
  return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df_.at(index)))) + 1.0;
}

Vocabulary fit_vocabulary(std::span<const FeatureWindow> windows, TokenField field) {
  if (windows.empty()) throw Error(ErrorCode::EmptyCorpus, std::string("no ") + to_string(field) + " documents");
  std::vector<std::string> tokens;
  std::vector<std::size_t> df;
  std::unordered_map<std::string, std::size_t> index;
  std::unordered_set<std::size_t> seen;
  for (const auto& w : windows) {
    const auto& doc = field == TokenField::Process ? w.process_doc : w.domain_doc;
    seen.clear();
    for (const auto& tok : doc) {
      auto [it, inserted] = index.emplace(tok, tokens.size());
      if (inserted) {
        tokens.push_back(tok);
        df.push_back(0);
      }
      if (seen.insert(it->second).second) ++df[it->second];
    }
  }
  return Vocabulary(field, windows.size(), std::move(tokens), std::move(df));
}

namespace {

void add_tfidf_block(const std::vector<std::string>& doc, const Vocabulary& vocab, Eigen::Index offset,
                     std::vector<std::pair<Eigen::Index, double>>& entries) {
  std::vector<std::pair<std::size_t, double>> counts;  // vocab index -> raw count, first-seen order
  for (const auto& tok : doc) {
    const auto idx = vocab.index_of(tok);
    if (!idx) continue;
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& p) { return p.first == *idx; });
    if (it == counts.end()) counts.emplace_back(*idx, 1.0);
    else it->second += 1.0;
  }
  double norm2 = 0.0;
  for (auto& [idx, v] : counts) {
    v *= vocab.idf(idx);
    norm2 += v * v;
  }
  if (norm2 <= 0.0) return;
  const double inv = 1.0 / std::sqrt(norm2);
  for (const auto& [idx, v] : counts) entries.emplace_back(offset + static_cast<Eigen::Index>(idx), v * inv);
}

}  // namespace

FeatureVector tfidf_vectorize(const FeatureWindow& window, const Vocabulary& processes, const Vocabulary& domains) {
  const Eigen::Index dim = kNumericFeatures + static_cast<Eigen::Index>(processes.size() + domains.size());
  std::vector<std::pair<Eigen::Index, double>> entries;
  entries.emplace_back(kClicksIndex, static_cast<double>(window.clicks_sum));
  entries.emplace_back(kKeystrokesIndex, static_cast<double>(window.keystrokes_sum));
  entries.emplace_back(kBackgroundIndex, static_cast<double>(window.background_sum));
  add_tfidf_block(window.process_doc, processes, kNumericFeatures, entries);
  add_tfidf_block(window.domain_doc, domains, kNumericFeatures + static_cast<Eigen::Index>(processes.size()), entries);
  std::sort(entries.begin(), entries.end());

  FeatureVector fv;
  fv.values.resize(dim);
  fv.values.reserve(static_cast<Eigen::Index>(entries.size()));
  for (const auto& [i, v] : entries) {
    if (v != 0.0) fv.values.insertBack(i) = v;
  }
  return fv;
}

std::vector<std::string> feature_names(const Vocabulary& processes, const Vocabulary& domains) {
  std::vector<std::string> names = {"clicks", "keystrokes", "background"};
  for (const auto& t : processes.tokens()) names.push_back("proc:" + t);
  for (const auto& t : domains.tokens()) names.push_back("dom:" + t);
  return names;
}

Eigen::MatrixXd to_dense(std::span<const FeatureVector> rows) {
  if (rows.empty()) return {};
  const auto dim = rows.front().dim();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dim() != dim) throw Error(ErrorCode::DimensionMismatch, "ragged feature rows");
    for (Eigen::SparseVector<double>::InnerIterator it(rows[r].values); it; ++it) {
      x(static_cast<Eigen::Index>(r), it.index()) = it.value();
    }
  }
  return x;
}

const char* to_string(ScalingMode mode) { return mode == ScalingMode::MaxAbs ? "maxabs" : "minmax"; }

ScalingMode scaling_mode_from_string(const std::string& name) {
  if (name == "maxabs") return ScalingMode::MaxAbs;
  if (name == "minmax") return ScalingMode::MinMax;
  throw Error(ErrorCode::ConfigError, "unknown scaling mode '" + name + "'");
}

Scaler Scaler::fit(const Eigen::Ref<const Eigen::MatrixXd>& train, ScalingMode mode) {
  if (train.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit a scaler on an empty matrix");
  Scaler s;
  s.mode = mode;
  const auto d = train.cols();
  s.offset = Eigen::VectorXd::Zero(d);
  s.factor = Eigen::VectorXd::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (mode == ScalingMode::MaxAbs) {
      const double m = train.col(j).cwiseAbs().maxCoeff();
      s.factor(j) = m > 0.0 ? 1.0 / m : 0.0;
    } else {
      const double lo = train.col(j).minCoeff();
      const double hi = train.col(j).maxCoeff();
      s.offset(j) = lo;
      s.factor(j) = hi > lo ? 1.0 / (hi - lo) : 0.0;
    }
  }
  return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != factor.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scaler fitted on " + std::to_string(factor.size()) +
                                                  " columns, applied to " + std::to_string(x.cols()));
  }
  return (x.rowwise() - offset.transpose()) * factor.asDiagonal();
}

Eigen::VectorXd Scaler::apply_row(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != factor.size()) throw Error(ErrorCode::DimensionMismatch, "scaler row dimension mismatch");
  return (x - offset).cwiseProduct(factor);
}

ScaledPair scale_features(const Eigen::Ref<const Eigen::MatrixXd>& train,
                          const Eigen::Ref<const Eigen::MatrixXd>& apply_to, ScalingMode mode) {
  ScaledPair out;
  out.scaler = Scaler::fit(train, mode);
  out.train = out.scaler.apply(train);
  out.applied = out.scaler.apply(apply_to);
  return out;
}

std::string vocabulary_to_json(const Vocabulary& vocab) {
  nlohmann::ordered_json j;
  j["field"] = to_string(vocab.field());
  j["n_docs"] = vocab.n_docs();
  auto& toks = j["tokens"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    toks.push_back({{"token", vocab.tokens()[i]}, {"index", i}, {"df", vocab.df()[i]}});
  }
  return j.dump(1);
}

Vocabulary vocabulary_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto field_name = j.at("field").get<std::string>();
    const TokenField field = field_name == "process" ? TokenField::Process : TokenField::Domain;
    if (field_name != "process" && field_name != "domain") throw Error(ErrorCode::FormatError, "bad field tag");
    const auto& toks = j.at("tokens");
    std::vector<std::string> tokens(toks.size());
    std::vector<std::size_t> df(toks.size());
    std::vector<bool> filled(toks.size(), false);
    for (const auto& t : toks) {
      const auto idx = t.at("index").get<std::size_t>();
      if (idx >= toks.size() || filled[idx]) throw Error(ErrorCode::FormatError, "vocabulary indices not dense");
      filled[idx] = true;
      tokens[idx] = t.at("token").get<std::string>();
      df[idx] = t.at("df").get<std::size_t>();
    }
    return Vocabulary(field, j.at("n_docs").get<std::size_t>(), std::move(tokens), std::move(df));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("vocabulary json: ") + e.what());
  }
}

void write_triplets(std::ostream& out, std::span<const FeatureVector> rows) {
  out << "row,col,value\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::SparseVector<double>::InnerIterator it(rows[r].values); it; ++it) {
      out << r << ',' << it.index() << ',' << detail::format_double(it.value()) << '\n';
    }
  }
}

std::string feature_header_json(std::span<const FeatureVector> rows, Eigen::Index dim) {
  nlohmann::ordered_json j;
  j["schema"] = "cuprof.features/1";
  j["dim"] = dim;
  j["rows"] = rows.size();
  auto& labels = j["labels"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) labels.push_back(r.label.value_or(""));
  return j.dump();
}

std::vector<FeatureVector> read_feature_matrix(std::istream& triplets, const std::string& header_json) {
  Eigen::Index dim = 0;
  std::vector<std::string> labels;
  try {
    const auto j = nlohmann::json::parse(header_json);
    dim = j.at("dim").get<Eigen::Index>();
    labels = j.at("labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("feature header: ") + e.what());
  }
  std::vector<std::vector<std::pair<Eigen::Index, double>>> entries(labels.size());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(triplets, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("row,", 0) == 0) continue;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    const auto r = f.size() == 3 ? detail::parse_number<std::size_t>(f[0]) : std::nullopt;
    const auto c = f.size() == 3 ? detail::parse_number<Eigen::Index>(f[1]) : std::nullopt;
    const auto v = f.size() == 3 ? detail::parse_number<double>(f[2]) : std::nullopt;
    if (!r || !c || !v || *r >= labels.size() || *c < 0 || *c >= dim) {
      throw Error(ErrorCode::FormatError, "triplet line " + std::to_string(line_no));
    }
    entries[*r].emplace_back(*c, *v);
  }
  std::vector<FeatureVector> rows(labels.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& e = entries[r];
    std::sort(e.begin(), e.end());
    rows[r].values.resize(dim);
    for (const auto& [c, v] : e) rows[r].values.insertBack(c) = v;
    if (!labels[r].empty()) rows[r].label = labels[r];
  }
  return rows;
}

}  // namespace cuprof
