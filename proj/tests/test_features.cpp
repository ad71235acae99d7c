#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cuprof/features.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cuprof;

namespace {

UserDataset rows_with_clicks(std::vector<std::uint32_t> clicks) {
  UserDataset ds;
  ds.user_id = "u";
  for (std::size_t i = 0; i < clicks.size(); ++i) {
    ActivityMinute m;
    m.minute_epoch = 1000 + static_cast<std::int64_t>(i) * 3;
    m.clicks = clicks[i];
    m.processes = {"p" + std::to_string(i % 2)};
    ds.minutes.push_back(m);
  }
  return ds;
}

FeatureWindow doc(std::vector<std::string> procs, std::vector<std::string> doms = {}) {
  FeatureWindow w;
  w.process_doc = std::move(procs);
  w.domain_doc = std::move(doms);
  return w;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("slide_windows counts and sums") {
    CHECK(slide_windows(rows_with_clicks({1, 1, 1, 1, 1}), {3}).size() == 3);

    const auto ds = rows_with_clicks({1, 2, 4});
    const auto w = slide_windows(ds, {2});
    REQUIRE(w.size() == 2);
    CHECK(w[0].clicks_sum == 3);
    CHECK(w[1].clicks_sum == 6);
    CHECK(w[1].end_minute_epoch == ds.minutes[2].minute_epoch);

    const auto ident = slide_windows(ds, {1});
    REQUIRE(ident.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(ident[i].clicks_sum == ds.minutes[i].clicks);
      CHECK(ident[i].process_doc == ds.minutes[i].processes);
    }

    CHECK_THROWS_AS(slide_windows(rows_with_clicks({1, 2}), {3}), Error);
  }

  TEST_CASE("window sums equal brute-force column sums on random fixtures") {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 30; ++trial) {
      UserDataset ds;
      const int n = 5 + static_cast<int>(rng() % 60);
      for (int i = 0; i < n; ++i) {
        ActivityMinute m;
        m.minute_epoch = i * 2;
        m.clicks = rng() % 9;
        m.keystrokes = rng() % 40;
        m.background = rng() % 3 == 0;
        ds.minutes.push_back(m);
      }
      const int t = 1 + static_cast<int>(rng() % 5);
      const auto w = slide_windows(ds, {t});
      REQUIRE(w.size() == static_cast<std::size_t>(n - t + 1));
      for (std::size_t s = 0; s < w.size(); ++s) {
        std::uint64_t c = 0, k = 0, b = 0;
        for (int j = 0; j < t; ++j) {
          c += ds.minutes[s + j].clicks;
          k += ds.minutes[s + j].keystrokes;
          b += ds.minutes[s + j].background;
        }
        CHECK(w[s].clicks_sum == c);
        CHECK(w[s].keystrokes_sum == k);
        CHECK(w[s].background_sum == b);
      }
    }
  }

  TEST_CASE("gap reset keeps windows inside activity sessions") {
    auto ds = rows_with_clicks({1, 1, 1, 1});
    ds.minutes[2].minute_epoch += 500;
    ds.minutes[3].minute_epoch += 500;
    WindowSpec spec{2};
    spec.max_gap_minutes = 60;
    CHECK(slide_windows(ds, spec).size() == 2);
    CHECK(slide_windows(ds, {2}).size() == 3);
  }

  TEST_CASE("fit_vocabulary presence semantics") {
    std::vector<FeatureWindow> ws{doc({"chrome.exe"}), doc({"chrome.exe", "chrome.exe"}), doc({"chrome.exe", "x"})};
    const auto v = fit_vocabulary(ws, TokenField::Process);
    CHECK(v.n_docs() == 3);
    CHECK(v.df()[*v.index_of("chrome.exe")] == 3);
    CHECK(v.df()[*v.index_of("x")] == 1);
    CHECK(*v.index_of("chrome.exe") == 0);
    CHECK(*v.index_of("x") == 1);
    CHECK(v.idf(0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(fit_vocabulary(std::vector<FeatureWindow>{}, TokenField::Domain), Error);
  }

  TEST_CASE("fit_vocabulary df matches brute-force set membership") {
    std::vector<FeatureWindow> ws{doc({"a", "b", "a"}), doc({"b", "c"}), doc({"d"}), doc({"a", "d", "d", "e"})};
    const auto v = fit_vocabulary(ws, TokenField::Process);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::size_t df = 0;
      for (const auto& w : ws) {
        std::set<std::string> s(w.process_doc.begin(), w.process_doc.end());
        df += s.count(v.tokens()[i]);
      }
      CHECK(v.df()[i] == df);
    }
    CHECK(v.tokens() == std::vector<std::string>{"a", "b", "c", "d", "e"});
  }

  TEST_CASE("tfidf matches the brute-force oracle") {
    std::vector<FeatureWindow> corpus{doc({"a", "b"}), doc({"a"}), doc({"c"})};
    const auto vp = fit_vocabulary(corpus, TokenField::Process);
    const auto vd = fit_vocabulary(corpus, TokenField::Domain);
    const auto q = doc({"a", "a", "b"});
    const auto fv = tfidf_vectorize(q, vp, vd);
    CHECK(fv.dim() == 3 + 3);

    std::vector<std::vector<std::string>> docs;
    for (const auto& w : corpus) docs.push_back(w.process_doc);
    const auto expected = oracle::tfidf(docs, q.process_doc);
    const Eigen::VectorXd dense = fv.values;
    for (const auto& [tok, val] : expected) {
      CHECK(std::abs(dense(kNumericFeatures + static_cast<Eigen::Index>(*vp.index_of(tok))) - val) <= 1e-12);
    }
    // Hand values: idf(a)=ln(4/3)+1, idf(b)=ln 2+1, tf a=2, b=1.
    const double a = 2 * (std::log(4.0 / 3.0) + 1), b = std::log(2.0) + 1;
    CHECK(dense(3) == doctest::Approx(a / std::hypot(a, b)));
    CHECK(dense(4) == doctest::Approx(b / std::hypot(a, b)));
    CHECK(dense(5) == 0.0);
  }

  TEST_CASE("empty and out-of-vocabulary documents") {
    std::vector<FeatureWindow> corpus{doc({"a"}, {"x.org"})};
    const auto vp = fit_vocabulary(corpus, TokenField::Process);
    const auto vd = fit_vocabulary(corpus, TokenField::Domain);
    auto w = doc({}, {"unknown.org"});
    w.clicks_sum = 4;
    const auto fv = tfidf_vectorize(w, vp, vd);
    CHECK(fv.values.nonZeros() == 1);
    CHECK(fv.values.coeff(kClicksIndex) == 4.0);
  }

  TEST_CASE("tf-idf blocks have unit or zero norm and idf orders by df") {
    std::mt19937 rng(9);
    std::vector<FeatureWindow> corpus;
    for (int i = 0; i < 40; ++i) {
      FeatureWindow w;
      for (int j = 0; j < 6; ++j) {
        if (rng() % 3) w.process_doc.push_back("p" + std::to_string(rng() % 12));
        if (rng() % 2) w.domain_doc.push_back("d" + std::to_string(rng() % 9));
      }
      corpus.push_back(w);
    }
    const auto vp = fit_vocabulary(corpus, TokenField::Process);
    const auto vd = fit_vocabulary(corpus, TokenField::Domain);
    for (const auto& w : corpus) {
      const Eigen::VectorXd x = tfidf_vectorize(w, vp, vd).values;
      const double np = x.segment(3, static_cast<Eigen::Index>(vp.size())).norm();
      const double nd = x.tail(static_cast<Eigen::Index>(vd.size())).norm();
      CHECK((std::abs(np - 1.0) < 1e-12 || np == 0.0));
      CHECK((std::abs(nd - 1.0) < 1e-12 || nd == 0.0));
    }
    for (std::size_t i = 0; i < vp.size(); ++i) {
      for (std::size_t j = 0; j < vp.size(); ++j) {
        if (vp.df()[i] < vp.df()[j]) CHECK(vp.idf(i) >= vp.idf(j));
      }
    }
  }

  TEST_CASE("scaling modes") {
    Eigen::MatrixXd x(2, 3);
    x << 2, 2, 0, -4, 4, 0;
    const auto m = scale_features(x, x, ScalingMode::MaxAbs);
    CHECK(m.train(0, 0) == 0.5);
    CHECK(m.train(1, 0) == -1.0);
    CHECK(m.train.col(2).isZero());
    const auto mm = scale_features(x, x, ScalingMode::MinMax);
    CHECK(mm.train(0, 1) == 0.0);
    CHECK(mm.train(1, 1) == 1.0);
    CHECK(mm.train.col(2).isZero());
    CHECK_THROWS_AS(scale_features(x, Eigen::MatrixXd::Zero(2, 2), ScalingMode::MaxAbs), Error);
  }

  TEST_CASE("rescaling already-scaled data is the identity") {
    std::mt19937 rng(2);
    std::normal_distribution<double> g(0, 3);
    Eigen::MatrixXd x(30, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng);
    x.col(5).setConstant(2.0);
    for (auto mode : {ScalingMode::MaxAbs, ScalingMode::MinMax}) {
      const auto once = scale_features(x, x, mode);
      const auto twice = scale_features(once.train, once.train, mode);
      CHECK((twice.train - once.train).cwiseAbs().maxCoeff() <= 1e-15);
      CHECK(once.train.maxCoeff() <= 1.0);
      CHECK(once.train.minCoeff() >= (mode == ScalingMode::MaxAbs ? -1.0 : 0.0));
    }
  }

  TEST_CASE("vocabulary and triplet persistence") {
    std::vector<FeatureWindow> corpus{doc({"a", "b"}, {"x"}), doc({"b"}, {"y", "x"})};
    const auto vp = fit_vocabulary(corpus, TokenField::Process);
    const auto vd = fit_vocabulary(corpus, TokenField::Domain);
    const auto back = vocabulary_from_json(vocabulary_to_json(vd));
    CHECK(back.tokens() == vd.tokens());
    CHECK(back.df() == vd.df());
    CHECK(back.n_docs() == vd.n_docs());

    std::vector<FeatureVector> rows;
    for (auto& w : corpus) {
      rows.push_back(tfidf_vectorize(w, vp, vd));
      rows.back().label = "u1";
    }
    std::stringstream trip;
    write_triplets(trip, rows);
    const auto header = feature_header_json(rows, rows[0].dim());
    const auto read = read_feature_matrix(trip, header);
    REQUIRE(read.size() == rows.size());
    CHECK(to_dense(read) == to_dense(rows));
    CHECK(read[1].label == std::optional<std::string>("u1"));
  }
}
