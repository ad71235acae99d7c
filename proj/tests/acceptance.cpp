// Acceptance checks: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cuprof/drift.hpp"
#include "cuprof/evaluation.hpp"
#include "cuprof/features.hpp"
#include "cuprof/importance.hpp"
#include "cuprof/pipeline.hpp"
#include "cuprof/protocols.hpp"
#include "cuprof/som.hpp"
#include "cuprof/synth.hpp"
#include "cuprof/timeseries.hpp"
#include "oracles.hpp"

using namespace cuprof;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<UserDataset> others_of(const std::vector<UserDataset>& all, std::size_t i) {
  std::vector<UserDataset> out;
  for (std::size_t j = 0; j < all.size(); ++j) {
    if (j != i) out.push_back(all[j]);
  }
  return out;
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

// 1. Five synthetic drift cases are categorized as injected.
Outcome drift_round_trip() {
  CohortOptions o;
  o.n_users = 2;
  o.days = 56;
  const auto users = make_cohort(o, 2024);
  int hits = 0;
  std::string labels;
  for (auto kind : {DriftLabel::NoDrift, DriftLabel::Sudden, DriftLabel::Gradual, DriftLabel::Incremental,
                    DriftLabel::Recurring}) {
    const auto d = synthesize_drift_dataset(kind, users[0], users[1], 5);
    const auto got = categorize_drift(drift_curve(d.data, CurveParams{}, 5)).label;
    hits += got == kind;
    labels += std::string(labels.empty() ? "" : " ") + to_string(kind) + "->" + to_string(got);
  }
  return {hits == 5, std::to_string(hits) + "/5 (" + labels + ")"};
}

// 2. Daily schedule: T = 24 h and autocorrelation peaks at 24k +/- 1.
Outcome periodicity_recovery() {
  const auto x = build_hourly_series(office_user(56, 8), true).as_vector();
  const auto psd = periodogram_period(x);
  const auto ac = autocorrelation_check(x, psd.period, 5, 1);
  bool peaks = ac.ok.size() == 5;
  for (std::size_t k = 0; k < ac.ok.size(); ++k) {
    const auto expect = static_cast<Eigen::Index>(24 * (k + 1));
    peaks = peaks && ac.ok[k] && std::abs(ac.peak_lag[k] - expect) <= 1;
  }
  return {psd.period == 24.0 && peaks, "T=" + fmt("%.3f", psd.period) + " h, peaks k=1..5 " + (peaks ? "ok" : "missing")};
}

// 3. Entropy of the structured series sits below its shuffles; shuffled controls do not.
Outcome surrogate_discrimination() {
  const auto x = build_hourly_series(office_user(56, 8), true).as_vector();
  const auto r = surrogate_test(x, SurrogateMetric::Entropy, make_surrogates(x, 100, 9));
  const bool structured = r.n_below == 0 && r.p_value <= 0.02 && r.value < r.surrogate_mean;

  int not_rejected = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto v = to_std(x);
    std::mt19937_64 rng(1000 + s);
    std::shuffle(v.begin(), v.end(), rng);
    const Eigen::VectorXd shuffled = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    not_rejected += surrogate_test(shuffled, SurrogateMetric::Entropy, make_surrogates(shuffled, 100, s)).p_value > 0.05;
  }
  return {structured && not_rejected >= 45,
          "SampEn " + fmt("%.3f", r.value) + " vs surrogate mean " + fmt("%.3f", r.surrogate_mean) + ", p=" +
              fmt("%.4f", r.p_value) + "; shuffled controls p>0.05 in " + std::to_string(not_rejected) + "/50"};
}

// 4. Offline F non-decreasing in window size; online beats offline at t=60 for linear models.
Outcome classifier_ordering() {
  CohortOptions o;
  o.n_users = 10;
  o.days = 14;
  o.shifted_users = 3;
  const auto users = make_cohort(o, 7);
  const int windows[] = {1, 2, 5, 10, 30, 60};
  std::vector<double> rf, hinge;
  double hinge_online = 0, perc_offline = 0, perc_online = 0;
  for (int t : windows) {
    double f_rf = 0, f_h = 0;
    for (std::size_t u = 0; u < users.size(); ++u) {
      const auto others = others_of(users, u);
      const auto task = assemble_binary_task(users[u], others, WindowSpec{t, 1, std::nullopt}, 11);
      const auto d = featurize_task(task);
      f_rf += evaluate_offline(train_offline_binary(ModelKind::RandomForest, d.x_train, d.y_train, 3), d.x_test,
                               d.y_test).fscore;
      const auto h = train_offline_binary(ModelKind::SgdHinge, d.x_train, d.y_train, 3);
      f_h += evaluate_offline(h, d.x_test, d.y_test).fscore;
      if (t == 60) {
        const auto order = chronological_order(task.test);
        const Eigen::MatrixXd xs = d.x_test(order, Eigen::all);
        const Labels ys = d.y_test(order);
        hinge_online += evaluate_prequential(h, xs, ys).fscore;
        const auto p = train_offline_binary(ModelKind::Perceptron, d.x_train, d.y_train, 3);
        perc_offline += evaluate_offline(p, d.x_test, d.y_test).fscore;
        perc_online += evaluate_prequential(p, xs, ys).fscore;
      }
    }
    rf.push_back(f_rf / 10);
    hinge.push_back(f_h / 10);
  }
  auto monotone = [](const std::vector<double>& f) {
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (f[i] < f[i - 1] - 0.02) return false;
    }
    return true;
  };
  auto series = [](const std::vector<double>& f) {
    std::string s;
    for (double v : f) s += (s.empty() ? "" : ",") + fmt("%.3f", v);
    return s;
  };
  const bool online = hinge_online / 10 > hinge.back() && perc_online / 10 > perc_offline / 10;
  return {monotone(rf) && monotone(hinge) && online,
          "RF F " + series(rf) + "; hinge F " + series(hinge) + "; t=60 online/offline hinge " +
              fmt("%.3f", hinge_online / 10) + "/" + fmt("%.3f", hinge.back()) + ", perceptron " +
              fmt("%.3f", perc_online / 10) + "/" + fmt("%.3f", perc_offline / 10)};
}

// 5. Isolation-forest AUC > 0.90 at t=10; one-class linear F above isolation forest at equal windows.
Outcome oneclass_sanity() {
  CohortOptions o;
  o.n_users = 10;
  o.days = 14;
  const auto users = make_cohort(o, 7);
  double auc10 = 0;
  bool ordered = true;
  std::string cells;
  for (int t : {1, 2, 5, 10, 30, 60}) {
    double f_if = 0, f_oc = 0;
    for (std::size_t u = 0; u < users.size(); ++u) {
      const auto task = assemble_oneclass_task(users[u], others_of(users, u), WindowSpec{t, 1, std::nullopt});
      const auto d = featurize_task(task);
      const auto iso = train_offline_oneclass(ModelKind::IsolationForest, d.x_train, 3);
      const auto oc = train_offline_oneclass(ModelKind::OneClassLinear, d.x_train, 3);
      f_if += evaluate_offline(iso, d.x_test, d.y_test).fscore;
      f_oc += evaluate_offline(oc, d.x_test, d.y_test).fscore;
      if (t == 10) {
        std::vector<double> s;
        std::vector<int> l;
        for (Eigen::Index i = 0; i < d.x_test.rows(); ++i) {
          s.push_back(-score(iso, d.x_test.row(i).transpose()));
          l.push_back(d.y_test(i));
        }
        auc10 += roc_auc(s, l);
      }
    }
    ordered = ordered && f_oc > f_if;
    cells += " t=" + std::to_string(t) + " " + fmt("%.3f", f_oc / 10) + "/" + fmt("%.3f", f_if / 10);
  }
  auc10 /= 10;
  return {auc10 > 0.90 && ordered, "IF AUC@10 " + fmt("%.3f", auc10) + "; F one-class linear/IF:" + cells};
}

// 6. Users differing only in domains are told apart by domain features.
Outcome top_feature_attribution() {
  CohortOptions o;
  o.n_users = 10;
  o.days = 14;
  o.domains_only = true;
  const auto users = make_cohort(o, 21);
  const ImportanceOptions io;  // t=10, stride 1, 100 trees
  const auto report = feature_importance_report(users, io, 4);
  int worst = 10;
  for (const auto& u : report.users) {
    int domains = 0;
    for (const auto& [name, imp] : u.top) domains += is_domain_feature(name);
    worst = std::min(worst, domains);
  }
  const bool all = report.users.size() == users.size();
  return {all && worst >= 9, "min domain features in a top-10 list: " + std::to_string(worst) + "/10 over " +
                                 std::to_string(report.users.size()) + " users"};
}

// 7. Oracle equivalence.
Outcome oracle_equivalence() {
  std::vector<std::string> failed;

  // tf-idf on a 4-document corpus.
  {
    const std::vector<std::vector<std::string>> docs{{"a", "b", "a"}, {"b", "c"}, {"d"}, {"a", "d", "d", "e"}};
    std::vector<FeatureWindow> corpus;
    for (const auto& d : docs) {
      FeatureWindow w;
      w.process_doc = d;
      corpus.push_back(w);
    }
    const auto vp = fit_vocabulary(corpus, TokenField::Process);
    const auto vd = fit_vocabulary(corpus, TokenField::Domain);
    double worst = 0;
    for (const auto& w : corpus) {
      const Eigen::VectorXd v = tfidf_vectorize(w, vp, vd).values;
      const auto expect = oracle::tfidf(docs, w.process_doc);
      for (const auto& tok : vp.tokens()) {
        const auto it = expect.find(tok);
        const double e = it == expect.end() ? 0.0 : it->second;
        worst = std::max(worst, std::abs(v(kNumericFeatures + static_cast<Eigen::Index>(*vp.index_of(tok))) - e));
      }
    }
    if (worst > 1e-12) failed.push_back("tfidf");
  }

  // Sample entropy vs O(n^2) counting, n <= 300.
  {
    std::mt19937_64 rng(77);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
      std::uniform_int_distribution<int> len(30, 300), val(0, 9);
      Eigen::VectorXd x(len(rng));
      for (auto& e : x) e = val(rng);
      const double expect = oracle::sample_entropy(oracle::znorm(to_std(x)), 2, 0.2);
      if (!std::isfinite(expect)) continue;
      worst = std::max(worst, std::abs(sample_entropy(x) - expect));
    }
    if (worst > 1e-12) failed.push_back("sample entropy");
  }

  // DFT vs the naive sum up to n = 2048.
  {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    double worst = 0;
    for (int n : {2, 3, 64, 100, 511, 1000, 1344, 2048}) {
      Eigen::VectorXd x(n);
      for (auto& e : x) e = g(rng);
      const auto fast = dft(x);
      const auto slow = oracle::naive_dft(to_std(x));
      for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast(k) - slow[static_cast<std::size_t>(k)]));
    }
    if (worst > 1e-9) failed.push_back("dft");
  }

  // Metric identities over 1000 random confusion matrices.
  {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> c(0, 60);
    bool ok = true;
    for (int k = 0; k < 1000; ++k) {
      const std::uint64_t tp = c(rng), fp = c(rng), tn = c(rng), fn = c(rng);
      const auto m = compute_metrics(tp, fp, tn, fn);
      const double p = tp + fp ? double(tp) / double(tp + fp) : 0.0;
      const double r = tp + fn ? double(tp) / double(tp + fn) : 0.0;
      const double f = tp ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
      ok = ok && std::abs(m.precision - p) <= 1e-12 && std::abs(m.recall - r) <= 1e-12 &&
           std::abs(m.fscore - f) <= 1e-12;
    }
    if (!ok) failed.push_back("metrics");
  }

  // Surrogates preserve the multiset.
  {
    const auto x = build_hourly_series(office_user(28, 3), true).as_vector();
    auto sorted = to_std(x);
    std::sort(sorted.begin(), sorted.end());
    bool ok = true;
    for (const auto& s : make_surrogates(x, 100, 7)) {
      auto v = to_std(s);
      std::sort(v.begin(), v.end());
      ok = ok && v == sorted;
    }
    if (!ok) failed.push_back("surrogate multiset");
  }

  // SOM quantization error non-increasing over the final epochs.
  {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.3);
    Eigen::MatrixXd x(200, 4);
    for (int i = 0; i < 200; ++i) {
      for (int k = 0; k < 4; ++k) x(i, k) = (i < 100 ? 0.0 : 5.0) + g(rng);
    }
    const auto grid = som_train(x, {8, 8, 30, SomInit::Pca}, 3);
    bool ok = grid.quantization_error.size() == 30;
    for (std::size_t e = 15; ok && e < 30; ++e) {
      ok = grid.quantization_error[e] <= grid.quantization_error[e - 1] + 1e-12;
    }
    if (!ok) failed.push_back("som qe");
  }

  std::string detail = "tfidf, sample entropy, dft, metrics, surrogate multiset, som qe";
  if (!failed.empty()) {
    detail = "failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

std::vector<std::pair<std::string, std::string>> tree_bytes(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out.emplace_back(fs::relative(e.path(), root).generic_string(), s.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 8. Two full pipeline runs produce identical bundles and images.
Outcome determinism() {
  const auto base = fs::temp_directory_path() / "cuprof_acceptance";
  fs::remove_all(base);
  auto run = [&](const std::string& name, int jobs) {
    PipelineConfig c;
    c.seed = 11;
    c.out_dir = base / name;
    c.window_sizes = {5, 10};
    c.forest_trees = 20;
    c.isolation_trees = 50;
    c.synth_users = 4;
    c.synth_days = 21;
    c.som_width = 8;
    c.som_height = 8;
    c.som_epochs = 10;
    c.drift_curve_hours = 48;
    c.drift_step_hours = 4;
    c.surrogates = 20;
    c.jobs = jobs;
    run_pipeline(c);
    return tree_bytes(c.out_dir);
  };
  const auto a = run("a", 1);
  const auto b = run("b", 2);
  std::size_t pgm = 0;
  for (const auto& [path, bytes] : a) pgm += path.ends_with(".pgm");
  const bool same = a == b && !a.empty();
  fs::remove_all(base);
  return {same && pgm > 0, std::to_string(a.size()) + " files (" + std::to_string(pgm) + " PGM) " +
                               (same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"drift round-trip", drift_round_trip},
      {"periodicity recovery", periodicity_recovery},
      {"surrogate discrimination", surrogate_discrimination},
      {"classifier ordering", classifier_ordering},
      {"one-class sanity", oneclass_sanity},
      {"top-feature attribution", top_feature_attribution},
      {"oracle equivalence", oracle_equivalence},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (i == 0 && secs >= 300.0) r.pass = false;
    failures += !r.pass;
    std::printf("%s %zu %s: %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                r.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
