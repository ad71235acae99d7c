#include "cuprof/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cuprof/drift.hpp"
#include "cuprof/evaluation.hpp"
#include "cuprof/importance.hpp"
#include "cuprof/model_io.hpp"
#include "cuprof/protocols.hpp"
#include "cuprof/report.hpp"
#include "cuprof/rng.hpp"
#include "cuprof/som.hpp"
#include "cuprof/synth.hpp"
#include "cuprof/timeseries.hpp"

namespace cuprof {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr Stage kAllStages[] = {Stage::Synth,    Stage::Ingest, Stage::Featurize, Stage::Train,      Stage::Evaluate,
                                Stage::Report,   Stage::Som,    Stage::Drift,     Stage::Periodicity};

std::string strip_code(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(to_string(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

// Per-user failures that only mean "not enough data for this analysis".
bool is_insufficient(ErrorCode code) {
  switch (code) {
    case ErrorCode::DatasetTooShort:
    case ErrorCode::InsufficientDays:
    case ErrorCode::InsufficientSpan:
    case ErrorCode::CurveTooShort:
    case ErrorCode::WeekTooSparse:
    case ErrorCode::SeriesTooShort:
    case ErrorCode::SeriesTooShortForLag:
    case ErrorCode::EmptyCorpus:
    case ErrorCode::AllZeroSeries:
    case ErrorCode::ZeroVarianceSeries:
      return true;
    default:
      return false;
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

fs::path stage_dir(const PipelineConfig& c, Stage s) { return c.out_dir / to_string(s); }

// Collects a stage's outputs and writes its manifest last.
class StageOutput {
 public:
  StageOutput(const PipelineConfig& c, Stage stage) : dir_(stage_dir(c, stage)) {
    result_.stage = stage;
    result_.seed = stage_seed(c.seed_or_throw(), stage);
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }
  std::uint64_t seed() const { return result_.seed; }

  void write(const std::string& rel, const std::string& text) {
    write_text(dir_ / rel, text);
    add(rel);
  }
  void add(const std::string& rel) {
    std::lock_guard lock(mu_);
    result_.files.push_back(rel);
  }
  void warn(std::string message) {
    std::lock_guard lock(mu_);
    result_.warnings.push_back(std::move(message));
  }
  void warn_all(const std::vector<std::string>& messages) {
    for (const auto& m : messages) warn(m);
  }

  StageResult finish(std::uint64_t config_seed, const ojson& extra = ojson::object()) {
    // Parallel jobs append in completion order.
    std::sort(result_.files.begin(), result_.files.end());
    std::sort(result_.warnings.begin(), result_.warnings.end());
    ojson m;
    m["schema"] = kManifestSchema;
    m["stage"] = to_string(result_.stage);
    m["config_seed"] = config_seed;
    m["seed"] = result_.seed;
    auto files = ojson::array();
    for (const auto& f : result_.files) {
      files.push_back({{"path", f}, {"bytes", fs::file_size(dir_ / f)}});
    }
    m["files"] = std::move(files);
    m["warnings"] = result_.warnings;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_text(dir_ / "manifest.json", m.dump(2) + "\n");
    return result_;
  }

 private:
  fs::path dir_;
  StageResult result_;
  std::mutex mu_;
};

ojson read_manifest(const PipelineConfig& c, Stage s) {
  const auto path = stage_dir(c, s) / "manifest.json";
  if (!fs::exists(path)) {
    throw Error(ErrorCode::IoError, std::string("no ") + to_string(s) + " output under " + c.out_dir.string() +
                                        "; run the " + to_string(s) + " stage first");
  }
  return ojson::parse(read_text(path));
}

std::vector<UserDataset> load_ingested(const PipelineConfig& c) {
  const auto manifest = read_manifest(c, Stage::Ingest);
  std::vector<UserDataset> out;
  for (const auto& user : manifest.at("users")) {
    const auto id = user.get<std::string>();
    std::istringstream in(read_text(stage_dir(c, Stage::Ingest) / (id + ".csv")));
    out.push_back(read_activity_csv(in, id));
  }
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "ingest produced no users");
  return out;
}

std::uint64_t user_seed(std::uint64_t stage_seed, std::size_t user, std::uint64_t salt = 0) {
  return mix64(stage_seed ^ mix64(static_cast<std::uint64_t>(user) + 1) ^ mix64(salt + 0x9e37));
}

TrainingOptions training_options(const PipelineConfig& c) {
  TrainingOptions o;
  o.forest.n_trees = c.forest_trees;
  o.isolation.n_trees = c.isolation_trees;
  return o;
}

std::vector<UserDataset> others_of(const std::vector<UserDataset>& all, std::size_t i) {
  std::vector<UserDataset> out;
  for (std::size_t j = 0; j < all.size(); ++j) {
    if (j != i) out.push_back(all[j]);
  }
  return out;
}

// ---- synth ----------------------------------------------------------------

StageResult run_synth(const PipelineConfig& c) {
  StageOutput out(c, Stage::Synth);
  CohortOptions opts;
  opts.n_users = c.synth_users;
  opts.days = c.synth_days;
  opts.domains_only = c.synth_domains_only;
  opts.shifted_users = c.synth_shifted_users;
  const auto cohort = make_cohort(opts, out.seed());

  DnsMap dns;
  auto users = ojson::array();
  for (const auto& ds : cohort) {
    const auto logs = synthesize_raw_logs(ds, dns);
    write_raw_logs(out.dir() / "logs" / ds.user_id, logs);
    for (const char* f : {"process.log", "network.log", "click.log", "keystroke.log"}) {
      out.add("logs/" + ds.user_id + "/" + f);
    }
    users.push_back(ds.user_id);
  }
  write_dns_map(out.dir() / "dns_map.csv", dns);
  out.add("dns_map.csv");
  return out.finish(c.seed_or_throw(), {{"users", users}});
}

// ---- ingest ---------------------------------------------------------------

StageResult run_ingest(const PipelineConfig& c) {
  const bool from_synth = !c.logs_dir;
  const fs::path logs = from_synth ? stage_dir(c, Stage::Synth) / "logs" : *c.logs_dir;
  if (!fs::is_directory(logs)) {
    throw Error(ErrorCode::ConfigError, "logs_dir is unset and no synth output exists under " + c.out_dir.string());
  }
  std::optional<fs::path> dns_path = c.dns_map;
  if (!dns_path && from_synth && fs::exists(stage_dir(c, Stage::Synth) / "dns_map.csv")) {
    dns_path = stage_dir(c, Stage::Synth) / "dns_map.csv";
  }

  StageOutput out(c, Stage::Ingest);
  DnsMap dns;
  if (dns_path) {
    std::ifstream in(*dns_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + dns_path->string());
    dns = read_dns_map(in);
  }

  std::vector<std::string> users;
  for (const auto& entry : fs::directory_iterator(logs)) {
    if (entry.is_directory()) users.push_back(entry.path().filename().string());
  }
  std::sort(users.begin(), users.end());
  if (users.empty()) throw Error(ErrorCode::EmptyInput, "no user directories under " + logs.string());

  static constexpr std::pair<const char*, EventKind> kFiles[] = {{"process.log", EventKind::ProcessEvent},
                                                                 {"network.log", EventKind::NetworkEvent},
                                                                 {"click.log", EventKind::MouseClick},
                                                                 {"keystroke.log", EventKind::KeystrokeBurst}};
  std::vector<std::size_t> network_events(users.size(), 0);
  std::vector<std::vector<std::string>> warnings(users.size());
  parallel_for(users.size(), c.jobs, [&](std::size_t i) {
    std::vector<RawEventRecord> records;
    for (const auto& [name, kind] : kFiles) {
      const auto path = logs / users[i] / name;
      if (!fs::exists(path)) continue;
      std::ifstream in(path);
      if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
      auto report = parse_event_log(in, kind);
      if (!report.issues.empty()) {
        warnings[i].push_back(users[i] + "/" + name + ": skipped " + std::to_string(report.issues.size()) +
                              " malformed line(s), first at line " + std::to_string(report.issues.front().line_no));
      }
      if (kind == EventKind::NetworkEvent) network_events[i] = report.records.size();
      records.insert(records.end(), std::make_move_iterator(report.records.begin()),
                     std::make_move_iterator(report.records.end()));
    }
    resolve_domains(records, dns);
    const auto ds = build_activity_matrix(records, users[i]);
    validate(ds);
    std::ostringstream csv;
    write_activity_csv(csv, ds);
    out.write(users[i] + ".csv", csv.str());
  });
  for (const auto& w : warnings) out.warn_all(w);

  std::size_t total_network = 0;
  for (auto n : network_events) total_network += n;
  if (!dns_path && total_network > 0) {
    out.warn("no dns_map: " + std::to_string(total_network) + " network events keep their IP as the domain token");
  }
  return out.finish(c.seed_or_throw(), {{"users", users}});
}

// ---- featurize ------------------------------------------------------------

StageResult run_featurize(const PipelineConfig& c) {
  const auto data = load_ingested(c);
  StageOutput out(c, Stage::Featurize);
  const auto n_windows = c.window_sizes.size();
  parallel_for(data.size() * n_windows, c.jobs, [&](std::size_t job) {
    const auto& ds = data[job / n_windows];
    const int t = c.window_sizes[job % n_windows];
    const WindowSpec spec{t, c.window_stride, std::nullopt};
    const auto windows = slide_windows(ds, spec);
    const auto first_week = slide_windows(rows_through_day(ds, kTrainingDays), spec);
    if (first_week.empty()) {
      out.warn(ds.user_id + ": no first-week windows at t=" + std::to_string(t));
      return;
    }
    const auto procs = fit_vocabulary(first_week, TokenField::Process);
    const auto doms = fit_vocabulary(first_week, TokenField::Domain);
    std::vector<FeatureVector> rows;
    rows.reserve(windows.size());
    for (const auto& w : windows) rows.push_back(tfidf_vectorize(w, procs, doms));
    const auto base = "t" + std::to_string(t) + "/" + ds.user_id;
    std::ostringstream triplets;
    write_triplets(triplets, rows);
    out.write(base + ".triplets.csv", triplets.str());
    out.write(base + ".header.json",
              feature_header_json(rows, static_cast<Eigen::Index>(kNumericFeatures + procs.size() + doms.size())));
    ojson vocab;
    vocab["processes"] = ojson::parse(vocabulary_to_json(procs));
    vocab["domains"] = ojson::parse(vocabulary_to_json(doms));
    out.write(base + ".vocab.json", vocab.dump(2) + "\n");
  });
  return out.finish(c.seed_or_throw());
}

// ---- train / evaluate -----------------------------------------------------

struct TaskJob {
  std::size_t user = 0;
  int window = 0;
  int run = 0;
};

std::vector<TaskJob> task_jobs(const PipelineConfig& c, std::size_t n_users) {
  std::vector<TaskJob> jobs;
  for (std::size_t u = 0; u < n_users; ++u) {
    for (int t : c.window_sizes) {
      for (int r = 0; r < c.runs; ++r) jobs.push_back({u, t, r});
    }
  }
  return jobs;
}

// Shared by train and evaluate so both rebuild the same negative split.
std::uint64_t task_seed(std::uint64_t seed, const TaskJob& j) {
  return user_seed(mix64(seed ^ 0x7461736b), j.user, static_cast<std::uint64_t>(j.run));
}

WindowTask build_task(const std::vector<UserDataset>& data, const TaskJob& j, bool binary, const PipelineConfig& c) {
  const WindowSpec spec{j.window, c.window_stride, std::nullopt};
  const auto others = others_of(data, j.user);
  if (binary) return assemble_binary_task(data[j.user], others, spec, task_seed(c.seed_or_throw(), j));
  return assemble_oneclass_task(data[j.user], others, spec);
}

std::string bundle_name(const std::string& user, const TaskJob& j, ModelKind kind) {
  return "t" + std::to_string(j.window) + "/" + user + "_" + to_string(kind) + "_r" + std::to_string(j.run) + ".json";
}

ojson scaler_to_json(const Scaler& s) {
  return {{"mode", to_string(s.mode)},
          {"offset", std::vector<double>(s.offset.data(), s.offset.data() + s.offset.size())},
          {"factor", std::vector<double>(s.factor.data(), s.factor.data() + s.factor.size())}};
}

Scaler scaler_from_json(const ojson& j) {
  Scaler s;
  s.mode = scaling_mode_from_string(j.at("mode").get<std::string>());
  const auto off = j.at("offset").get<std::vector<double>>();
  const auto fac = j.at("factor").get<std::vector<double>>();
  if (off.size() != fac.size()) throw Error(ErrorCode::FormatError, "scaler arrays differ in length");
  s.offset = Eigen::Map<const Eigen::VectorXd>(off.data(), static_cast<Eigen::Index>(off.size()));
  s.factor = Eigen::Map<const Eigen::VectorXd>(fac.data(), static_cast<Eigen::Index>(fac.size()));
  return s;
}

StageResult run_train(const PipelineConfig& c) {
  const auto data = load_ingested(c);
  StageOutput out(c, Stage::Train);
  const auto jobs = task_jobs(c, data.size());
  const auto opts = training_options(c);
  parallel_for(jobs.size(), c.jobs, [&](std::size_t k) {
    const auto& j = jobs[k];
    const auto& user = data[j.user].user_id;
    for (bool binary : {true, false}) {
      std::vector<ModelKind> kinds;
      for (auto m : c.models) {
        if (is_binary(m) == binary) kinds.push_back(m);
      }
      if (kinds.empty()) continue;
      DenseTask dense;
      try {
        dense = featurize_task(build_task(data, j, binary, c), c.scaling);
      } catch (const Error& e) {
        if (!is_insufficient(e.code())) throw;
        out.warn(user + " t=" + std::to_string(j.window) + ": " + e.what());
        continue;
      }
      for (auto kind : kinds) {
        const auto seed = user_seed(out.seed(), j.user, mix64(static_cast<std::uint64_t>(j.window) << 8 | j.run) ^
                                                            static_cast<std::uint64_t>(kind));
        const Model model = binary ? train_offline_binary(kind, dense.x_train, dense.y_train, seed, opts)
                                   : train_offline_oneclass(kind, dense.x_train, seed, opts);
        ojson b;
        b["schema"] = "cuprof.bundle/1";
        b["user"] = user;
        b["window"] = j.window;
        b["stride"] = c.window_stride;
        b["run"] = j.run;
        b["kind"] = to_string(kind);
        b["seed"] = seed;
        b["processes"] = ojson::parse(vocabulary_to_json(dense.processes));
        b["domains"] = ojson::parse(vocabulary_to_json(dense.domains));
        b["scaler"] = scaler_to_json(dense.scaler);
        b["model"] = ojson::parse(model_to_json(model));
        out.write(bundle_name(user, j, kind), b.dump() + "\n");
      }
    }
  });
  return out.finish(c.seed_or_throw());
}

std::optional<double> auc_of(const Model& model, const Eigen::MatrixXd& x, const Labels& y) {
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) (y(i) > 0 ? pos : neg) = true;
  if (!pos || !neg) return std::nullopt;
  const auto kind = kind_of(model);
  // Anomaly scores point away from the target user.
  const double sign = (kind == ModelKind::IsolationForest || kind == ModelKind::HalfSpaceTrees) ? -1.0 : 1.0;
  std::vector<double> scores(static_cast<std::size_t>(x.rows()));
  std::vector<int> labels(scores.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    scores[static_cast<std::size_t>(i)] = sign * score(model, x.row(i).transpose());
    labels[static_cast<std::size_t>(i)] = y(i);
  }
  return roc_auc(scores, labels);
}

ResultRow to_row(const std::string& user, ModelKind kind, const TaskJob& j, const char* mode, const EvalReport& r) {
  ResultRow row;
  row.user = user;
  row.classifier = to_string(kind);
  row.window = j.window;
  row.mode = mode;
  row.run = j.run;
  row.tp = r.tp;
  row.fp = r.fp;
  row.tn = r.tn;
  row.fn = r.fn;
  row.precision = r.precision;
  row.recall = r.recall;
  row.fscore = r.fscore;
  return row;
}

StageResult run_evaluate(const PipelineConfig& c) {
  const auto data = load_ingested(c);
  read_manifest(c, Stage::Train);
  StageOutput out(c, Stage::Evaluate);
  const auto jobs = task_jobs(c, data.size());
  std::vector<std::vector<ResultRow>> rows(jobs.size());
  parallel_for(jobs.size(), c.jobs, [&](std::size_t k) {
    const auto& j = jobs[k];
    const auto& user = data[j.user].user_id;
    for (bool binary : {true, false}) {
      std::optional<WindowTask> task;
      for (auto kind : c.models) {
        if (is_binary(kind) != binary) continue;
        const auto path = stage_dir(c, Stage::Train) / bundle_name(user, j, kind);
        if (!fs::exists(path)) continue;  // skipped at training time with a warning
        if (!task) task = build_task(data, j, binary, c);
        const auto b = ojson::parse(read_text(path));
        const Model model = model_from_json(b.at("model").dump());
        const auto procs = vocabulary_from_json(b.at("processes").dump());
        const auto doms = vocabulary_from_json(b.at("domains").dump());
        const auto scaler = scaler_from_json(b.at("scaler"));

        std::vector<FeatureVector> fv;
        fv.reserve(task->test.size());
        for (const auto& w : task->test) fv.push_back(tfidf_vectorize(w, procs, doms));
        const Eigen::MatrixXd x = scaler.apply(to_dense(fv));

        auto offline = to_row(user, kind, j, "offline", evaluate_offline(model, x, task->test_labels));
        offline.auc = auc_of(model, x, task->test_labels);
        rows[k].push_back(std::move(offline));

        if (is_online_capable(kind)) {
          const auto order = chronological_order(task->test);
          const Eigen::MatrixXd xs = x(order, Eigen::all);
          const Labels ys = task->test_labels(order);
          rows[k].push_back(to_row(user, kind, j, "prequential", evaluate_prequential(model, xs, ys)));
        }
      }
    }
  });

  std::vector<ResultRow> all;
  for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  std::ostringstream csv;
  write_results_csv(csv, all);
  out.write("results.csv", csv.str());

  if (data.size() >= 2) {
    ImportanceOptions io;
    io.window = WindowSpec{10, c.window_stride, std::nullopt};
    io.forest.n_trees = c.forest_trees;
    io.scaling = c.scaling;
    const auto imp = feature_importance_report(data, io, out.seed());
    out.warn_all(imp.warnings);
    std::ostringstream top;
    top << "user,rank,feature,importance,domain_feature\n";
    char buf[64];
    for (const auto& u : imp.users) {
      for (std::size_t r = 0; r < u.top.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%.6f", u.top[r].second);
        top << u.user_id << ',' << r + 1 << ',' << u.top[r].first << ',' << buf << ','
            << (is_domain_feature(u.top[r].first) ? "true" : "false") << '\n';
      }
    }
    out.write("top_features.csv", top.str());
  }
  return out.finish(c.seed_or_throw());
}

// ---- report ---------------------------------------------------------------

StageResult run_report(const PipelineConfig& c) {
  const auto path = stage_dir(c, Stage::Evaluate) / "results.csv";
  if (!fs::exists(path)) throw Error(ErrorCode::IoError, "no evaluation results at " + path.string());
  std::istringstream in(read_text(path));
  const auto results = read_results_csv(in);
  if (results.empty()) throw Error(ErrorCode::EmptyInput, "evaluation results are empty");

  StageOutput out(c, Stage::Report);
  const auto tables = report_tables(results);
  const auto omitted = std::count_if(tables.begin(), tables.end(), [](const TableRow& t) { return t.ci_omitted(); });
  if (omitted > 0) out.warn("CI omitted for " + std::to_string(omitted) + " single-run cell(s)");
  out.write("tables.csv", tables_csv(tables));
  out.write("tables.json", tables_json(tables));
  return out.finish(c.seed_or_throw());
}

// ---- som ------------------------------------------------------------------

StageResult run_som(const PipelineConfig& c) {
  const auto data = load_ingested(c);
  StageOutput out(c, Stage::Som);
  const SomParams params{c.som_width, c.som_height, c.som_epochs, SomInit::Pca};
  const WindowSpec spec{c.som_window, c.window_stride, std::nullopt};
  parallel_for(data.size(), c.jobs, [&](std::size_t i) {
    const auto& ds = data[i];
    WeeklySomReport rep;
    try {
      rep = train_weekly_soms(ds, spec, params, user_seed(out.seed(), i));
    } catch (const Error& e) {
      if (!is_insufficient(e.code())) throw;
      out.warn(ds.user_id + ": " + e.what());
      return;
    }
    out.warn_all(rep.warnings);
    ojson j;
    j["schema"] = "cuprof.som/1";
    j["user"] = ds.user_id;
    j["width"] = params.width;
    j["height"] = params.height;
    auto weeks = ojson::array();
    for (const auto& w : rep.weeks) {
      const auto name = ds.user_id + "_" + std::to_string(w.week) + ".pgm";
      const auto px = umatrix_pixels(w.umatrix);
      std::ostringstream pgm;
      pgm << "P5\n" << w.grid.width << ' ' << w.grid.height << "\n255\n";
      pgm.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
      out.write(name, pgm.str());
      weeks.push_back({{"week", w.week},
                       {"n_windows", w.n_windows},
                       {"quantization_error", w.grid.quantization_error},
                       {"initial_quantization_error", w.grid.initial_quantization_error},
                       {"random_init_fallback", w.grid.fell_back_to_random},
                       {"umatrix", name}});
    }
    j["weeks"] = std::move(weeks);
    j["displacement"] = rep.displacement;
    out.write(ds.user_id + ".json", j.dump(2) + "\n");
  });
  return out.finish(c.seed_or_throw());
}

// ---- drift ----------------------------------------------------------------

StageResult run_drift(const PipelineConfig& c) {
  const auto data = load_ingested(c);
  StageOutput out(c, Stage::Drift);
  CurveParams params;
  params.window_len_hours = c.drift_curve_hours;
  params.step_hours = c.drift_step_hours;
  params.window = WindowSpec{c.drift_window, c.drift_stride, std::nullopt};
  params.scaling = c.scaling;
  params.training = training_options(c);
  std::vector<std::string> labels(data.size());
  parallel_for(data.size(), c.jobs, [&](std::size_t i) {
    const auto& ds = data[i];
    ClassificationCurve curve;
    DriftResult result;
    try {
      curve = drift_curve(ds, params, user_seed(out.seed(), i));
      result = categorize_drift(curve, c.drift);
    } catch (const Error& e) {
      if (!is_insufficient(e.code())) throw;
      out.warn(ds.user_id + ": " + e.what());
      return;
    }
    out.write(ds.user_id + "_curve.csv", curve.to_csv());
    const auto body = ojson::parse(result.to_json());
    ojson j;
    j["schema"] = body.at("schema");
    j["user"] = ds.user_id;
    for (const auto& [k, v] : body.items()) {
      if (k != "schema") j[k] = v;
    }
    out.write(ds.user_id + "_drift.json", j.dump(2) + "\n");
    labels[i] = to_string(result.label);
  });
  ojson summary = ojson::object();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!labels[i].empty()) summary[data[i].user_id] = labels[i];
  }
  return out.finish(c.seed_or_throw(), {{"labels", summary}});
}

// ---- periodicity ----------------------------------------------------------

StageResult run_periodicity(const PipelineConfig& c) {
  const auto data = load_ingested(c);
  StageOutput out(c, Stage::Periodicity);
  PeriodicityOptions opts;
  opts.n_surrogates = c.surrogates;
  opts.paper_compat = c.paper_compat;
  parallel_for(data.size(), c.jobs, [&](std::size_t i) {
    const auto& ds = data[i];
    PeriodicityReport rep;
    try {
      rep = analyze_periodicity(build_hourly_series(ds, true), ds.user_id, opts, user_seed(out.seed(), i));
    } catch (const Error& e) {
      if (!is_insufficient(e.code())) throw;
      out.warn(ds.user_id + ": " + e.what());
      return;
    }
    out.write(ds.user_id + "_periodicity.json", rep.to_json());
    out.write(ds.user_id + "_psd.csv", rep.psd_csv());
    out.write(ds.user_id + "_acf.csv", rep.acf_csv());
    std::vector<double> lags, acf;
    for (Eigen::Index k = 0; k < rep.autocorr.acf.size(); ++k) {
      lags.push_back(static_cast<double>(k));
      acf.push_back(rep.autocorr.acf(k));
    }
    out.write(ds.user_id + "_psd.svg",
              line_plot_svg(rep.psd.frequency, rep.psd.power, ds.user_id + " periodogram", "cycles per hour", "power"));
    out.write(ds.user_id + "_acf.svg", line_plot_svg(lags, acf, ds.user_id + " autocorrelation", "lag (h)", "acf"));
  });
  return out.finish(c.seed_or_throw());
}

StageResult run_one(const PipelineConfig& c, Stage s) {
  switch (s) {
    case Stage::Synth: return run_synth(c);
    case Stage::Ingest: return run_ingest(c);
    case Stage::Featurize: return run_featurize(c);
    case Stage::Train: return run_train(c);
    case Stage::Evaluate: return run_evaluate(c);
    case Stage::Report: return run_report(c);
    case Stage::Som: return run_som(c);
    case Stage::Drift: return run_drift(c);
    case Stage::Periodicity: return run_periodicity(c);
    case Stage::All: break;
  }
  throw Error(ErrorCode::ConfigError, "Stage::All is not a single stage");
}

StageResult run_wrapped(const PipelineConfig& c, Stage s) {
  try {
    return run_one(c, s);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(s, e);
  } catch (const fs::filesystem_error& e) {
    throw StageError(s, Error(ErrorCode::IoError, e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw StageError(s, Error(ErrorCode::FormatError, e.what()));
  }
}

}  // namespace

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::Synth: return "synth";
    case Stage::Ingest: return "ingest";
    case Stage::Featurize: return "featurize";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
    case Stage::Som: return "som";
    case Stage::Drift: return "drift";
    case Stage::Periodicity: return "periodicity";
    case Stage::All: return "all";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& name) {
  for (Stage s : kAllStages) {
    if (name == to_string(s)) return s;
  }
  if (name == "all") return Stage::All;
  throw Error(ErrorCode::ConfigError, "unknown stage '" + name + "'");
}

StageError::StageError(Stage stage, const Error& cause)
    : Error(cause.code(), std::string(to_string(stage)) + ": " + strip_code(cause)), stage_(stage) {}

std::uint64_t stage_seed(std::uint64_t seed, Stage stage) {
  return mix64(seed ^ mix64(0x5354414745ULL + static_cast<std::uint64_t>(stage)));
}

std::vector<StageResult> run_stage(const PipelineConfig& config, Stage stage) {
  try {
    validate_config(config, false);
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
  std::vector<StageResult> results;
  if (stage != Stage::All) {
    results.push_back(run_wrapped(config, stage));
    return results;
  }
  for (Stage s : kAllStages) {
    if (s == Stage::Synth && config.logs_dir) continue;
    results.push_back(run_wrapped(config, s));
  }
  return results;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cuprof
