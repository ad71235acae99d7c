// cuprof: command-line driver for the profiling pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cuprof/config.hpp"
#include "cuprof/pipeline.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(cuprof::ErrorCode code) {
  switch (cuprof::family_of(code)) {
    case cuprof::ErrorFamily::Config: return kExitConfig;
    case cuprof::ErrorFamily::Numeric: return kExitNumeric;
    case cuprof::ErrorFamily::Data: return kExitData;
  }
  return kExitData;
}

int report_error(const std::string& code, const std::string& stage, const std::string& message, int exit_code) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["stage"] = stage.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(stage);
  j["message"] = message;
  j["exit_code"] = exit_code;
  std::cerr << j.dump() << '\n';
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Computer usage profiling pipeline"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::optional<std::string> config_path, stage_name, out_dir;
  std::optional<int> window, jobs;
  std::optional<std::uint64_t> seed;
  bool paper_compat = false;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--stage", stage_name, "stage to run (default: all)");
  app.add_option("--window", window, "run a single window size");
  app.add_option("--seed", seed, "master seed");
  app.add_flag("--paper-compat", paper_compat, "enforce the reference window set and stride 1");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads per stage");
  app.add_option("--set", overrides, "extra key=value override (repeatable)");

  for (const char* name :
       {"synth", "ingest", "featurize", "train", "evaluate", "report", "som", "drift", "periodicity", "all"}) {
    app.add_subcommand(name, std::string("run the ") + name + " stage");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", "", e.what(), kExitConfig);
  }

  std::string stage_label;
  try {
    std::string stage = stage_name.value_or("all");
    if (const auto subs = app.get_subcommands(); !subs.empty()) {
      if (stage_name && *stage_name != subs.front()->get_name()) {
        throw cuprof::Error(cuprof::ErrorCode::ConfigError, "--stage conflicts with the subcommand");
      }
      stage = subs.front()->get_name();
    }
    stage_label = stage;
    const auto which = cuprof::stage_from_string(stage);

    auto config = config_path ? cuprof::load_config(*config_path) : cuprof::PipelineConfig{};
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw cuprof::Error(cuprof::ErrorCode::ConfigError, "--set expects key=value");
      cuprof::set_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (window) config.window_sizes = {*window};
    if (seed) config.seed = *seed;
    if (paper_compat) config.paper_compat = true;
    if (out_dir) config.out_dir = *out_dir;
    if (jobs) config.jobs = *jobs;

    for (const auto& r : cuprof::run_stage(config, which)) {
      std::cout << cuprof::to_string(r.stage) << ": " << r.files.size() << " file(s), seed " << r.seed << '\n';
      for (const auto& w : r.warnings) std::cerr << "warning: " << cuprof::to_string(r.stage) << ": " << w << '\n';
    }
    return 0;
  } catch (const cuprof::StageError& e) {
    return report_error(cuprof::to_string(e.code()), cuprof::to_string(e.stage()), e.what(), exit_code_for(e.code()));
  } catch (const cuprof::Error& e) {
    return report_error(cuprof::to_string(e.code()), "", e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("Internal", stage_label, e.what(), 1);
  }
}
