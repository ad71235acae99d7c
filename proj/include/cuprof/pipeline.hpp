#pragma once

// Stage orchestration. Each stage writes under <out_dir>/<stage>/ with a
// manifest.json and reads only files written by earlier stages.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cuprof/config.hpp"
#include "cuprof/error.hpp"

namespace cuprof {

enum class Stage { Synth, Ingest, Featurize, Train, Evaluate, Report, Som, Drift, Periodicity, All };

const char* to_string(Stage stage);
Stage stage_from_string(const std::string& name);  // ConfigError on unknown names

inline constexpr const char* kManifestSchema = "cuprof.manifest/1";

struct StageResult {
  Stage stage = Stage::All;
  std::uint64_t seed = 0;
  std::vector<std::string> files;  // relative to the stage directory, sorted
  std::vector<std::string> warnings;
};

/// A module error annotated with the stage that raised it.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& cause);
  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

/// Seed of one stage's generator, derived from the config seed.
std::uint64_t stage_seed(std::uint64_t seed, Stage stage);

/// Runs one stage, or for Stage::All: synth (only when logs_dir is unset),
/// ingest, featurize, train, evaluate, report, som, drift, periodicity.
std::vector<StageResult> run_stage(const PipelineConfig& config, Stage stage);

inline std::vector<StageResult> run_pipeline(const PipelineConfig& config) { return run_stage(config, Stage::All); }

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. The exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace cuprof
