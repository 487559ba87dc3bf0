#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "twp/config.hpp"
#include "twp/corpus.hpp"
#include "twp/translate.hpp"

namespace twp {

// Stage directories under the output root, in run order.
inline constexpr const char* kStageFilter = "01-filter";
inline constexpr const char* kStageDedup = "02-dedup";
inline constexpr const char* kStageTranslate = "03-translate";
inline constexpr const char* kStageMix = "04-mix";
inline constexpr const char* kStagePack = "05-pack";

struct PipelineOptions {
  std::filesystem::path input;
  std::filesystem::path out_dir;
  ResumeMode mode = ResumeMode::fresh;
  ReadMode read_mode = ReadMode::lenient;
};

struct PipelineOutcome {
  int exit_code = 0;  // 0 ok, 1 stage failure
  std::string failed_stage;
  std::string message;
  nlohmann::ordered_json manifest;
};

// filter -> dedup -> translate (optional) -> mix -> pack.
//
// Every stage directory gets config.resolved, manifest.json and a DONE or
// FAILED marker. With ResumeMode::resume, stages marked DONE under the same
// resolved config are skipped and an interrupted translation continues from
// its journal; everything downstream of a re-run stage is rebuilt.
//
// Throws ConfigError when the output directory cannot be used (non-empty
// without --resume/--restart, or not a pipeline directory).
PipelineOutcome run_pipeline(const Config& config, const PipelineConfig& pc, const PipelineOptions& options);

}  // namespace twp
