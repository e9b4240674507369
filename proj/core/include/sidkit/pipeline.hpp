#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sidkit/config.hpp"

namespace sidkit::pipeline {

// FNV-1a over a file's bytes, rendered "fnv1a64:<16 hex digits>". Throws if
// the file cannot be read.
std::string hash_file(const std::string& path);

// Each stage reads its upstream artifacts from cfg.out_dir, writes its own
// subdirectory plus a manifest.json (stage name, config echo, input hashes,
// seed, version). Missing upstream artifacts throw std::runtime_error naming
// the expected file. All outputs are byte-deterministic for a fixed config.
void run_ingest(const config::PipelineConfig& cfg);
void run_features(const config::PipelineConfig& cfg);
void run_train(const config::PipelineConfig& cfg);
void run_assign(const config::PipelineConfig& cfg);
void run_stats(const config::PipelineConfig& cfg, std::ostream& console);
void run_emit_prompts(const config::PipelineConfig& cfg);
void run_emit_eval(const config::PipelineConfig& cfg);
void run_baseline(const config::PipelineConfig& cfg, std::ostream& console);
void run_score(const config::PipelineConfig& cfg, const std::string& predictions_path,
               std::ostream& console);
void run_analyze(const config::PipelineConfig& cfg);

}  // namespace sidkit::pipeline
