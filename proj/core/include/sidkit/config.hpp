#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sidkit/ingest.hpp"
#include "sidkit/prompts.hpp"
#include "sidkit/rqvae.hpp"

namespace sidkit::config {

// Flat "section.key = value" settings with three layers of precedence:
// config file < SIDKIT_SECTION_KEY environment variables < explicit set()
// calls (command-line overrides).
class KeyValues {
 public:
  // '#' starts a comment; blank lines ignored.
  static KeyValues from_stream(std::istream& in);

  void set(const std::string& key, const std::string& value);
  // Reads every SIDKIT_* variable from the process environment.
  void apply_env();
  // Parses "section.key=value"; throws std::invalid_argument otherwise.
  void apply_override(const std::string& assignment);

  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& all() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Everything the pipeline stages need, typed and validated.
struct PipelineConfig {
  // run
  std::string out_dir = "out";
  uint64_t seed = 1;

  // ingest
  std::string input_path;
  ingest::ColumnSpec columns;
  int min_poi_interactions = 10;
  int min_user_checkins = 10;
  ingest::SplitRatios ratios;

  // region
  int region_precision = 8;

  // features
  int top_k_slots = 10;
  int top_k_visitors = 10;

  // rqvae (model.seed is always the master seed)
  rqvae::Config model;

  // prompts
  prompt::AugmentPolicy policy;
  std::string variant = "full";

  // eval
  int history_len = 50;
  double markov_add_k = 0.01;
  int sample_pairs = 200;
  int prefix_depth = 1;
  int bootstrap_rounds = 1000;

  // The flat settings this config was built from, echoed into manifests.
  std::map<std::string, std::string> echo;
};

// Builds a PipelineConfig, reporting every unknown key and every
// unparseable value in a single std::invalid_argument.
PipelineConfig make_pipeline_config(const KeyValues& kv);

// One "key = value" per line for --help and documentation.
std::string describe_known_keys();

}  // namespace sidkit::config
