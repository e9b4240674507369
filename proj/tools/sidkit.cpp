// Pipeline entry point. Every subcommand reads upstream artifacts from the
// configured output directory and writes its own subdirectory plus a
// manifest; see pipeline.hpp for the stage contracts.

#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sidkit/config.hpp"
#include "sidkit/pipeline.hpp"

namespace {

sidkit::config::PipelineConfig load_config(const std::string& config_path,
                                           const std::vector<std::string>& overrides) {
  sidkit::config::KeyValues kv;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot read config file " + config_path);
    kv = sidkit::config::KeyValues::from_stream(in);
  }
  kv.apply_env();
  for (const auto& assignment : overrides) kv.apply_override(assignment);
  return sidkit::config::make_pipeline_config(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sidkit: check-in ingestion, semantic-ID codebook training, prompt\n"
               "emission, and next-POI evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "flat key-value config file (section.key = value)");
  app.add_option("--set", overrides,
                 "override one setting, e.g. --set rqvae.epochs=5; repeatable, wins over the "
                 "config file and the environment");

  app.footer(
      "Settings resolve as: config file < environment < --set overrides.\n"
      "Environment variables use the form SIDKIT_SECTION_KEY, e.g. SIDKIT_RUN_SEED=9\n"
      "sets run.seed. Known settings (with defaults):\n\n" +
      sidkit::config::describe_known_keys());

  app.add_subcommand("ingest", "parse, filter, and chronologically split the raw check-in file");
  app.add_subcommand("features", "build POI feature vectors from the ingested artifacts");
  app.add_subcommand("train-codebook", "train the residual-quantizing autoencoder");
  app.add_subcommand("assign-sids", "assign collision-free semantic IDs to every POI");
  app.add_subcommand("stats", "print registry uniqueness and collision counts");
  app.add_subcommand("emit-prompts", "write instruction-tuning JSONL for train and validation");
  app.add_subcommand("emit-eval", "write the evaluation manifest and rendered prompts");
  app.add_subcommand("baseline", "fit the first-order transition baseline and score it");
  auto* score = app.add_subcommand("score", "score an external model's predictions");
  std::string predictions_path;
  score->add_option("--predictions", predictions_path, "one predicted SID per manifest line")
      ->required();
  app.add_subcommand("analyze", "prefix/category profiles, prefix similarity, embeddings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const sidkit::config::PipelineConfig cfg = load_config(config_path, overrides);
    if (app.got_subcommand("ingest")) {
      sidkit::pipeline::run_ingest(cfg);
    } else if (app.got_subcommand("features")) {
      sidkit::pipeline::run_features(cfg);
    } else if (app.got_subcommand("train-codebook")) {
      sidkit::pipeline::run_train(cfg);
    } else if (app.got_subcommand("assign-sids")) {
      sidkit::pipeline::run_assign(cfg);
    } else if (app.got_subcommand("stats")) {
      sidkit::pipeline::run_stats(cfg, std::cout);
    } else if (app.got_subcommand("emit-prompts")) {
      sidkit::pipeline::run_emit_prompts(cfg);
    } else if (app.got_subcommand("emit-eval")) {
      sidkit::pipeline::run_emit_eval(cfg);
    } else if (app.got_subcommand("baseline")) {
      sidkit::pipeline::run_baseline(cfg, std::cout);
    } else if (app.got_subcommand("score")) {
      sidkit::pipeline::run_score(cfg, predictions_path, std::cout);
    } else if (app.got_subcommand("analyze")) {
      sidkit::pipeline::run_analyze(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "sidkit: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
