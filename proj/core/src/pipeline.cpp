#include "sidkit/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sidkit/evalrec.hpp"
#include "sidkit/features.hpp"
#include "sidkit/geocode.hpp"
#include "sidkit/ingest.hpp"
#include "sidkit/prompts.hpp"
#include "sidkit/rqvae.hpp"
#include "sidkit/sid.hpp"
#include "sidkit/timeutil.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace sidkit::pipeline {

namespace {

constexpr char kVersion[] = "sidkit 0.1.0";

std::string require_file(const std::string& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw std::runtime_error("missing expected file " + path + " (run '" + producer + "' first)");
  }
  return path;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

void write_manifest(const config::PipelineConfig& cfg, const std::string& stage,
                    const std::map<std::string, std::string>& inputs) {
  nlohmann::json j;
  j["stage"] = stage;
  j["version"] = kVersion;
  j["seed"] = cfg.seed;
  j["config"] = cfg.echo;
  j["inputs"] = inputs;
  auto out = open_out(fs::path(cfg.out_dir) / stage / "manifest.json");
  out << j.dump(2) << "\n";
}

std::string stage_path(const config::PipelineConfig& cfg, const std::string& stage,
                       const std::string& file) {
  return (fs::path(cfg.out_dir) / stage / file).string();
}

std::vector<std::string> read_lines(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

sid::Registry load_registry_file(const config::PipelineConfig& cfg) {
  auto in = open_in(require_file(stage_path(cfg, "sids", "registry.tsv"), "assign-sids"));
  return sid::load_registry(in, cfg.model.num_layers);
}

feat::FeatureMatrix load_features_file(const config::PipelineConfig& cfg) {
  auto in = open_in(require_file(stage_path(cfg, "features", "features.txt"), "features"));
  return feat::load_features(in);
}

rqvae::Model load_model_file(const config::PipelineConfig& cfg) {
  auto in = open_in(require_file(stage_path(cfg, "model", "checkpoint.txt"), "train-codebook"));
  return rqvae::load_model(in);
}

std::vector<ingest::UserSequence> load_split(const config::PipelineConfig& cfg,
                                             const std::string& name) {
  auto in = open_in(require_file(stage_path(cfg, "ingest", name + ".jsonl"), "ingest"));
  return ingest::read_checkins_jsonl(in);
}

void write_report(const evalrec::EvalReport& report, std::ostream& out) {
  char buf[128];
  out << "n " << report.n << "\n";
  out << "hits " << report.hits << "\n";
  std::snprintf(buf, sizeof(buf), "acc1 %.6f", report.acc1);
  out << buf << "\n";
  out << "unparseable " << report.unparseable << "\n";
  for (const auto& b : report.by_history_decile) {
    std::snprintf(buf, sizeof(buf), "bucket %s n %lld hits %lld acc1 %.6f", b.name.c_str(),
                  static_cast<long long>(b.n), static_cast<long long>(b.hits), b.acc1);
    out << buf << "\n";
  }
  for (const auto& b : report.by_hour) {
    std::snprintf(buf, sizeof(buf), "bucket %s n %lld hits %lld acc1 %.6f", b.name.c_str(),
                  static_cast<long long>(b.n), static_cast<long long>(b.hits), b.acc1);
    out << buf << "\n";
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace

std::string hash_file(const std::string& path) {
  auto in = open_in(path);
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void run_ingest(const config::PipelineConfig& cfg) {
  if (cfg.input_path.empty()) {
    throw std::runtime_error("ingest.input is not set; point it at the raw check-in file");
  }
  require_file(cfg.input_path, "(external input)");
  auto raw = open_in(cfg.input_path);
  const ingest::ParseResult parsed = ingest::parse_checkins(raw, cfg.columns);
  const ingest::DatasetSplit split = ingest::filter_and_split(
      parsed.checkins, cfg.min_poi_interactions, cfg.min_user_checkins, cfg.ratios);

  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "train.jsonl");
    ingest::write_checkins_jsonl(split.train, out);
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "validation.jsonl");
    ingest::write_checkins_jsonl(split.validation, out);
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "test.jsonl");
    ingest::write_checkins_jsonl(split.test, out);
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "poi_table.jsonl");
    ingest::write_poi_table_jsonl(split.poi_table, out);
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "category_vocab.txt");
    for (const auto& c : split.category_vocab) out << c << "\n";
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "user_vocab.txt");
    for (const auto& u : split.user_vocab) out << u << "\n";
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "ingest" / "rejects.txt");
    out << "rejected " << parsed.rejects.size() << " of " << parsed.total_rows << " rows\n";
    for (const auto& r : parsed.rejects) {
      out << r.line_no << "\t" << r.reason << "\t" << r.line << "\n";
    }
  }
  write_manifest(cfg, "ingest", {{cfg.input_path, hash_file(cfg.input_path)}});
}

void run_features(const config::PipelineConfig& cfg) {
  const std::string table_path = require_file(stage_path(cfg, "ingest", "poi_table.jsonl"), "ingest");
  const std::string cat_path = require_file(stage_path(cfg, "ingest", "category_vocab.txt"), "ingest");
  const std::string user_path = require_file(stage_path(cfg, "ingest", "user_vocab.txt"), "ingest");

  auto table_in = open_in(table_path);
  const auto poi_table = ingest::read_poi_table_jsonl(table_in);

  feat::FeatureSpaceSpec spec;
  spec.category_vocab = read_lines(cat_path);
  spec.user_vocab = read_lines(user_path);
  spec.region_precision = cfg.region_precision;
  spec.top_k_slots = cfg.top_k_slots;
  spec.top_k_visitors = cfg.top_k_visitors;
  spec.regions = feat::build_region_vocab(poi_table, cfg.region_precision);

  const feat::FeatureMatrix matrix = feat::build_feature_matrix(poi_table, spec);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "features" / "regions.txt");
    for (const auto& code : spec.regions.codes()) out << code << "\n";
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "features" / "features.txt");
    feat::save_features(matrix, out);
  }
  write_manifest(cfg, "features",
                 {{table_path, hash_file(table_path)},
                  {cat_path, hash_file(cat_path)},
                  {user_path, hash_file(user_path)}});
}

void run_train(const config::PipelineConfig& cfg) {
  const std::string feat_path = require_file(stage_path(cfg, "features", "features.txt"), "features");
  const feat::FeatureMatrix matrix = load_features_file(cfg);

  rqvae::Model model;
  model.config = cfg.model;
  auto log = open_out(fs::path(cfg.out_dir) / "model" / "train_log.txt");
  const rqvae::TrainReport report = rqvae::train(model, matrix.rows, &log);
  if (report.kmeans.sampled_with_replacement) {
    log << "warning: fewer rows than codewords; codebook init sampled with replacement\n";
  }
  if (report.kmeans.degenerate) {
    log << "warning: codebook init saw identical rows; codewords may coincide\n";
  }
  if (report.aborted_non_finite) {
    log << "training aborted on a non-finite loss; checkpoint holds the last good parameters\n";
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "model" / "checkpoint.txt");
    rqvae::save_model(model, out);
  }
  write_manifest(cfg, "model", {{feat_path, hash_file(feat_path)}});
}

void run_assign(const config::PipelineConfig& cfg) {
  const std::string feat_path = require_file(stage_path(cfg, "features", "features.txt"), "features");
  const std::string model_path =
      require_file(stage_path(cfg, "model", "checkpoint.txt"), "train-codebook");
  const feat::FeatureMatrix matrix = load_features_file(cfg);
  const rqvae::Model model = load_model_file(cfg);

  const auto tuples = rqvae::infer_indices(model, matrix.rows);
  std::vector<std::pair<std::string, std::vector<int>>> keyed;
  for (size_t i = 0; i < matrix.poi_ids.size(); ++i) keyed.emplace_back(matrix.poi_ids[i], tuples[i]);
  const sid::Registry registry =
      sid::assign_sids(keyed, model.config.codebook_size, model.config.num_layers);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "sids" / "registry.tsv");
    sid::save_registry(registry, out);
  }
  write_manifest(cfg, "sids",
                 {{feat_path, hash_file(feat_path)}, {model_path, hash_file(model_path)}});
}

void run_stats(const config::PipelineConfig& cfg, std::ostream& console) {
  const std::string reg_path = require_file(stage_path(cfg, "sids", "registry.tsv"), "assign-sids");
  const sid::Registry registry = load_registry_file(cfg);
  const sid::Stats s = sid::stats(registry);
  std::ostringstream text;
  text << "total_pois " << s.total_pois << "\n";
  text << "unique_tuples " << s.unique_tuples << "\n";
  text << "colliding_pois " << s.colliding_pois << "\n";
  text << "colliding_tuples " << s.colliding_tuples << "\n";
  text << "max_group " << s.max_group << "\n";
  console << text.str();
  {
    auto out = open_out(fs::path(cfg.out_dir) / "stats" / "stats.txt");
    out << text.str();
  }
  write_manifest(cfg, "stats", {{reg_path, hash_file(reg_path)}});
}

void run_emit_prompts(const config::PipelineConfig& cfg) {
  const std::string reg_path = require_file(stage_path(cfg, "sids", "registry.tsv"), "assign-sids");
  const std::string train_path = require_file(stage_path(cfg, "ingest", "train.jsonl"), "ingest");
  const std::string val_path =
      require_file(stage_path(cfg, "ingest", "validation.jsonl"), "ingest");

  const sid::Registry registry = load_registry_file(cfg);
  const auto rid_map = prompt::make_rid_map(registry);
  const prompt::Variant variant = prompt::parse_variant(cfg.variant);

  const auto emit = [&](const std::string& split_name, uint64_t seed) {
    const auto sequences = load_split(cfg, split_name);
    const prompt::TrainingSetResult result = prompt::make_training_set(
        sequences, registry, rid_map, cfg.policy, variant, seed, split_name);
    auto out = open_out(fs::path(cfg.out_dir) / "prompts" /
                        (split_name + "_" + cfg.variant + ".jsonl"));
    prompt::write_jsonl(result.examples, out);
  };
  emit("train", cfg.seed);
  emit("validation", cfg.seed + 1);

  write_manifest(cfg, "prompts",
                 {{reg_path, hash_file(reg_path)},
                  {train_path, hash_file(train_path)},
                  {val_path, hash_file(val_path)}});
}

void run_emit_eval(const config::PipelineConfig& cfg) {
  const std::string reg_path = require_file(stage_path(cfg, "sids", "registry.tsv"), "assign-sids");
  std::map<std::string, std::string> inputs{{reg_path, hash_file(reg_path)}};

  ingest::DatasetSplit split;
  for (const std::string name : {"train", "validation", "test"}) {
    const std::string path = require_file(stage_path(cfg, "ingest", name + ".jsonl"), "ingest");
    inputs[path] = hash_file(path);
    auto seqs = load_split(cfg, name);
    if (name == "train") {
      split.train = std::move(seqs);
    } else if (name == "validation") {
      split.validation = std::move(seqs);
    } else {
      split.test = std::move(seqs);
    }
  }

  const ingest::EvalBuildResult built = ingest::build_eval_instances(split, cfg.history_len);
  const sid::Registry registry = load_registry_file(cfg);
  const auto items = evalrec::render_eval_items(built.instances, registry);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "eval" / "eval_manifest.jsonl");
    evalrec::write_eval_manifest(items, out);
  }
  {
    // Prompt-rendered inputs for an external model, in manifest order.
    const prompt::Variant variant = prompt::parse_variant(cfg.variant);
    const auto rid_map = prompt::make_rid_map(registry);
    auto out = open_out(fs::path(cfg.out_dir) / "eval" / "eval_prompts.jsonl");
    for (size_t i = 0; i < items.size(); ++i) {
      const auto& item = items[i];
      std::vector<prompt::HistoryItem> history;
      for (size_t h = 0; h < item.history.size(); ++h) {
        std::string token = item.history[h].sid;
        if (variant == prompt::Variant::no_sid) {
          const std::string& poi = built.instances[i].history[h].poi_id;
          token = "<" + std::to_string(rid_map.at(poi)) + ">";
        }
        history.push_back({token, item.history[h].timestamp});
      }
      const prompt::PromptExample ex =
          prompt::render_prompt(history, item.target_time, item.uid, variant);
      nlohmann::json j;
      j["instruction"] = ex.instruction;
      j["input"] = ex.input;
      out << j.dump() << "\n";
    }
  }
  write_manifest(cfg, "eval", inputs);
}

void run_baseline(const config::PipelineConfig& cfg, std::ostream& console) {
  const std::string manifest_path =
      require_file(stage_path(cfg, "eval", "eval_manifest.jsonl"), "emit-eval");
  const std::string reg_path = require_file(stage_path(cfg, "sids", "registry.tsv"), "assign-sids");

  auto manifest_in = open_in(manifest_path);
  const auto items = evalrec::read_eval_manifest(manifest_in);
  const sid::Registry registry = load_registry_file(cfg);

  // Transition statistics come from the train and validation splits; the
  // scored continuations live in test.
  std::vector<std::vector<std::string>> corpus;
  for (const std::string name : {"train", "validation"}) {
    for (const auto& seq : load_split(cfg, name)) {
      std::vector<std::string> sids;
      for (const auto& c : seq) {
        const auto it = registry.by_poi.find(c.poi_id);
        if (it == registry.by_poi.end()) {
          throw std::runtime_error("baseline: poi '" + c.poi_id + "' missing from registry");
        }
        sids.push_back(sid::render(it->second));
      }
      corpus.push_back(std::move(sids));
    }
  }
  const evalrec::MarkovModel model = evalrec::fit_markov(corpus, cfg.markov_add_k);

  std::vector<std::string> predictions, targets;
  for (const auto& item : items) {
    std::vector<std::string> history;
    for (const auto& h : item.history) history.push_back(h.sid);
    predictions.push_back(evalrec::predict_markov(model, history));
    targets.push_back(item.target_sid);
  }
  {
    auto out = open_out(fs::path(cfg.out_dir) / "baseline" / "predictions.txt");
    for (const auto& p : predictions) out << p << "\n";
  }
  const evalrec::EvalReport report = evalrec::acc_at_1(predictions, targets, &items);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "baseline" / "report.txt");
    write_report(report, out);
  }
  write_report(report, console);
  write_manifest(cfg, "baseline",
                 {{manifest_path, hash_file(manifest_path)}, {reg_path, hash_file(reg_path)}});
}

void run_score(const config::PipelineConfig& cfg, const std::string& predictions_path,
               std::ostream& console) {
  const std::string manifest_path =
      require_file(stage_path(cfg, "eval", "eval_manifest.jsonl"), "emit-eval");
  require_file(predictions_path, "(external model)");

  auto manifest_in = open_in(manifest_path);
  const auto items = evalrec::read_eval_manifest(manifest_in);
  auto pred_in = open_in(predictions_path);
  const evalrec::EvalReport report =
      evalrec::score_external(pred_in, items, cfg.model.num_layers);
  {
    auto out = open_out(fs::path(cfg.out_dir) / "score" / "report.txt");
    write_report(report, out);
  }
  write_report(report, console);
  write_manifest(cfg, "score",
                 {{manifest_path, hash_file(manifest_path)},
                  {predictions_path, hash_file(predictions_path)}});
}

void run_analyze(const config::PipelineConfig& cfg) {
  const std::string reg_path = require_file(stage_path(cfg, "sids", "registry.tsv"), "assign-sids");
  const std::string table_path =
      require_file(stage_path(cfg, "ingest", "poi_table.jsonl"), "ingest");
  const std::string cat_path =
      require_file(stage_path(cfg, "ingest", "category_vocab.txt"), "ingest");
  const std::string feat_path =
      require_file(stage_path(cfg, "features", "features.txt"), "features");
  const std::string model_path =
      require_file(stage_path(cfg, "model", "checkpoint.txt"), "train-codebook");

  const sid::Registry registry = load_registry_file(cfg);
  auto table_in = open_in(table_path);
  const auto poi_table = ingest::read_poi_table_jsonl(table_in);
  const auto categories = read_lines(cat_path);

  {
    const auto rows =
        sid::prefix_category_profile(registry, poi_table, categories, cfg.prefix_depth);
    auto out = open_out(fs::path(cfg.out_dir) / "analyze" / "prefix_category_profile.csv");
    out << "prefix,category,count\n";
    for (const auto& r : rows) {
      out << csv_field(r.prefix) << "," << csv_field(r.category) << "," << r.count << "\n";
    }
  }
  {
    std::map<std::string, int> groups;
    for (const auto& [poi, rec] : poi_table) groups[poi] = rec.category_id;
    const evalrec::PrefixSimilarity sim = evalrec::prefix_similarity_report(
        registry, groups, cfg.sample_pairs, cfg.seed, cfg.bootstrap_rounds);
    auto out = open_out(fs::path(cfg.out_dir) / "analyze" / "prefix_similarity.csv");
    out << "side,n,mean,ci_lo,ci_hi\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "same_category,%lld,%.6f,%.6f,%.6f\n",
                  static_cast<long long>(sim.same_n), sim.same_mean, sim.same_ci_lo,
                  sim.same_ci_hi);
    out << buf;
    std::snprintf(buf, sizeof(buf), "cross_category,%lld,%.6f,%.6f,%.6f\n",
                  static_cast<long long>(sim.cross_n), sim.cross_mean, sim.cross_ci_lo,
                  sim.cross_ci_hi);
    out << buf;
    if (sim.few_pairs_warning) out << "# warning: fewer than 30 pairs on a side\n";
  }
  {
    const feat::FeatureMatrix matrix = load_features_file(cfg);
    const rqvae::Model model = load_model_file(cfg);
    const num::Tensor z = rqvae::encode(model, matrix.rows);
    auto out = open_out(fs::path(cfg.out_dir) / "analyze" / "sid_embeddings.tsv");
    out << "poi\tsid";
    for (int j = 0; j < z.cols(); ++j) out << "\tz" << j;
    out << "\n";
    char buf[32];
    for (size_t i = 0; i < matrix.poi_ids.size(); ++i) {
      const auto it = registry.by_poi.find(matrix.poi_ids[i]);
      if (it == registry.by_poi.end()) {
        throw std::runtime_error("analyze: poi '" + matrix.poi_ids[i] +
                                 "' missing from registry");
      }
      out << matrix.poi_ids[i] << "\t" << sid::render(it->second);
      for (int j = 0; j < z.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.6f", z.at(static_cast<int>(i), j));
        out << "\t" << buf;
      }
      out << "\n";
    }
  }
  write_manifest(cfg, "analyze",
                 {{reg_path, hash_file(reg_path)},
                  {table_path, hash_file(table_path)},
                  {cat_path, hash_file(cat_path)},
                  {feat_path, hash_file(feat_path)},
                  {model_path, hash_file(model_path)}});
}

}  // namespace sidkit::pipeline
