#include "sidkit/config.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>
#include <stdexcept>

extern char** environ;

namespace sidkit::config {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct KeyInfo {
  const char* key;
  const char* kind;  // "string", "int", "uint", "double", "char", "bool", "intlist"
  const char* doc;
};

const KeyInfo kKnownKeys[] = {
    {"run.out_dir", "string", "artifact root directory"},
    {"run.seed", "uint", "master seed recorded in every manifest"},
    {"ingest.input", "string", "raw check-in file"},
    {"ingest.delimiter", "string", "'tab' or 'comma'"},
    {"ingest.has_header", "bool", "skip the first line"},
    {"ingest.time_format", "string", "'auto', 'iso', or 'weekday'"},
    {"ingest.col_user", "int", "column of the user id"},
    {"ingest.col_poi", "int", "column of the poi id"},
    {"ingest.col_time", "int", "column of the timestamp"},
    {"ingest.col_category", "int", "column of the category name"},
    {"ingest.col_lat", "int", "column of the latitude"},
    {"ingest.col_lon", "int", "column of the longitude"},
    {"ingest.min_poi_interactions", "int", "drop POIs with fewer check-ins"},
    {"ingest.min_user_checkins", "int", "drop users with fewer check-ins"},
    {"ingest.ratio_train", "double", "train fraction"},
    {"ingest.ratio_validation", "double", "validation fraction"},
    {"ingest.ratio_test", "double", "test fraction"},
    {"region.precision", "int", "plus-code digits: 2, 4, 6, 8, or 10"},
    {"features.top_k_slots", "int", "active hour slots per POI"},
    {"features.top_k_visitors", "int", "active visitor slots per POI"},
    {"rqvae.num_layers", "int", "codebook layers"},
    {"rqvae.codebook_size", "int", "codewords per layer"},
    {"rqvae.code_dim", "int", "latent width"},
    {"rqvae.hidden", "intlist", "encoder hidden widths, comma separated"},
    {"rqvae.beta", "double", "commitment weight"},
    {"rqvae.mu", "double", "quantization loss weight"},
    {"rqvae.lambda", "double", "diversity loss weight"},
    {"rqvae.learning_rate", "double", "Adam step size"},
    {"rqvae.batch_size", "int", "mini-batch rows"},
    {"rqvae.epochs", "int", "epoch cap"},
    {"rqvae.patience", "int", "early-stop patience"},
    {"rqvae.kmeans_iters", "int", "codebook init iterations"},
    {"rqvae.compactness_mode", "string", "'assigned' or 'codewords'"},
    {"prompts.max_history", "int", "window length for training examples"},
    {"prompts.blank_rate", "int", "every Nth example becomes fill-in-the-blank"},
    {"prompts.variant", "string", "'full', 'no_sid', or 'no_time'"},
    {"eval.history_len", "int", "history window of eval instances"},
    {"eval.markov_add_k", "double", "baseline smoothing"},
    {"eval.sample_pairs", "int", "pairs per side of the prefix report"},
    {"eval.prefix_depth", "int", "prefix length for the category profile"},
    {"eval.bootstrap_rounds", "int", "resamples behind the intervals"},
};

bool known_key(const std::string& key) {
  for (const auto& k : kKnownKeys)
    if (key == k.key) return true;
  return false;
}

}  // namespace

KeyValues KeyValues::from_stream(std::istream& in) {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }

void KeyValues::apply_env() {
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    if (entry.rfind("SIDKIT_", 0) != 0) continue;
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(7, eq - 7);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    const size_t us = name.find('_');
    if (us == std::string::npos) continue;
    // SIDKIT_RQVAE_CODE_DIM -> rqvae.code_dim (sections never contain '_').
    set(name.substr(0, us) + "." + name.substr(us + 1), entry.substr(eq + 1));
  }
}

void KeyValues::apply_override(const std::string& assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

PipelineConfig make_pipeline_config(const KeyValues& kv) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : kv.all()) {
    if (!known_key(key)) problems.push_back("unknown key '" + key + "'");
  }

  PipelineConfig cfg;
  cfg.echo = kv.all();

  const auto get_string = [&](const char* key, std::string* out) {
    if (const auto v = kv.get(key)) *out = *v;
  };
  const auto get_int = [&](const char* key, int* out) {
    if (const auto v = kv.get(key)) {
      try {
        size_t used = 0;
        const int parsed = std::stoi(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
        *out = parsed;
      } catch (const std::exception&) {
        problems.push_back(std::string(key) + ": '" + *v + "' is not an integer");
      }
    }
  };
  const auto get_uint = [&](const char* key, uint64_t* out) {
    if (const auto v = kv.get(key)) {
      try {
        size_t used = 0;
        const uint64_t parsed = std::stoull(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
        *out = parsed;
      } catch (const std::exception&) {
        problems.push_back(std::string(key) + ": '" + *v + "' is not a nonnegative integer");
      }
    }
  };
  const auto get_double = [&](const char* key, double* out) {
    if (const auto v = kv.get(key)) {
      try {
        size_t used = 0;
        const double parsed = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
        *out = parsed;
      } catch (const std::exception&) {
        problems.push_back(std::string(key) + ": '" + *v + "' is not a number");
      }
    }
  };
  const auto get_bool = [&](const char* key, bool* out) {
    if (const auto v = kv.get(key)) {
      if (*v == "1" || *v == "true") {
        *out = true;
      } else if (*v == "0" || *v == "false") {
        *out = false;
      } else {
        problems.push_back(std::string(key) + ": '" + *v + "' is not a boolean (0/1/true/false)");
      }
    }
  };

  get_string("run.out_dir", &cfg.out_dir);
  get_uint("run.seed", &cfg.seed);

  get_string("ingest.input", &cfg.input_path);
  if (const auto v = kv.get("ingest.delimiter")) {
    if (*v == "tab") {
      cfg.columns.delimiter = '\t';
    } else if (*v == "comma") {
      cfg.columns.delimiter = ',';
    } else {
      problems.push_back("ingest.delimiter: '" + *v + "' is neither 'tab' nor 'comma'");
    }
  }
  get_bool("ingest.has_header", &cfg.columns.has_header);
  if (const auto v = kv.get("ingest.time_format")) {
    if (*v == "auto" || *v == "iso" || *v == "weekday") {
      cfg.columns.time_format = *v == "weekday" ? "weekday" : *v;
    } else {
      problems.push_back("ingest.time_format: '" + *v + "' is not auto/iso/weekday");
    }
  }
  get_int("ingest.col_user", &cfg.columns.user);
  get_int("ingest.col_poi", &cfg.columns.poi);
  get_int("ingest.col_time", &cfg.columns.time);
  get_int("ingest.col_category", &cfg.columns.category);
  get_int("ingest.col_lat", &cfg.columns.lat);
  get_int("ingest.col_lon", &cfg.columns.lon);
  get_int("ingest.min_poi_interactions", &cfg.min_poi_interactions);
  get_int("ingest.min_user_checkins", &cfg.min_user_checkins);
  get_double("ingest.ratio_train", &cfg.ratios.train);
  get_double("ingest.ratio_validation", &cfg.ratios.validation);
  get_double("ingest.ratio_test", &cfg.ratios.test);

  get_int("region.precision", &cfg.region_precision);
  get_int("features.top_k_slots", &cfg.top_k_slots);
  get_int("features.top_k_visitors", &cfg.top_k_visitors);

  get_int("rqvae.num_layers", &cfg.model.num_layers);
  get_int("rqvae.codebook_size", &cfg.model.codebook_size);
  get_int("rqvae.code_dim", &cfg.model.code_dim);
  if (const auto v = kv.get("rqvae.hidden")) {
    std::vector<int> widths;
    std::istringstream ss(*v);
    std::string part;
    bool ok = true;
    while (std::getline(ss, part, ',')) {
      try {
        widths.push_back(std::stoi(trim(part)));
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (ok && !widths.empty()) {
      cfg.model.encoder_hidden = widths;
    } else {
      problems.push_back("rqvae.hidden: '" + *v + "' is not a comma-separated integer list");
    }
  }
  get_double("rqvae.beta", &cfg.model.commitment_beta);
  get_double("rqvae.mu", &cfg.model.quant_weight);
  get_double("rqvae.lambda", &cfg.model.diversity_weight);
  get_double("rqvae.learning_rate", &cfg.model.learning_rate);
  get_int("rqvae.batch_size", &cfg.model.batch_size);
  get_int("rqvae.epochs", &cfg.model.epochs);
  get_int("rqvae.patience", &cfg.model.patience);
  get_int("rqvae.kmeans_iters", &cfg.model.kmeans_iters);
  get_string("rqvae.compactness_mode", &cfg.model.compactness_mode);

  get_int("prompts.max_history", &cfg.policy.max_history);
  get_int("prompts.blank_rate", &cfg.policy.blank_rate);
  if (const auto v = kv.get("prompts.variant")) {
    try {
      prompt::parse_variant(*v);
      cfg.variant = *v;
    } catch (const std::exception& e) {
      problems.push_back(std::string("prompts.variant: ") + e.what());
    }
  }

  get_int("eval.history_len", &cfg.history_len);
  get_double("eval.markov_add_k", &cfg.markov_add_k);
  get_int("eval.sample_pairs", &cfg.sample_pairs);
  get_int("eval.prefix_depth", &cfg.prefix_depth);
  get_int("eval.bootstrap_rounds", &cfg.bootstrap_rounds);

  cfg.model.seed = cfg.seed;  // one master seed drives every stage

  try {
    cfg.model.validate();
  } catch (const std::exception& e) {
    problems.push_back(e.what());
  }

  if (!problems.empty()) {
    std::string msg = "configuration errors:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

std::string describe_known_keys() {
  std::string out;
  for (const auto& k : kKnownKeys) {
    out += std::string(k.key) + " (" + k.kind + "): " + k.doc + "\n";
  }
  return out;
}

}  // namespace sidkit::config
