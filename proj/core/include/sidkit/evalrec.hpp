#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sidkit/ingest.hpp"
#include "sidkit/sid.hpp"

namespace sidkit::evalrec {

struct HistoryEntry {
  std::string sid;  // rendered
  int64_t timestamp = 0;
};

// One scoring instance with SIDs already rendered.
struct EvalItem {
  std::string uid;
  std::vector<HistoryEntry> history;
  std::string target_sid;
  int64_t target_time = 0;
};

struct BucketStat {
  std::string name;
  int64_t n = 0;
  int64_t hits = 0;
  double acc1 = 0.0;
};

struct EvalReport {
  int64_t n = 0;
  int64_t hits = 0;
  double acc1 = 0.0;
  std::vector<BucketStat> by_history_decile;
  std::vector<BucketStat> by_hour;
  int64_t unparseable = 0;  // lines score_external failed to read a SID from
};

// Exact full-string matching (disambiguation suffix included). Buckets are
// filled only when `items` is supplied alongside.
EvalReport acc_at_1(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& targets,
                    const std::vector<EvalItem>* items = nullptr);

// First-order transition model over rendered SIDs with add-k smoothing and a
// global-popularity fallback.
struct MarkovModel {
  double add_k = 0.01;
  std::map<std::string, std::map<std::string, int64_t>> transitions;
  std::map<std::string, int64_t> popularity;
  std::string most_popular;
};

MarkovModel fit_markov(const std::vector<std::vector<std::string>>& train_sequences,
                       double add_k = 0.01);

// Argmax over smoothed transitions from the last history SID; lexically
// smallest wins ties. Empty history or unseen context falls back to the
// most popular SID.
std::string predict_markov(const MarkovModel& m, const std::vector<std::string>& history);

// Scores a file of one predicted SID per line against the instances, in
// order. Lines are parsed leniently: surrounding decoration is ignored and
// the first SID-shaped token is taken; lines with none count as misses.
EvalReport score_external(std::istream& predictions, const std::vector<EvalItem>& items,
                          int num_layers);

// Renders ingest-level eval instances through the registry.
std::vector<EvalItem> render_eval_items(const std::vector<ingest::EvalInstance>& instances,
                                        const sid::Registry& registry);

void write_eval_manifest(const std::vector<EvalItem>& items, std::ostream& out);
std::vector<EvalItem> read_eval_manifest(std::istream& in);

struct PrefixSimilarity {
  double same_mean = 0.0;
  double cross_mean = 0.0;
  double same_ci_lo = 0.0, same_ci_hi = 0.0;    // 95% bootstrap interval
  double cross_ci_lo = 0.0, cross_ci_hi = 0.0;  // 95% bootstrap interval
  int64_t same_n = 0, cross_n = 0;
  bool few_pairs_warning = false;  // under 30 pairs on either side
};

// Mean shared-prefix length of sampled same-group vs cross-group POI pairs,
// with percentile bootstrap intervals. `poi_group` labels every registry POI
// (category id, cluster id, ...).
PrefixSimilarity prefix_similarity_report(const sid::Registry& registry,
                                          const std::map<std::string, int>& poi_group,
                                          int sample_pairs, uint64_t seed,
                                          int bootstrap_rounds = 1000);

}  // namespace sidkit::evalrec
