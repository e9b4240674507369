#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sidkit/ingest.hpp"
#include "sidkit/rng.hpp"
#include "sidkit/sid.hpp"

namespace sidkit::prompt {

// full:    SIDs with timestamps.
// no_sid:  numeric POI ids ("<3312>") with timestamps.
// no_time: SIDs without timestamps, next-visit phrasing.
enum class Variant { full, no_sid, no_time };

Variant parse_variant(const std::string& name);  // "full" / "no_sid" / "no_time"
std::string variant_name(Variant v);

struct PromptExample {
  std::string instruction;
  std::string input;
  std::string target;
  std::string user_id;
  std::string split;
  std::string kind;  // "next_poi" or "blank"
};

// One visited POI as it appears in the prompt: an already-rendered token
// (SID or numeric id) plus the visit time.
struct HistoryItem {
  std::string token;
  int64_t timestamp = 0;
};

// Fills instruction/input only; the caller owns target and metadata.
// Timestamps render as "YYYY-MM-DD HH:MM". Throws on empty history.
PromptExample render_prompt(const std::vector<HistoryItem>& history, int64_t target_time,
                            const std::string& uid, Variant variant);

// Splits [0, n) into windows (start, length) no longer than max_history:
// short sequences stay whole; up to twice max_history becomes two
// end-anchored overlapping windows; anything longer becomes consecutive
// non-overlapping windows with a >= 2-element tail kept. Every index is
// covered whenever n > max_history.
std::vector<std::pair<int, int>> crop_windows(int n, int max_history);

struct AugmentPolicy {
  int max_history = 50;
  int blank_rate = 5;  // every Nth emitted sample turns into fill-in-the-blank
};

extern const char kBlankToken[];  // what replaces a blanked-out SID

struct TrainingSetResult {
  std::vector<PromptExample> examples;
  int64_t next_poi_count = 0;
  int64_t blank_count = 0;
};

// Windows every user sequence, emits one next-POI example per window with
// >= 2 events, converts every blank_rate-th emitted example into
// fill-in-the-blank (random earlier history position becomes the target),
// then shuffles. rid_map is consulted only for the no_sid variant.
TrainingSetResult make_training_set(const std::vector<ingest::UserSequence>& sequences,
                                    const sid::Registry& registry,
                                    const std::map<std::string, int64_t>& rid_map,
                                    const AugmentPolicy& policy, Variant variant, uint64_t seed,
                                    const std::string& split_name);

// Numeric ids for the no_sid ablation: POIs numbered by lexical order.
std::map<std::string, int64_t> make_rid_map(const sid::Registry& registry);

void write_jsonl(const std::vector<PromptExample>& examples, std::ostream& out);
std::vector<PromptExample> read_jsonl(std::istream& in);

}  // namespace sidkit::prompt
