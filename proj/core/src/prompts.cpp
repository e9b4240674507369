#include "sidkit/prompts.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include "sidkit/timeutil.hpp"

#include "json.hpp"

namespace sidkit::prompt {

const char kBlankToken[] = "<blank>";

namespace {

const char kInstructionTimed[] =
    "Here is a record of a user's POI accesses, your task is based on the history to predict the "
    "POI that the user is likely to access at the specified time.";
const char kInstructionNext[] =
    "Here is a record of a user's POI accesses, your task is based on the history to predict the "
    "next POI that the user is likely to access.";

std::string render_uid(const std::string& uid) { return "user_<" + uid + ">"; }

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "no_sid") return Variant::no_sid;
  if (name == "no_time") return Variant::no_time;
  throw std::invalid_argument("unknown prompt variant '" + name +
                              "' (expected full, no_sid, or no_time)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full:
      return "full";
    case Variant::no_sid:
      return "no_sid";
    case Variant::no_time:
      return "no_time";
  }
  throw std::logic_error("unreachable");
}

PromptExample render_prompt(const std::vector<HistoryItem>& history, int64_t target_time,
                            const std::string& uid, Variant variant) {
  if (history.empty()) throw std::invalid_argument("render_prompt: empty history");

  PromptExample ex;
  ex.user_id = uid;
  ex.instruction = variant == Variant::no_time ? kInstructionNext : kInstructionTimed;

  std::string in = "The " + render_uid(uid) + " visited:";
  for (size_t i = 0; i < history.size(); ++i) {
    if (i > 0) in += ", visited";
    in += " " + history[i].token;
    if (variant != Variant::no_time) {
      in += " at " + timeutil::format_minute(history[i].timestamp);
    }
  }
  if (variant == Variant::no_time) {
    in += ", and in the next time " + render_uid(uid) + " is likely to visit:";
  } else {
    in += ". When " + timeutil::format_minute(target_time) + " " + render_uid(uid) +
          " is likely to visit:";
  }
  ex.input = in;
  return ex;
}

std::vector<std::pair<int, int>> crop_windows(int n, int max_history) {
  if (max_history < 2) throw std::invalid_argument("crop_windows: max_history must be >= 2");
  if (n <= 0) return {};
  std::vector<std::pair<int, int>> windows;
  if (n <= max_history) {
    windows.emplace_back(0, n);
  } else if (n <= 2 * max_history) {
    // Two overlapping windows. Covering both ends with windows of this
    // length forces their placement.
    windows.emplace_back(0, max_history);
    windows.emplace_back(n - max_history, max_history);
  } else {
    int start = 0;
    while (start < n) {
      const int len = std::min(max_history, n - start);
      if (len >= 2) windows.emplace_back(start, len);
      start += len;
    }
  }
  return windows;
}

std::map<std::string, int64_t> make_rid_map(const sid::Registry& registry) {
  std::map<std::string, int64_t> rids;
  int64_t next = 0;
  for (const auto& [poi, id] : registry.by_poi) rids[poi] = next++;
  return rids;
}

TrainingSetResult make_training_set(const std::vector<ingest::UserSequence>& sequences,
                                    const sid::Registry& registry,
                                    const std::map<std::string, int64_t>& rid_map,
                                    const AugmentPolicy& policy, Variant variant, uint64_t seed,
                                    const std::string& split_name) {
  if (policy.blank_rate < 1) throw std::invalid_argument("blank_rate must be >= 1");

  const auto token_of = [&](const std::string& poi) -> std::string {
    if (variant == Variant::no_sid) {
      const auto it = rid_map.find(poi);
      if (it == rid_map.end()) {
        throw std::runtime_error("make_training_set: poi '" + poi + "' missing from rid map");
      }
      return "<" + std::to_string(it->second) + ">";
    }
    const auto it = registry.by_poi.find(poi);
    if (it == registry.by_poi.end()) {
      throw std::runtime_error("make_training_set: poi '" + poi + "' missing from registry");
    }
    return sid::render(it->second);
  };

  num::Rng rng(seed);
  TrainingSetResult result;
  int64_t emitted = 0;
  for (const auto& seq : sequences) {
    for (const auto& [start, len] : crop_windows(static_cast<int>(seq.size()), policy.max_history)) {
      if (len < 2) continue;
      const std::string& uid = seq.front().user_id;
      std::vector<HistoryItem> history;
      for (int i = start; i < start + len - 1; ++i) {
        history.push_back({token_of(seq[i].poi_id), seq[i].timestamp});
      }
      const ingest::CheckIn& next = seq[start + len - 1];

      ++emitted;
      const int h = static_cast<int>(history.size());
      const bool to_blank = emitted % policy.blank_rate == 0 && h >= 2;
      std::string target;
      std::string kind;
      if (to_blank) {
        const int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(h - 1)));
        target = history[j].token;
        history[j].token = kBlankToken;
        kind = "blank";
        ++result.blank_count;
      } else {
        target = token_of(next.poi_id);
        kind = "next_poi";
        ++result.next_poi_count;
      }

      PromptExample ex = render_prompt(history, next.timestamp, uid, variant);
      ex.target = target;
      ex.split = split_name;
      ex.kind = kind;
      result.examples.push_back(std::move(ex));
    }
  }
  rng.shuffle(result.examples);
  return result;
}

void write_jsonl(const std::vector<PromptExample>& examples, std::ostream& out) {
  for (const auto& ex : examples) {
    nlohmann::json j;
    j["instruction"] = ex.instruction;
    j["input"] = ex.input;
    j["output"] = ex.target;
    j["meta"] = {{"user", ex.user_id}, {"split", ex.split}, {"kind", ex.kind}};
    out << j.dump() << "\n";
  }
}

std::vector<PromptExample> read_jsonl(std::istream& in) {
  std::vector<PromptExample> examples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    PromptExample ex;
    ex.instruction = j.at("instruction").get<std::string>();
    ex.input = j.at("input").get<std::string>();
    ex.target = j.at("output").get<std::string>();
    const auto& meta = j.at("meta");
    ex.user_id = meta.at("user").get<std::string>();
    ex.split = meta.at("split").get<std::string>();
    ex.kind = meta.at("kind").get<std::string>();
    examples.push_back(std::move(ex));
  }
  return examples;
}

}  // namespace sidkit::prompt
