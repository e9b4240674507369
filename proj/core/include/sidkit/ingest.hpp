#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sidkit::ingest {

// One visit event.
struct CheckIn {
  std::string user_id;
  std::string poi_id;
  int64_t timestamp = 0;  // epoch seconds, wall clock as written in the file
  std::string category;
  double lat = 0.0;
  double lon = 0.0;
};

// One POI with aggregates computed from the train split only.
struct PoiRecord {
  std::string poi_id;
  int category_id = -1;
  double lat = 0.0;
  double lon = 0.0;
  int64_t visit_count = 0;
  std::map<std::string, int64_t> visitor_histogram;
  std::array<int64_t, 24> hour_histogram{};
};

struct ColumnSpec {
  int user = 0;
  int poi = 1;
  int time = 2;
  int category = 3;
  int lat = 4;
  int lon = 5;
  char delimiter = '\t';
  // "iso" first, then the weekday-month fallback; "auto" means exactly that.
  std::string time_format = "auto";
  bool has_header = false;
};

struct ParseReject {
  int line_no = 0;  // 1-based
  std::string reason;
  std::string line;
};

struct ParseResult {
  std::vector<CheckIn> checkins;
  std::vector<ParseReject> rejects;
  int total_rows = 0;
};

// Malformed rows are recorded and skipped; more than half rejected is a
// hard error.
ParseResult parse_checkins(std::istream& in, const ColumnSpec& spec);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

using UserSequence = std::vector<CheckIn>;

struct DatasetSplit {
  // Per-user chronologically ordered sequences; users in lexical id order.
  std::vector<UserSequence> train;
  std::vector<UserSequence> validation;
  std::vector<UserSequence> test;
  std::vector<std::string> category_vocab;  // lexical order
  std::vector<std::string> user_vocab;      // lexical order, train users
  std::map<std::string, PoiRecord> poi_table;
};

// Iterates POI/user pruning to a fixpoint, sorts globally by time (ties by
// user then poi id), splits by event index, drops val/test events whose user
// or POI is missing from train, then groups per user. Aggregates come from
// the train split only.
DatasetSplit filter_and_split(std::vector<CheckIn> checkins, int min_poi_interactions,
                              int min_user_checkins, const SplitRatios& ratios);

// Recomputes poi_table (and would-be vocabularies) from the train split.
std::map<std::string, PoiRecord> aggregate_pois(const DatasetSplit& split);

struct EvalHistoryItem {
  std::string poi_id;
  int64_t timestamp = 0;
};

struct EvalInstance {
  std::string user_id;
  std::vector<EvalHistoryItem> history;
  std::string target_poi;
  int64_t target_time = 0;
};

struct EvalBuildResult {
  std::vector<EvalInstance> instances;
  int skipped_users = 0;  // users with no test events
};

EvalBuildResult build_eval_instances(const DatasetSplit& split, int history_len);

// Newline-delimited record serialization for splits and the poi table.
void write_checkins_jsonl(const std::vector<UserSequence>& seqs, std::ostream& out);
std::vector<UserSequence> read_checkins_jsonl(std::istream& in);
void write_poi_table_jsonl(const std::map<std::string, PoiRecord>& table, std::ostream& out);
std::map<std::string, PoiRecord> read_poi_table_jsonl(std::istream& in);

}  // namespace sidkit::ingest
