#include "sidkit/ingest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sidkit/timeutil.hpp"

#include "json.hpp"

namespace sidkit::ingest {

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  return out;
}

std::optional<int64_t> parse_time(const std::string& s, const std::string& format) {
  if (format == "iso" || format == "auto") {
    if (auto c = timeutil::parse_iso(s)) return timeutil::to_epoch_seconds(*c);
    if (format == "iso") return std::nullopt;
  }
  if (auto c = timeutil::parse_weekday_month(s)) return timeutil::to_epoch_seconds(*c);
  return std::nullopt;
}

// Chronological comparison with a deterministic tie-break.
bool checkin_less(const CheckIn& a, const CheckIn& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  if (a.user_id != b.user_id) return a.user_id < b.user_id;
  return a.poi_id < b.poi_id;
}

std::vector<UserSequence> group_by_user(std::vector<CheckIn> events) {
  std::sort(events.begin(), events.end(), [](const CheckIn& a, const CheckIn& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return checkin_less(a, b);
  });
  std::vector<UserSequence> out;
  for (auto& e : events) {
    if (out.empty() || out.back().front().user_id != e.user_id) out.emplace_back();
    out.back().push_back(std::move(e));
  }
  return out;
}

}  // namespace

ParseResult parse_checkins(std::istream& in, const ColumnSpec& spec) {
  ParseResult result;
  const int max_col =
      std::max({spec.user, spec.poi, spec.time, spec.category, spec.lat, spec.lon});
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && spec.has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    ++result.total_rows;

    const auto reject = [&](const std::string& reason) {
      result.rejects.push_back({line_no, reason, line});
    };

    auto fields = split_fields(line, spec.delimiter);
    if (static_cast<int>(fields.size()) <= max_col) {
      reject("expected at least " + std::to_string(max_col + 1) + " columns, got " +
             std::to_string(fields.size()));
      continue;
    }
    CheckIn c;
    c.user_id = fields[spec.user];
    c.poi_id = fields[spec.poi];
    c.category = fields[spec.category];
    if (c.user_id.empty() || c.poi_id.empty() || c.category.empty()) {
      reject("empty field");
      continue;
    }
    auto ts = parse_time(fields[spec.time], spec.time_format);
    if (!ts) {
      reject("unparseable timestamp '" + fields[spec.time] + "'");
      continue;
    }
    c.timestamp = *ts;
    try {
      c.lat = std::stod(fields[spec.lat]);
      c.lon = std::stod(fields[spec.lon]);
    } catch (const std::exception&) {
      reject("unparseable coordinates");
      continue;
    }
    if (c.lat < -90.0 || c.lat > 90.0) {
      reject("latitude out of range: " + fields[spec.lat]);
      continue;
    }
    if (c.lon < -180.0 || c.lon > 180.0) {
      reject("longitude out of range: " + fields[spec.lon]);
      continue;
    }
    result.checkins.push_back(std::move(c));
  }
  if (result.total_rows > 0 && result.rejects.size() * 2 > static_cast<size_t>(result.total_rows)) {
    throw std::runtime_error("parse_checkins: " + std::to_string(result.rejects.size()) + " of " +
                             std::to_string(result.total_rows) + " rows rejected (>50%)");
  }
  return result;
}

DatasetSplit filter_and_split(std::vector<CheckIn> checkins, int min_poi_interactions,
                              int min_user_checkins, const SplitRatios& ratios) {
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::runtime_error("filter_and_split: ratios sum to " + std::to_string(sum));
  }

  // Prune sparse POIs and users until stable; dropping one can push the
  // other below threshold.
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::string, int> poi_count;
    for (const auto& c : checkins) ++poi_count[c.poi_id];
    std::vector<CheckIn> kept;
    kept.reserve(checkins.size());
    for (auto& c : checkins)
      if (poi_count[c.poi_id] >= min_poi_interactions) kept.push_back(std::move(c));
    if (kept.size() != checkins.size()) changed = true;
    checkins = std::move(kept);

    std::map<std::string, int> user_count;
    for (const auto& c : checkins) ++user_count[c.user_id];
    kept.clear();
    kept.reserve(checkins.size());
    for (auto& c : checkins)
      if (user_count[c.user_id] >= min_user_checkins) kept.push_back(std::move(c));
    if (kept.size() != checkins.size()) changed = true;
    checkins = std::move(kept);
  }

  std::sort(checkins.begin(), checkins.end(), checkin_less);
  const size_t n = checkins.size();
  const size_t train_end = static_cast<size_t>(ratios.train * static_cast<double>(n));
  const size_t val_end =
      static_cast<size_t>((ratios.train + ratios.validation) * static_cast<double>(n));

  std::vector<CheckIn> train_events(checkins.begin(), checkins.begin() + train_end);
  if (train_events.empty()) throw std::runtime_error("filter_and_split: empty train split");

  std::set<std::string> train_users, train_pois;
  for (const auto& c : train_events) {
    train_users.insert(c.user_id);
    train_pois.insert(c.poi_id);
  }

  std::vector<CheckIn> val_events, test_events;
  for (size_t i = train_end; i < n; ++i) {
    const auto& c = checkins[i];
    if (!train_users.count(c.user_id) || !train_pois.count(c.poi_id)) continue;
    if (i < val_end)
      val_events.push_back(c);
    else
      test_events.push_back(c);
  }

  DatasetSplit split;
  split.train = group_by_user(std::move(train_events));
  split.validation = group_by_user(std::move(val_events));
  split.test = group_by_user(std::move(test_events));

  std::set<std::string> cats;
  for (const auto& seq : split.train)
    for (const auto& c : seq) cats.insert(c.category);
  split.category_vocab.assign(cats.begin(), cats.end());
  split.user_vocab.assign(train_users.begin(), train_users.end());
  split.poi_table = aggregate_pois(split);
  return split;
}

std::map<std::string, PoiRecord> aggregate_pois(const DatasetSplit& split) {
  if (split.train.empty()) throw std::runtime_error("aggregate_pois: empty train split");
  std::map<std::string, int> cat_ids;
  for (size_t i = 0; i < split.category_vocab.size(); ++i)
    cat_ids[split.category_vocab[i]] = static_cast<int>(i);

  std::map<std::string, PoiRecord> table;
  // Track per-POI category multiplicities; the modal name wins, ties to the
  // lexically smaller one.
  std::map<std::string, std::map<std::string, int64_t>> cat_votes;
  for (const auto& seq : split.train) {
    for (const auto& c : seq) {
      auto [it, inserted] = table.try_emplace(c.poi_id);
      PoiRecord& rec = it->second;
      if (inserted) {
        rec.poi_id = c.poi_id;
        rec.lat = c.lat;
        rec.lon = c.lon;
      }
      ++rec.visit_count;
      ++rec.visitor_histogram[c.user_id];
      ++rec.hour_histogram[timeutil::hour_of_day(c.timestamp)];
      ++cat_votes[c.poi_id][c.category];
    }
  }
  for (auto& [poi, rec] : table) {
    const auto& votes = cat_votes[poi];
    std::string best;
    int64_t best_n = -1;
    for (const auto& [name, n] : votes) {
      if (n > best_n) {
        best = name;
        best_n = n;
      }
    }
    auto it = cat_ids.find(best);
    if (it == cat_ids.end()) throw std::runtime_error("aggregate_pois: category not in vocab");
    rec.category_id = it->second;
  }
  return table;
}

EvalBuildResult build_eval_instances(const DatasetSplit& split, int history_len) {
  // Full per-user chronology: train + validation + test concatenated.
  std::map<std::string, std::vector<CheckIn>> timeline;
  const auto absorb = [&timeline](const std::vector<UserSequence>& part) {
    for (const auto& seq : part)
      for (const auto& c : seq) timeline[c.user_id].push_back(c);
  };
  absorb(split.train);
  absorb(split.validation);
  absorb(split.test);

  std::set<std::string> test_users;
  for (const auto& seq : split.test)
    if (!seq.empty()) test_users.insert(seq.front().user_id);

  EvalBuildResult result;
  for (auto& [user, events] : timeline) {
    if (!test_users.count(user)) {
      ++result.skipped_users;
      continue;
    }
    std::sort(events.begin(), events.end(), checkin_less);
    EvalInstance inst;
    inst.user_id = user;
    const CheckIn& target = events.back();
    inst.target_poi = target.poi_id;
    inst.target_time = target.timestamp;
    const size_t end = events.size() - 1;
    const size_t begin = end > static_cast<size_t>(history_len) ? end - history_len : 0;
    for (size_t i = begin; i < end; ++i)
      inst.history.push_back({events[i].poi_id, events[i].timestamp});
    result.instances.push_back(std::move(inst));
  }
  return result;
}

void write_checkins_jsonl(const std::vector<UserSequence>& seqs, std::ostream& out) {
  for (const auto& seq : seqs) {
    for (const auto& c : seq) {
      nlohmann::json j;
      j["user"] = c.user_id;
      j["poi"] = c.poi_id;
      j["ts"] = c.timestamp;
      j["cat"] = c.category;
      j["lat"] = c.lat;
      j["lon"] = c.lon;
      out << j.dump() << "\n";
    }
  }
}

std::vector<UserSequence> read_checkins_jsonl(std::istream& in) {
  std::vector<CheckIn> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    CheckIn c;
    c.user_id = j.at("user").get<std::string>();
    c.poi_id = j.at("poi").get<std::string>();
    c.timestamp = j.at("ts").get<int64_t>();
    c.category = j.at("cat").get<std::string>();
    c.lat = j.at("lat").get<double>();
    c.lon = j.at("lon").get<double>();
    events.push_back(std::move(c));
  }
  return group_by_user(std::move(events));
}

void write_poi_table_jsonl(const std::map<std::string, PoiRecord>& table, std::ostream& out) {
  for (const auto& [poi, rec] : table) {
    nlohmann::json j;
    j["poi"] = rec.poi_id;
    j["cat_id"] = rec.category_id;
    j["lat"] = rec.lat;
    j["lon"] = rec.lon;
    j["visits"] = rec.visit_count;
    j["visitors"] = rec.visitor_histogram;
    j["hours"] = rec.hour_histogram;
    out << j.dump() << "\n";
  }
}

std::map<std::string, PoiRecord> read_poi_table_jsonl(std::istream& in) {
  std::map<std::string, PoiRecord> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    PoiRecord rec;
    rec.poi_id = j.at("poi").get<std::string>();
    rec.category_id = j.at("cat_id").get<int>();
    rec.lat = j.at("lat").get<double>();
    rec.lon = j.at("lon").get<double>();
    rec.visit_count = j.at("visits").get<int64_t>();
    rec.visitor_histogram = j.at("visitors").get<std::map<std::string, int64_t>>();
    auto hours = j.at("hours").get<std::vector<int64_t>>();
    for (size_t i = 0; i < 24 && i < hours.size(); ++i) rec.hour_histogram[i] = hours[i];
    table.emplace(rec.poi_id, std::move(rec));
  }
  return table;
}

}  // namespace sidkit::ingest
