#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "sidkit/ingest.hpp"
#include "sidkit/timeutil.hpp"

using namespace sidkit::ingest;

namespace {

int64_t at(int day, int hour, int minute = 0) {
  return sidkit::timeutil::to_epoch_seconds({2012, 4, day, hour, minute, 0});
}

CheckIn ev(const std::string& user, const std::string& poi, int64_t ts,
           const std::string& cat = "cafe", double lat = 40.0, double lon = -74.0) {
  return {user, poi, ts, cat, lat, lon};
}

std::vector<CheckIn> flatten(const std::vector<UserSequence>& seqs) {
  std::vector<CheckIn> out;
  for (const auto& s : seqs) out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

TEST_CASE("parse_checkins reads well-formed rows") {
  std::istringstream in(
      "u1\tp1\t2012-04-03 18:00:09\tcafe\t40.7\t-74.0\n"
      "u2\tp2\t2012-04-03 19:30:00\tbar\t40.8\t-73.9\n");
  const ParseResult r = parse_checkins(in, ColumnSpec{});
  CHECK(r.total_rows == 2);
  CHECK(r.rejects.empty());
  REQUIRE(r.checkins.size() == 2);
  CHECK(r.checkins[0].user_id == "u1");
  CHECK(r.checkins[0].poi_id == "p1");
  CHECK(r.checkins[0].category == "cafe");
  CHECK(r.checkins[0].lat == 40.7);
  CHECK(r.checkins[0].lon == -74.0);
  CHECK(r.checkins[0].timestamp == at(3, 18, 0) + 9);
}

TEST_CASE("parse_checkins honors custom column order, delimiter, and header") {
  ColumnSpec spec;
  spec.delimiter = ',';
  spec.has_header = true;
  spec.time = 0;
  spec.user = 1;
  spec.poi = 2;
  spec.category = 3;
  spec.lat = 4;
  spec.lon = 5;
  std::istringstream in(
      "time,user,poi,cat,lat,lon\n"
      "2012-04-03 18:00,u9,p9,gym,12.5,99.25\r\n");
  const ParseResult r = parse_checkins(in, spec);
  CHECK(r.total_rows == 1);
  REQUIRE(r.checkins.size() == 1);
  CHECK(r.checkins[0].user_id == "u9");
  CHECK(r.checkins[0].lon == 99.25);
}

TEST_CASE("parse_checkins records rejects with line numbers and keeps good rows") {
  std::string good;
  for (int i = 0; i < 7; ++i) {
    good += "u\tp\t2012-04-0" + std::to_string(i + 1) + " 10:00\tcafe\t1.0\t2.0\n";
  }
  std::istringstream in(good +
                        "u\tp\tcafe\t1.0\t2.0\n"                         // line 8: too few columns
                        "u\t\t2012-04-08 10:00\tcafe\t1.0\t2.0\n"        // line 9: empty field
                        "u\tp\tnot-a-time\tcafe\t1.0\t2.0\n"             // line 10: bad time
                        "u\tp\t2012-04-08 10:00\tcafe\tabc\t2.0\n"       // line 11: bad coords
                        "u\tp\t2012-04-08 10:00\tcafe\t91.0\t2.0\n"      // line 12: lat range
                        "u\tp\t2012-04-08 10:00\tcafe\t1.0\t181.0\n");   // line 13: lon range
  const ParseResult r = parse_checkins(in, ColumnSpec{});
  CHECK(r.total_rows == 13);
  CHECK(r.checkins.size() == 7);
  REQUIRE(r.rejects.size() == 6);
  CHECK(r.rejects[0].line_no == 8);
  CHECK(r.rejects[0].reason.find("columns") != std::string::npos);
  CHECK(r.rejects[1].reason == "empty field");
  CHECK(r.rejects[2].reason.find("timestamp") != std::string::npos);
  CHECK(r.rejects[3].reason.find("coordinates") != std::string::npos);
  CHECK(r.rejects[4].reason.find("latitude") != std::string::npos);
  CHECK(r.rejects[5].reason.find("longitude") != std::string::npos);
  CHECK(r.rejects[5].line_no == 13);
}

TEST_CASE("parse_checkins fails hard when most rows are bad") {
  std::istringstream in(
      "u\tp\t2012-04-03 10:00\tcafe\t1.0\t2.0\n"
      "garbage\n"
      "garbage\n");
  CHECK_THROWS_WITH_AS(parse_checkins(in, ColumnSpec{}), doctest::Contains(">50%"),
                       std::runtime_error);
}

TEST_CASE("time_format selects the accepted stamp shapes") {
  const std::string weekday_row = "u\tp\tTue Apr 03 18:00:09 +0000 2012\tcafe\t1.0\t2.0\n";
  ColumnSpec spec;

  spec.time_format = "auto";
  {
    std::istringstream in(weekday_row);
    const ParseResult r = parse_checkins(in, spec);
    REQUIRE(r.checkins.size() == 1);
    CHECK(r.checkins[0].timestamp == at(3, 18, 0) + 9);
  }
  spec.time_format = "iso";
  {
    std::istringstream in(weekday_row + weekday_row +
                          "u\tp\t2012-04-03 18:00:09\tcafe\t1.0\t2.0\n"
                          "u\tp\t2012-04-04 18:00:09\tcafe\t1.0\t2.0\n");
    const ParseResult r = parse_checkins(in, spec);
    CHECK(r.checkins.size() == 2);
    CHECK(r.rejects.size() == 2);
  }
}

TEST_CASE("filter_and_split prunes sparse POIs and users to a fixpoint") {
  // Pruning rare POI Y leaves user B with a single event, which prunes B and
  // B's visit to X as well.
  std::vector<CheckIn> events{
      ev("A", "X", at(1, 9)), ev("A", "X", at(2, 9)), ev("A", "X", at(3, 9)),
      ev("B", "Y", at(1, 10)), ev("B", "X", at(2, 10)),
  };
  const DatasetSplit split = filter_and_split(events, 2, 2, SplitRatios{0.8, 0.1, 0.1});
  const auto all = flatten(split.train);
  REQUIRE(split.train.size() == 1);
  for (const auto& c : all) {
    CHECK(c.user_id == "A");
    CHECK(c.poi_id == "X");
  }
  CHECK(split.user_vocab == std::vector<std::string>{"A"});
  // 3 surviving events split 2/0/1 by index.
  CHECK(flatten(split.train).size() == 2);
  CHECK(flatten(split.validation).empty());
  CHECK(flatten(split.test).size() == 1);
}

TEST_CASE("filter_and_split cuts chronologically and drops unseen val/test entities") {
  std::vector<CheckIn> events;
  for (int i = 0; i < 10; ++i) events.push_back(ev("u1", "X", at(1 + i, 8)));
  // Latest two events hit a POI absent from train; they must vanish.
  events.push_back(ev("u1", "Y", at(20, 8)));
  events.push_back(ev("u1", "Y", at(21, 8)));

  const DatasetSplit split = filter_and_split(events, 1, 1, SplitRatios{0.8, 0.1, 0.1});
  // 12 events: train gets floor(9.6)=9, validation covers [9,10), test the rest.
  CHECK(flatten(split.train).size() == 9);
  REQUIRE(flatten(split.validation).size() == 1);
  CHECK(flatten(split.validation)[0].poi_id == "X");
  CHECK(flatten(split.test).empty());
  CHECK(split.poi_table.count("Y") == 0);

  // Chronological order inside each user sequence.
  const auto train = flatten(split.train);
  for (size_t i = 1; i < train.size(); ++i) {
    CHECK(train[i - 1].timestamp <= train[i].timestamp);
  }
}

TEST_CASE("filter_and_split validates inputs") {
  CHECK_THROWS_AS(filter_and_split({ev("u", "p", at(1, 1))}, 1, 1, SplitRatios{0.5, 0.1, 0.1}),
                  std::runtime_error);
  CHECK_THROWS_WITH_AS(filter_and_split({ev("u", "p", at(1, 1))}, 5, 5, SplitRatios{0.8, 0.1, 0.1}),
                       doctest::Contains("empty train"), std::runtime_error);
}

TEST_CASE("aggregate_pois builds modal categories and histograms from train only") {
  std::vector<CheckIn> events{
      ev("u1", "P", at(1, 9), "cafe", 1.5, 2.5),  ev("u1", "P", at(2, 9), "bar", 1.5, 2.5),
      ev("u1", "P", at(3, 14), "cafe", 1.5, 2.5), ev("u2", "P", at(4, 9), "bar", 1.5, 2.5),
      ev("u2", "P", at(5, 9), "deli", 1.5, 2.5),
  };
  const DatasetSplit split = filter_and_split(events, 1, 1, SplitRatios{1.0, 0.0, 0.0});
  REQUIRE(split.poi_table.count("P") == 1);
  const PoiRecord& rec = split.poi_table.at("P");
  CHECK(rec.visit_count == 5);
  // "bar" and "cafe" tie at 2 votes; the lexically smaller name wins.
  CHECK(split.category_vocab == std::vector<std::string>{"bar", "cafe", "deli"});
  CHECK(rec.category_id == 0);
  CHECK(rec.visitor_histogram.at("u1") == 3);
  CHECK(rec.visitor_histogram.at("u2") == 2);
  CHECK(rec.hour_histogram[9] == 4);
  CHECK(rec.hour_histogram[14] == 1);
  CHECK(rec.lat == 1.5);
  CHECK(rec.lon == 2.5);
}

TEST_CASE("build_eval_instances takes the last event as target with bounded history") {
  std::vector<CheckIn> events;
  // u0's events all land in train; u1 has seven events ending in test.
  for (int i = 0; i < 4; ++i) events.push_back(ev("u0", "X", at(1, i)));
  for (int i = 0; i < 7; ++i) events.push_back(ev("u1", "X", at(2 + i, 12)));

  const DatasetSplit split = filter_and_split(events, 1, 1, SplitRatios{0.8, 0.1, 0.1});
  REQUIRE_FALSE(flatten(split.test).empty());

  const EvalBuildResult built = build_eval_instances(split, 3);
  CHECK(built.skipped_users == 1);
  REQUIRE(built.instances.size() == 1);
  const EvalInstance& inst = built.instances[0];
  CHECK(inst.user_id == "u1");
  CHECK(inst.target_time == at(8, 12));
  REQUIRE(inst.history.size() == 3);
  CHECK(inst.history[0].timestamp == at(5, 12));
  CHECK(inst.history[2].timestamp == at(7, 12));

  // A generous window keeps the whole prefix.
  const EvalBuildResult wide = build_eval_instances(split, 50);
  REQUIRE(wide.instances.size() == 1);
  CHECK(wide.instances[0].history.size() == 6);
}

TEST_CASE("jsonl round trips are byte-stable") {
  std::vector<CheckIn> events{
      ev("u1", "p1", at(1, 9), "cafe", 40.25, -74.5),
      ev("u1", "p2", at(2, 10), "bar", 40.5, -74.25),
      ev("u2", "p1", at(3, 11), "cafe", 40.25, -74.5),
  };
  const DatasetSplit split = filter_and_split(events, 1, 1, SplitRatios{1.0, 0.0, 0.0});

  std::ostringstream first;
  write_checkins_jsonl(split.train, first);
  std::istringstream back(first.str());
  const auto reread = read_checkins_jsonl(back);
  std::ostringstream second;
  write_checkins_jsonl(reread, second);
  CHECK(first.str() == second.str());

  std::ostringstream t1;
  write_poi_table_jsonl(split.poi_table, t1);
  std::istringstream tin(t1.str());
  const auto table = read_poi_table_jsonl(tin);
  std::ostringstream t2;
  write_poi_table_jsonl(table, t2);
  CHECK(t1.str() == t2.str());
  CHECK(table.at("p1").visitor_histogram.at("u2") == 1);
}
