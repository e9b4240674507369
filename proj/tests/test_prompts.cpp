#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "sidkit/prompts.hpp"
#include "sidkit/timeutil.hpp"

using namespace sidkit::prompt;
using sidkit::ingest::CheckIn;
using sidkit::ingest::UserSequence;
using sidkit::timeutil::to_epoch_seconds;

namespace {

std::string read_golden(const std::string& name) {
  const std::string path = std::string(SIDKIT_TEST_DIR) + "/golden/" + name;
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing golden file ", path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<HistoryItem> golden_history(bool sids) {
  const int64_t t1 = to_epoch_seconds({2012, 5, 21, 23, 15, 0});
  const int64_t t2 = to_epoch_seconds({2012, 11, 8, 9, 30, 0});
  const int64_t t3 = to_epoch_seconds({2013, 1, 29, 22, 21, 0});
  if (sids) {
    return {{"<a_15><b_2><c_9><d_0>", t1}, {"<a_20><b_21><c_19><d_1>", t2},
            {"<a_11><b_19><c_6>", t3}};
  }
  return {{"<3312>", t1}, {"<270>", t2}, {"<4345>", t3}};
}

// A user sequence of `len` visits to distinct POIs, one hour apart.
UserSequence make_seq(const std::string& uid, int len, int poi_base) {
  UserSequence seq;
  for (int i = 0; i < len; ++i) {
    CheckIn c;
    c.user_id = uid;
    char poi[16];
    snprintf(poi, sizeof(poi), "P%04d", poi_base + i);
    c.poi_id = poi;
    c.timestamp = to_epoch_seconds({2012, 4, 3, 0, 0, 0}) + i * 3600;
    seq.push_back(c);
  }
  return seq;
}

sidkit::sid::Registry demo_registry(int num_pois) {
  std::vector<std::pair<std::string, std::vector<int>>> tuples;
  for (int i = 0; i < num_pois; ++i) {
    char poi[16];
    snprintf(poi, sizeof(poi), "P%04d", i);
    tuples.push_back({poi, {i % 32, (i / 32) % 32, i % 7}});
  }
  return sidkit::sid::assign_sids(tuples, 32, 3);
}

}  // namespace

TEST_CASE("rendered prompts byte-match the golden transcriptions") {
  const int64_t target = to_epoch_seconds({2013, 1, 31, 14, 5, 0});

  const PromptExample full = render_prompt(golden_history(true), target, "1", Variant::full);
  CHECK(full.instruction + "\n" + full.input + "\n" == read_golden("prompt_full.txt"));

  const PromptExample no_sid = render_prompt(golden_history(false), target, "1", Variant::no_sid);
  CHECK(no_sid.instruction + "\n" + no_sid.input + "\n" == read_golden("prompt_no_sid.txt"));

  const PromptExample no_time = render_prompt(golden_history(true), target, "1", Variant::no_time);
  CHECK(no_time.instruction + "\n" + no_time.input + "\n" == read_golden("prompt_no_time.txt"));

  CHECK_THROWS_AS(render_prompt({}, target, "1", Variant::full), std::invalid_argument);
}

TEST_CASE("variant names round-trip") {
  for (Variant v : {Variant::full, Variant::no_sid, Variant::no_time}) {
    CHECK(parse_variant(variant_name(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("timeless"), std::invalid_argument);
}

TEST_CASE("crop_windows covers short, doubled, and long sequences") {
  CHECK(crop_windows(0, 50).empty());
  CHECK(crop_windows(30, 50) == std::vector<std::pair<int, int>>{{0, 30}});
  CHECK(crop_windows(50, 50) == std::vector<std::pair<int, int>>{{0, 50}});
  // Up to twice the cap: two end-anchored windows (the only placement that
  // covers both ends with windows of exactly max_history).
  CHECK(crop_windows(70, 50) == std::vector<std::pair<int, int>>{{0, 50}, {20, 50}});
  CHECK(crop_windows(100, 50) == std::vector<std::pair<int, int>>{{0, 50}, {50, 50}});
  // Beyond: consecutive, tail kept because it has >= 2 events.
  CHECK(crop_windows(120, 50) ==
        std::vector<std::pair<int, int>>{{0, 50}, {50, 50}, {100, 20}});
  CHECK_THROWS_AS(crop_windows(10, 1), std::invalid_argument);
}

TEST_CASE("crop_windows properties hold across sizes") {
  for (int max : {2, 3, 5, 50}) {
    for (int n = 1; n <= 6 * max; ++n) {
      const auto windows = crop_windows(n, max);
      std::vector<int> covered(n, 0);
      for (const auto& [start, len] : windows) {
        CHECK(start >= 0);
        CHECK(start + len <= n);
        CHECK(len >= (n >= 2 ? 2 : 1));
        CHECK(len <= max);
        for (int i = start; i < start + len; ++i) covered[i]++;
      }
      // Full coverage, except that a single leftover event beyond the last
      // full window is dropped rather than emitted as a length-1 window.
      const bool dropped_tail = n > 2 * max && n % max == 1;
      for (int i = 0; i + 1 < n; ++i) {
        CAPTURE(n);
        CAPTURE(max);
        CAPTURE(i);
        CHECK(covered[i] > 0);
      }
      if (n > 0) CHECK((covered[n - 1] > 0 || dropped_tail));
    }
  }
}

TEST_CASE("make_training_set blanks exactly every fifth window") {
  // 100 users, one 5-event sequence each: 100 windows of history length 4.
  std::vector<UserSequence> seqs;
  for (int u = 0; u < 100; ++u) {
    char uid[16];
    snprintf(uid, sizeof(uid), "U%03d", u);
    seqs.push_back(make_seq(uid, 5, (u * 5) % 900));
  }
  const auto registry = demo_registry(1000);
  const auto rids = make_rid_map(registry);

  AugmentPolicy policy;
  policy.max_history = 50;
  policy.blank_rate = 5;
  const TrainingSetResult r =
      make_training_set(seqs, registry, rids, policy, Variant::full, 42, "train");

  CHECK(r.examples.size() == 100);
  CHECK(r.blank_count == 20);
  CHECK(r.next_poi_count == 80);

  int blanks_seen = 0;
  for (const auto& ex : r.examples) {
    CHECK(ex.split == "train");
    if (ex.kind == "blank") {
      ++blanks_seen;
      // The blanked slot appears in the input and its token is the target.
      CHECK(ex.input.find(kBlankToken) != std::string::npos);
      CHECK(ex.target.find("<a_") == 0);
      CHECK(ex.input.find(ex.target) == std::string::npos);
    } else {
      CHECK(ex.kind == "next_poi");
      CHECK(ex.input.find(kBlankToken) == std::string::npos);
    }
  }
  CHECK(blanks_seen == 20);
}

TEST_CASE("training sets are deterministic in the seed and differ across seeds") {
  std::vector<UserSequence> seqs;
  for (int u = 0; u < 12; ++u) seqs.push_back(make_seq("U" + std::to_string(u), 9, u * 9));
  const auto registry = demo_registry(200);
  const auto rids = make_rid_map(registry);
  const AugmentPolicy policy;

  auto dump = [&](uint64_t seed) {
    std::ostringstream out;
    write_jsonl(make_training_set(seqs, registry, rids, policy, Variant::no_time, seed, "train")
                    .examples,
                out);
    return out.str();
  };
  CHECK(dump(7) == dump(7));
  CHECK(dump(7) != dump(8));
}

TEST_CASE("no_sid variant renders numeric ids from the rid map") {
  std::vector<UserSequence> seqs{make_seq("U1", 3, 0)};
  const auto registry = demo_registry(50);
  const auto rids = make_rid_map(registry);
  CHECK(rids.at("P0000") == 0);
  CHECK(rids.at("P0049") == 49);

  const TrainingSetResult r =
      make_training_set(seqs, registry, rids, AugmentPolicy{}, Variant::no_sid, 3, "train");
  REQUIRE(r.examples.size() == 1);
  CHECK(r.examples[0].input.find("<0> at ") != std::string::npos);
  CHECK(r.examples[0].target == "<2>");

  // A sequence touching a poi outside the map fails loudly.
  std::vector<UserSequence> bad{make_seq("U1", 3, 400)};
  CHECK_THROWS_AS(make_training_set(bad, registry, rids, AugmentPolicy{}, Variant::no_sid, 3, "t"),
                  std::runtime_error);
}

TEST_CASE("jsonl round trips examples byte-identically") {
  std::vector<UserSequence> seqs{make_seq("U1", 6, 0), make_seq("U2", 4, 10)};
  const auto registry = demo_registry(50);
  const auto r = make_training_set(seqs, registry, {}, AugmentPolicy{}, Variant::full, 9, "val");

  std::ostringstream first;
  write_jsonl(r.examples, first);
  std::istringstream in(first.str());
  const auto back = read_jsonl(in);
  REQUIRE(back.size() == r.examples.size());
  std::ostringstream second;
  write_jsonl(back, second);
  CHECK(first.str() == second.str());
  CHECK(back[0].instruction == r.examples[0].instruction);
  CHECK(back[0].target == r.examples[0].target);
}
