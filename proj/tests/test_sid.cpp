#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "sidkit/rng.hpp"
#include "sidkit/sid.hpp"

using namespace sidkit::sid;

TEST_CASE("render spells out layer tags and the optional suffix") {
  CHECK(render({{15, 2, 9}, -1}) == "<a_15><b_2><c_9>");
  CHECK(render({{15, 2, 9}, 0}) == "<a_15><b_2><c_9><d_0>");
  CHECK(render({{0}, -1}) == "<a_0>");
  CHECK(render({{3, 1, 4, 1}, 7}) == "<a_3><b_1><c_4><d_1><e_7>");
  CHECK(render_prefix({{15, 2, 9}, 4}, 2) == "<a_15><b_2>");
  CHECK(render_prefix({{15, 2, 9}, 4}, 3) == "<a_15><b_2><c_9>");
}

TEST_CASE("parse is the strict inverse of render") {
  const SemanticId plain{{15, 2, 9}, -1};
  const SemanticId suffixed{{15, 2, 9}, 4};
  CHECK(parse(render(plain), 3) == plain);
  CHECK(parse(render(suffixed), 3) == suffixed);

  CHECK_THROWS_AS(parse("", 3), std::invalid_argument);
  CHECK_THROWS_AS(parse("<a_1><b_2>", 3), std::invalid_argument);        // too short
  CHECK_THROWS_AS(parse("<b_1><a_2><c_3>", 3), std::invalid_argument);   // wrong tag order
  CHECK_THROWS_AS(parse("<a_1><b_2><c_x>", 3), std::invalid_argument);   // non-numeric
  CHECK_THROWS_AS(parse("<a_1><b_2><c_3>x", 3), std::invalid_argument);  // trailing junk
  CHECK_THROWS_AS(parse("<a_-1><b_2><c_3>", 3), std::invalid_argument);  // negative index
  CHECK_THROWS_AS(parse("<a_1><b_2><c_3><e_0>", 3), std::invalid_argument);  // bad suffix tag
}

TEST_CASE("parse round-trips random tuples") {
  sidkit::num::Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    const int layers = 1 + static_cast<int>(rng.next_below(5));
    SemanticId s;
    for (int l = 0; l < layers; ++l) s.indices.push_back(static_cast<int>(rng.next_below(300)));
    s.suffix = rng.next_below(3) == 0 ? static_cast<int>(rng.next_below(50)) : -1;
    CAPTURE(render(s));
    CHECK(parse(render(s), layers) == s);
  }
}

TEST_CASE("extract_first finds an embedded id and ignores decoration") {
  SemanticId out;
  REQUIRE(extract_first("the answer is <a_15><b_2><c_9><d_0>, probably", 3, &out));
  CHECK(out == SemanticId{{15, 2, 9}, 0});
  REQUIRE(extract_first("<a_1><b_2><c_3>", 3, &out));
  CHECK(out == SemanticId{{1, 2, 3}, -1});
  CHECK_FALSE(extract_first("no ids here", 3, &out));
  CHECK_FALSE(extract_first("<a_1><b_2>", 3, &out));
  // Picks the first of several.
  REQUIRE(extract_first("<a_9><b_9><c_9> <a_1><b_1><c_1>", 3, &out));
  CHECK(out.indices == std::vector<int>{9, 9, 9});
}

TEST_CASE("assign_sids disambiguates collisions in lexical poi order") {
  std::vector<std::pair<std::string, std::vector<int>>> tuples{
      {"pB", {15, 2, 9}},
      {"pA", {15, 2, 9}},
      {"pC", {1, 0, 3}},
  };
  const Registry r = assign_sids(tuples, 32, 3);
  CHECK(r.num_layers == 3);
  CHECK(render(r.by_poi.at("pA")) == "<a_15><b_2><c_9><d_0>");
  CHECK(render(r.by_poi.at("pB")) == "<a_15><b_2><c_9><d_1>");
  CHECK(render(r.by_poi.at("pC")) == "<a_1><b_0><c_3>");
  CHECK(r.by_sid.at("<a_15><b_2><c_9><d_1>") == "pB");
  CHECK(r.by_sid.size() == 3);
}

TEST_CASE("assign_sids validates its input") {
  CHECK_THROWS_AS(assign_sids({{"p", {1, 2}}}, 32, 3), std::invalid_argument);   // wrong arity
  CHECK_THROWS_AS(assign_sids({{"p", {40, 2, 3}}}, 32, 3), std::invalid_argument);  // index >= K
  CHECK_THROWS_AS(assign_sids({{"p", {1, 2, 3}}, {"p", {1, 2, 3}}}, 32, 3),
                  std::invalid_argument);  // duplicate poi
}

TEST_CASE("registry stays bijective under random collisions") {
  sidkit::num::Rng rng(901);
  std::vector<std::pair<std::string, std::vector<int>>> tuples;
  for (int i = 0; i < 400; ++i) {
    char name[16];
    snprintf(name, sizeof(name), "poi_%03d", i);
    // Tiny tuple space (3*3*3=27) forces heavy collisions.
    tuples.push_back({name,
                      {static_cast<int>(rng.next_below(3)), static_cast<int>(rng.next_below(3)),
                       static_cast<int>(rng.next_below(3))}});
  }
  const Registry r = assign_sids(tuples, 8, 3);
  REQUIRE(r.by_poi.size() == 400);
  REQUIRE(r.by_sid.size() == 400);
  for (const auto& [poi, s] : r.by_poi) {
    CHECK(r.by_sid.at(render(s)) == poi);
    CHECK(parse(render(s), 3) == s);
  }
}

TEST_CASE("stats counts groups the straightforward way") {
  std::vector<std::pair<std::string, std::vector<int>>> tuples{
      {"a", {0, 0, 0}}, {"b", {0, 0, 0}}, {"c", {0, 0, 0}},  // group of 3
      {"d", {1, 0, 0}}, {"e", {1, 0, 0}},                    // group of 2
      {"f", {2, 0, 0}},                                      // singleton
  };
  const Stats s = stats(assign_sids(tuples, 4, 3));
  CHECK(s.total_pois == 6);
  CHECK(s.unique_tuples == 1);
  CHECK(s.colliding_pois == 5);
  CHECK(s.colliding_tuples == 2);
  CHECK(s.max_group == 3);
}

TEST_CASE("shared_prefix_len ignores the suffix") {
  const SemanticId a{{3, 5, 7}, 0};
  CHECK(shared_prefix_len(a, {{3, 5, 7}, 4}) == 3);
  CHECK(shared_prefix_len(a, {{3, 5, 1}, -1}) == 2);
  CHECK(shared_prefix_len(a, {{3, 0, 7}, -1}) == 1);
  CHECK(shared_prefix_len(a, {{9, 5, 7}, -1}) == 0);
}

TEST_CASE("prefix_category_profile histograms categories under each prefix") {
  std::vector<std::pair<std::string, std::vector<int>>> tuples{
      {"p1", {0, 1, 2}}, {"p2", {0, 1, 3}}, {"p3", {0, 2, 2}}, {"p4", {1, 1, 2}}};
  const Registry r = assign_sids(tuples, 4, 3);

  std::map<std::string, sidkit::ingest::PoiRecord> table;
  const std::vector<std::string> cats{"bar", "cafe"};
  auto put = [&table](const std::string& poi, int cat) {
    sidkit::ingest::PoiRecord rec;
    rec.poi_id = poi;
    rec.category_id = cat;
    table[poi] = rec;
  };
  put("p1", 0);
  put("p2", 0);
  put("p3", 1);
  put("p4", 1);

  const auto rows = prefix_category_profile(r, table, cats, 2);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].prefix == "<a_0><b_1>");
  CHECK(rows[0].category == "bar");
  CHECK(rows[0].count == 2);
  CHECK(rows[1].prefix == "<a_0><b_2>");
  CHECK(rows[1].category == "cafe");
  CHECK(rows[1].count == 1);
  CHECK(rows[2].prefix == "<a_1><b_1>");
  CHECK(rows[2].count == 1);
}

TEST_CASE("registry text form round-trips") {
  std::vector<std::pair<std::string, std::vector<int>>> tuples{
      {"pB", {15, 2, 9}}, {"pA", {15, 2, 9}}, {"pC", {1, 0, 3}}};
  const Registry r = assign_sids(tuples, 32, 3);

  std::ostringstream out;
  save_registry(r, out);
  const std::string text = out.str();
  // Lexical poi order, tab separated.
  CHECK(text.find("pA\t<a_15><b_2><c_9><d_0>") < text.find("pB\t"));

  std::istringstream in(text);
  const Registry back = load_registry(in, 3);
  CHECK(back.num_layers == 3);
  CHECK(back.by_poi == r.by_poi);
  CHECK(back.by_sid == r.by_sid);

  std::istringstream junk("pA only-one-column\n");
  CHECK_THROWS_AS(load_registry(junk, 3), std::exception);
}
