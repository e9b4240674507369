#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sidkit/ingest.hpp"

namespace sidkit::sid {

// An ordered tuple of per-layer codeword indices, rendered with one tag
// letter per layer ("<a_15><b_2><c_9>"), plus an optional collision
// suffix ("<d_0>") whose tag letter follows the last layer's.
struct SemanticId {
  std::vector<int> indices;
  int suffix = -1;  // -1 = no disambiguation token

  bool operator==(const SemanticId&) const = default;
};

std::string render(const SemanticId& s);
// First `depth` tokens only, no suffix.
std::string render_prefix(const SemanticId& s, int depth);

// Strict inverse of render for a known layer count. Throws
// std::invalid_argument on malformed input.
SemanticId parse(const std::string& text, int num_layers);

// Extracts the first substring of `text` that parses as a SID; returns false
// if none exists. Tolerates surrounding decoration.
bool extract_first(const std::string& text, int num_layers, SemanticId* out);

struct Registry {
  int num_layers = 0;
  std::map<std::string, SemanticId> by_poi;
  std::map<std::string, std::string> by_sid;  // rendered SID -> poi_id
};

// Groups POIs by base tuple; singleton groups carry no suffix, larger groups
// get <d_0>, <d_1>, ... in ascending lexical poi_id order.
Registry assign_sids(const std::vector<std::pair<std::string, std::vector<int>>>& tuples, int K,
                     int L);

struct Stats {
  int64_t total_pois = 0;
  int64_t unique_tuples = 0;     // base tuples used by exactly one POI
  int64_t colliding_pois = 0;    // POIs sharing a base tuple with another POI
  int64_t colliding_tuples = 0;  // base tuples shared by >= 2 POIs
  int64_t max_group = 0;         // largest number of POIs on one base tuple
};

Stats stats(const Registry& r);

// Number of equal leading layer indices; the suffix never participates.
int shared_prefix_len(const SemanticId& a, const SemanticId& b);

struct PrefixCategoryRow {
  std::string prefix;  // rendered prefix tokens
  std::string category;
  int64_t count = 0;
};

// Category histogram of the POIs under each distinct SID prefix of the given
// depth. Rows sorted by (prefix, category).
std::vector<PrefixCategoryRow> prefix_category_profile(
    const Registry& r, const std::map<std::string, ingest::PoiRecord>& poi_table,
    const std::vector<std::string>& category_vocab, int depth);

// One line per POI: "poi_id<TAB>rendered_sid", in lexical poi_id order.
void save_registry(const Registry& r, std::ostream& out);
Registry load_registry(std::istream& in, int num_layers);

}  // namespace sidkit::sid
