#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sidkit/geocode.hpp"
#include "sidkit/ingest.hpp"
#include "sidkit/tensor.hpp"

namespace sidkit::feat {

// Byte offsets of the four concatenated segments inside a feature row:
// category one-hot, region one-hot (with a trailing UNK slot), hour-of-day
// multi-hot, and visitor multi-hot.
struct SegmentLayout {
  int category_offset = 0;
  int category_len = 0;
  int region_offset = 0;
  int region_len = 0;  // |regions| + 1; the last slot is UNK
  int hour_offset = 0;
  int hour_len = 24;
  int user_offset = 0;
  int user_len = 0;
  int total = 0;

  bool operator==(const SegmentLayout&) const = default;
};

struct FeatureSpaceSpec {
  std::vector<std::string> category_vocab;
  geo::RegionVocab regions;
  std::vector<std::string> user_vocab;
  int region_precision = 8;
  int top_k_slots = 10;     // active hour slots kept per POI
  int top_k_visitors = 10;  // active visitor slots kept per POI
};

struct FeatureMatrix {
  SegmentLayout layout;
  std::vector<std::string> poi_ids;  // lexical order, row i describes poi_ids[i]
  num::Tensor rows;                  // P x layout.total, values in {0,1}
};

SegmentLayout make_layout(const FeatureSpaceSpec& spec);

// Builds the region vocabulary from the coordinates of training POIs.
geo::RegionVocab build_region_vocab(const std::map<std::string, ingest::PoiRecord>& poi_table,
                                    int precision);

// The top-k hours of a histogram by count, ties to the smaller hour; hours
// with zero count never selected. Returned ascending.
std::vector<int> top_hours(const std::array<int64_t, 24>& histogram, int k);

// The top-k visitors by count, ties to the lexically smaller user id.
// Returned in lexical order.
std::vector<std::string> top_visitors(const std::map<std::string, int64_t>& histogram, int k);

// Writes one POI's feature row into out[0..layout.total). Throws if the
// record's category is missing from the vocabulary or its hour histogram is
// all zero.
void encode_row(const ingest::PoiRecord& rec, const FeatureSpaceSpec& spec,
                const SegmentLayout& layout, double* out);

FeatureMatrix build_feature_matrix(const std::map<std::string, ingest::PoiRecord>& poi_table,
                                   const FeatureSpaceSpec& spec);

// Text serialization: a versioned header with the segment layout, then one
// line per POI listing its active indices.
void save_features(const FeatureMatrix& m, std::ostream& out);
FeatureMatrix load_features(std::istream& in);

}  // namespace sidkit::feat
