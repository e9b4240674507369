#include "sidkit/features.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sidkit::feat {

SegmentLayout make_layout(const FeatureSpaceSpec& spec) {
  if (spec.category_vocab.empty()) throw std::invalid_argument("feature layout: empty category vocab");
  if (spec.user_vocab.empty()) throw std::invalid_argument("feature layout: empty user vocab");
  if (spec.top_k_slots <= 0 || spec.top_k_visitors <= 0) {
    throw std::invalid_argument("feature layout: top-k values must be positive");
  }
  SegmentLayout l;
  l.category_offset = 0;
  l.category_len = static_cast<int>(spec.category_vocab.size());
  l.region_offset = l.category_len;
  l.region_len = spec.regions.size() + 1;
  l.hour_offset = l.region_offset + l.region_len;
  l.hour_len = 24;
  l.user_offset = l.hour_offset + l.hour_len;
  l.user_len = static_cast<int>(spec.user_vocab.size());
  l.total = l.user_offset + l.user_len;
  return l;
}

geo::RegionVocab build_region_vocab(const std::map<std::string, ingest::PoiRecord>& poi_table,
                                    int precision) {
  geo::RegionVocab vocab;
  for (const auto& [poi, rec] : poi_table) vocab.add(geo::encode(rec.lat, rec.lon, precision));
  vocab.finalize();
  return vocab;
}

std::vector<int> top_hours(const std::array<int64_t, 24>& histogram, int k) {
  std::vector<int> hours;
  for (int h = 0; h < 24; ++h)
    if (histogram[h] > 0) hours.push_back(h);
  // Stable sort by descending count keeps equal-count hours in ascending
  // hour order, which is the tie-break.
  std::stable_sort(hours.begin(), hours.end(),
                   [&histogram](int a, int b) { return histogram[a] > histogram[b]; });
  if (static_cast<int>(hours.size()) > k) hours.resize(k);
  std::sort(hours.begin(), hours.end());
  return hours;
}

std::vector<std::string> top_visitors(const std::map<std::string, int64_t>& histogram, int k) {
  std::vector<std::string> users;
  for (const auto& [user, n] : histogram)
    if (n > 0) users.push_back(user);
  std::stable_sort(users.begin(), users.end(), [&histogram](const std::string& a, const std::string& b) {
    return histogram.at(a) > histogram.at(b);
  });
  if (static_cast<int>(users.size()) > k) users.resize(k);
  std::sort(users.begin(), users.end());
  return users;
}

void encode_row(const ingest::PoiRecord& rec, const FeatureSpaceSpec& spec,
                const SegmentLayout& layout, double* out) {
  std::fill(out, out + layout.total, 0.0);

  if (rec.category_id < 0 || rec.category_id >= layout.category_len) {
    throw std::runtime_error("encode_row: poi " + rec.poi_id + " has category id " +
                             std::to_string(rec.category_id) + " outside the vocabulary");
  }
  out[layout.category_offset + rec.category_id] = 1.0;

  const std::string code = geo::encode(rec.lat, rec.lon, spec.region_precision);
  int region = spec.regions.lookup(code);
  if (region < 0) region = spec.regions.size();  // UNK slot
  out[layout.region_offset + region] = 1.0;

  const auto hours = top_hours(rec.hour_histogram, spec.top_k_slots);
  if (hours.empty()) {
    throw std::runtime_error("encode_row: poi " + rec.poi_id + " has an all-zero hour histogram");
  }
  for (int h : hours) out[layout.hour_offset + h] = 1.0;

  std::map<std::string, int> user_ids;
  for (size_t i = 0; i < spec.user_vocab.size(); ++i)
    user_ids[spec.user_vocab[i]] = static_cast<int>(i);
  for (const auto& user : top_visitors(rec.visitor_histogram, spec.top_k_visitors)) {
    auto it = user_ids.find(user);
    if (it == user_ids.end()) {
      throw std::runtime_error("encode_row: poi " + rec.poi_id + " visitor " + user +
                               " missing from user vocabulary");
    }
    out[layout.user_offset + it->second] = 1.0;
  }
}

FeatureMatrix build_feature_matrix(const std::map<std::string, ingest::PoiRecord>& poi_table,
                                   const FeatureSpaceSpec& spec) {
  FeatureMatrix m;
  m.layout = make_layout(spec);
  m.rows = num::Tensor::zeros(static_cast<int>(poi_table.size()), m.layout.total);
  int row = 0;
  for (const auto& [poi, rec] : poi_table) {
    m.poi_ids.push_back(poi);
    encode_row(rec, spec, m.layout,
               m.rows.data().data() + static_cast<size_t>(row) * m.layout.total);
    ++row;
  }
  return m;
}

void save_features(const FeatureMatrix& m, std::ostream& out) {
  out << "sidkit-features v1\n";
  out << "pois " << m.poi_ids.size() << " dim " << m.layout.total << "\n";
  out << "span category " << m.layout.category_offset << " " << m.layout.category_len << "\n";
  out << "span region " << m.layout.region_offset << " " << m.layout.region_len << "\n";
  out << "span hour " << m.layout.hour_offset << " " << m.layout.hour_len << "\n";
  out << "span user " << m.layout.user_offset << " " << m.layout.user_len << "\n";
  for (size_t i = 0; i < m.poi_ids.size(); ++i) {
    out << m.poi_ids[i] << "\t";
    bool first = true;
    for (int j = 0; j < m.layout.total; ++j) {
      if (m.rows.at(static_cast<int>(i), j) != 0.0) {
        if (!first) out << " ";
        out << j;
        first = false;
      }
    }
    out << "\n";
  }
}

FeatureMatrix load_features(std::istream& in) {
  const auto fail = [](const std::string& why) {
    throw std::runtime_error("load_features: " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != "sidkit-features v1") fail("bad header");

  FeatureMatrix m;
  size_t pois = 0;
  {
    std::string word;
    if (!std::getline(in, line)) fail("truncated size line");
    std::istringstream ss(line);
    int dim = 0;
    if (!(ss >> word >> pois >> word >> dim)) fail("bad size line");
    m.layout.total = dim;
  }
  for (int s = 0; s < 4; ++s) {
    if (!std::getline(in, line)) fail("truncated span line");
    std::istringstream ss(line);
    std::string word, name;
    int off = 0, len = 0;
    if (!(ss >> word >> name >> off >> len) || word != "span") fail("bad span line");
    if (name == "category") {
      m.layout.category_offset = off;
      m.layout.category_len = len;
    } else if (name == "region") {
      m.layout.region_offset = off;
      m.layout.region_len = len;
    } else if (name == "hour") {
      m.layout.hour_offset = off;
      m.layout.hour_len = len;
    } else if (name == "user") {
      m.layout.user_offset = off;
      m.layout.user_len = len;
    } else {
      fail("unknown span '" + name + "'");
    }
  }
  m.rows = num::Tensor::zeros(static_cast<int>(pois), m.layout.total);
  for (size_t i = 0; i < pois; ++i) {
    if (!std::getline(in, line)) fail("truncated row " + std::to_string(i));
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) fail("row missing poi id");
    m.poi_ids.push_back(line.substr(0, tab));
    std::istringstream ss(line.substr(tab + 1));
    int j = 0;
    while (ss >> j) {
      if (j < 0 || j >= m.layout.total) fail("index out of range in row " + std::to_string(i));
      m.rows.at(static_cast<int>(i), j) = 1.0;
    }
  }
  return m;
}

}  // namespace sidkit::feat
