#include "sidkit/sid.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace sidkit::sid {

namespace {

constexpr int kMaxLayers = 25;  // tags 'a'..'y', suffix tag still a letter

void check_layer_count(int num_layers) {
  if (num_layers < 1 || num_layers > kMaxLayers) {
    throw std::invalid_argument("layer count " + std::to_string(num_layers) +
                                " outside [1, " + std::to_string(kMaxLayers) + "]");
  }
}

// Parses "<t_123>" at position pos with the expected tag letter; advances pos
// past the token and returns the index, or returns -1 without advancing.
int take_token(const std::string& s, size_t& pos, char tag) {
  size_t p = pos;
  if (p >= s.size() || s[p] != '<') return -1;
  ++p;
  if (p >= s.size() || s[p] != tag) return -1;
  ++p;
  if (p >= s.size() || s[p] != '_') return -1;
  ++p;
  size_t digits = 0;
  long value = 0;
  while (p < s.size() && s[p] >= '0' && s[p] <= '9') {
    value = value * 10 + (s[p] - '0');
    if (value > 1'000'000'000L) return -1;
    ++p;
    ++digits;
  }
  if (digits == 0 || p >= s.size() || s[p] != '>') return -1;
  pos = p + 1;
  return static_cast<int>(value);
}

std::vector<int> base_tuple(const SemanticId& s) { return s.indices; }

}  // namespace

std::string render(const SemanticId& s) {
  check_layer_count(static_cast<int>(s.indices.size()));
  std::string out = render_prefix(s, static_cast<int>(s.indices.size()));
  if (s.suffix >= 0) {
    out += "<";
    out += static_cast<char>('a' + s.indices.size());
    out += "_" + std::to_string(s.suffix) + ">";
  }
  return out;
}

std::string render_prefix(const SemanticId& s, int depth) {
  if (depth < 0 || depth > static_cast<int>(s.indices.size())) {
    throw std::invalid_argument("prefix depth " + std::to_string(depth) + " outside [0, " +
                                std::to_string(s.indices.size()) + "]");
  }
  std::string out;
  for (int l = 0; l < depth; ++l) {
    out += "<";
    out += static_cast<char>('a' + l);
    out += "_" + std::to_string(s.indices[l]) + ">";
  }
  return out;
}

SemanticId parse(const std::string& text, int num_layers) {
  check_layer_count(num_layers);
  const auto fail = [&text](const std::string& why) {
    throw std::invalid_argument("cannot parse SID '" + text + "': " + why);
  };
  SemanticId s;
  size_t pos = 0;
  for (int l = 0; l < num_layers; ++l) {
    const int v = take_token(text, pos, static_cast<char>('a' + l));
    if (v < 0) fail("expected token <" + std::string(1, static_cast<char>('a' + l)) + "_N>");
    s.indices.push_back(v);
  }
  const int suffix = take_token(text, pos, static_cast<char>('a' + num_layers));
  if (suffix >= 0) s.suffix = suffix;
  if (pos != text.size()) fail("trailing characters after position " + std::to_string(pos));
  return s;
}

bool extract_first(const std::string& text, int num_layers, SemanticId* out) {
  check_layer_count(num_layers);
  for (size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '<') continue;
    size_t pos = start;
    SemanticId s;
    bool ok = true;
    for (int l = 0; l < num_layers; ++l) {
      const int v = take_token(text, pos, static_cast<char>('a' + l));
      if (v < 0) {
        ok = false;
        break;
      }
      s.indices.push_back(v);
    }
    if (!ok) continue;
    const int suffix = take_token(text, pos, static_cast<char>('a' + num_layers));
    if (suffix >= 0) s.suffix = suffix;
    *out = s;
    return true;
  }
  return false;
}

Registry assign_sids(const std::vector<std::pair<std::string, std::vector<int>>>& tuples, int K,
                     int L) {
  check_layer_count(L);
  Registry r;
  r.num_layers = L;

  std::map<std::vector<int>, std::vector<std::string>> groups;
  std::map<std::string, std::vector<int>> seen;
  for (const auto& [poi, tuple] : tuples) {
    if (!seen.emplace(poi, tuple).second) {
      throw std::invalid_argument("assign_sids: duplicate poi_id '" + poi + "'");
    }
    if (static_cast<int>(tuple.size()) != L) {
      throw std::invalid_argument("assign_sids: poi '" + poi + "' has tuple length " +
                                  std::to_string(tuple.size()) + ", expected " +
                                  std::to_string(L));
    }
    for (int v : tuple) {
      if (v < 0 || v >= K) {
        throw std::invalid_argument("assign_sids: poi '" + poi + "' index " + std::to_string(v) +
                                    " outside [0, " + std::to_string(K) + ")");
      }
    }
    groups[tuple].push_back(poi);
  }

  for (auto& [tuple, pois] : groups) {
    std::sort(pois.begin(), pois.end());
    for (size_t j = 0; j < pois.size(); ++j) {
      SemanticId s;
      s.indices = tuple;
      if (pois.size() > 1) s.suffix = static_cast<int>(j);
      const std::string rendered = render(s);
      r.by_poi.emplace(pois[j], s);
      if (!r.by_sid.emplace(rendered, pois[j]).second) {
        throw std::logic_error("assign_sids: rendered SID '" + rendered + "' not unique");
      }
    }
  }
  return r;
}

Stats stats(const Registry& r) {
  Stats s;
  s.total_pois = static_cast<int64_t>(r.by_poi.size());
  std::map<std::vector<int>, int64_t> groups;
  for (const auto& [poi, id] : r.by_poi) ++groups[base_tuple(id)];
  for (const auto& [tuple, n] : groups) {
    s.max_group = std::max(s.max_group, n);
    if (n == 1) {
      ++s.unique_tuples;
    } else {
      ++s.colliding_tuples;
      s.colliding_pois += n;
    }
  }
  return s;
}

int shared_prefix_len(const SemanticId& a, const SemanticId& b) {
  if (a.indices.size() != b.indices.size()) {
    throw std::invalid_argument("shared_prefix_len: layer counts differ (" +
                                std::to_string(a.indices.size()) + " vs " +
                                std::to_string(b.indices.size()) + ")");
  }
  int n = 0;
  for (size_t l = 0; l < a.indices.size(); ++l) {
    if (a.indices[l] != b.indices[l]) break;
    ++n;
  }
  return n;
}

std::vector<PrefixCategoryRow> prefix_category_profile(
    const Registry& r, const std::map<std::string, ingest::PoiRecord>& poi_table,
    const std::vector<std::string>& category_vocab, int depth) {
  if (depth < 0 || depth > r.num_layers) {
    throw std::invalid_argument("prefix depth " + std::to_string(depth) + " outside [0, " +
                                std::to_string(r.num_layers) + "]");
  }
  std::map<std::string, std::map<std::string, int64_t>> counts;
  for (const auto& [poi, id] : r.by_poi) {
    const auto rec = poi_table.find(poi);
    if (rec == poi_table.end()) {
      throw std::runtime_error("prefix_category_profile: poi '" + poi + "' missing from table");
    }
    const int cat = rec->second.category_id;
    if (cat < 0 || cat >= static_cast<int>(category_vocab.size())) {
      throw std::runtime_error("prefix_category_profile: poi '" + poi +
                               "' category id out of range");
    }
    ++counts[render_prefix(id, depth)][category_vocab[cat]];
  }
  std::vector<PrefixCategoryRow> rows;
  for (const auto& [prefix, cats] : counts)
    for (const auto& [cat, n] : cats) rows.push_back({prefix, cat, n});
  return rows;
}

void save_registry(const Registry& r, std::ostream& out) {
  for (const auto& [poi, id] : r.by_poi) out << poi << "\t" << render(id) << "\n";
}

Registry load_registry(std::istream& in, int num_layers) {
  check_layer_count(num_layers);
  Registry r;
  r.num_layers = num_layers;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("registry line " + std::to_string(line_no) + ": missing tab");
    }
    const std::string poi = line.substr(0, tab);
    const std::string rendered = line.substr(tab + 1);
    const SemanticId id = parse(rendered, num_layers);
    if (!r.by_poi.emplace(poi, id).second) {
      throw std::runtime_error("registry line " + std::to_string(line_no) + ": duplicate poi '" +
                               poi + "'");
    }
    if (!r.by_sid.emplace(rendered, poi).second) {
      throw std::runtime_error("registry line " + std::to_string(line_no) + ": duplicate SID '" +
                               rendered + "'");
    }
  }
  return r;
}

}  // namespace sidkit::sid
