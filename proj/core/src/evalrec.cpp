#include "sidkit/evalrec.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "sidkit/rng.hpp"
#include "sidkit/timeutil.hpp"

#include "json.hpp"

namespace sidkit::evalrec {

namespace {

void fill_buckets(EvalReport& report, const std::vector<bool>& hit,
                  const std::vector<EvalItem>& items) {
  const size_t n = items.size();

  // History-length deciles: instances ordered by history length, cut into
  // ten nearly equal runs.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&items](size_t a, size_t b) {
    return items[a].history.size() < items[b].history.size();
  });
  for (int d = 0; d < 10; ++d) {
    const size_t lo = n * d / 10;
    const size_t hi = n * (d + 1) / 10;
    if (lo >= hi) continue;
    BucketStat b;
    const size_t len_lo = items[order[lo]].history.size();
    const size_t len_hi = items[order[hi - 1]].history.size();
    b.name = "len " + std::to_string(len_lo) + ".." + std::to_string(len_hi);
    for (size_t i = lo; i < hi; ++i) {
      ++b.n;
      if (hit[order[i]]) ++b.hits;
    }
    b.acc1 = static_cast<double>(b.hits) / static_cast<double>(b.n);
    report.by_history_decile.push_back(b);
  }

  std::vector<BucketStat> hours(24);
  for (size_t i = 0; i < n; ++i) {
    const int h = timeutil::hour_of_day(items[i].target_time);
    ++hours[h].n;
    if (hit[i]) ++hours[h].hits;
  }
  for (int h = 0; h < 24; ++h) {
    if (hours[h].n == 0) continue;
    hours[h].name = "hour " + std::to_string(h);
    hours[h].acc1 = static_cast<double>(hours[h].hits) / static_cast<double>(hours[h].n);
    report.by_hour.push_back(hours[h]);
  }
}

}  // namespace

EvalReport acc_at_1(const std::vector<std::string>& predictions,
                    const std::vector<std::string>& targets, const std::vector<EvalItem>* items) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("acc_at_1: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(targets.size()) + " targets");
  }
  if (items && items->size() != targets.size()) {
    throw std::invalid_argument("acc_at_1: instance list size mismatch");
  }
  EvalReport report;
  report.n = static_cast<int64_t>(targets.size());
  std::vector<bool> hit(targets.size(), false);
  for (size_t i = 0; i < targets.size(); ++i) {
    hit[i] = predictions[i] == targets[i];
    if (hit[i]) ++report.hits;
  }
  report.acc1 = report.n == 0 ? 0.0 : static_cast<double>(report.hits) / report.n;
  if (items && !items->empty()) fill_buckets(report, hit, *items);
  return report;
}

MarkovModel fit_markov(const std::vector<std::vector<std::string>>& train_sequences,
                       double add_k) {
  bool any = false;
  MarkovModel m;
  m.add_k = add_k;
  for (const auto& seq : train_sequences) {
    for (size_t i = 0; i < seq.size(); ++i) {
      any = true;
      ++m.popularity[seq[i]];
      if (i + 1 < seq.size()) ++m.transitions[seq[i]][seq[i + 1]];
    }
  }
  if (!any) throw std::invalid_argument("fit_markov: empty corpus");
  int64_t best = -1;
  for (const auto& [s, c] : m.popularity) {
    if (c > best) {
      best = c;
      m.most_popular = s;
    }
  }
  return m;
}

std::string predict_markov(const MarkovModel& m, const std::vector<std::string>& history) {
  if (history.empty()) return m.most_popular;
  const auto row = m.transitions.find(history.back());
  if (row == m.transitions.end() || row->second.empty()) return m.most_popular;
  // Smoothing adds the same add_k to every candidate, so the argmax is the
  // raw-count argmax; map order resolves ties to the lexically smallest.
  std::string best_sid;
  int64_t best = -1;
  for (const auto& [to, c] : row->second) {
    if (c > best) {
      best = c;
      best_sid = to;
    }
  }
  return best_sid;
}

EvalReport score_external(std::istream& predictions, const std::vector<EvalItem>& items,
                          int num_layers) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(predictions, line)) lines.push_back(line);
  if (lines.size() != items.size()) {
    throw std::runtime_error("score_external: " + std::to_string(lines.size()) +
                             " prediction lines for " + std::to_string(items.size()) +
                             " instances");
  }
  std::vector<std::string> preds(items.size());
  std::vector<std::string> targets(items.size());
  int64_t unparseable = 0;
  for (size_t i = 0; i < items.size(); ++i) {
    targets[i] = items[i].target_sid;
    sid::SemanticId parsed;
    if (sid::extract_first(lines[i], num_layers, &parsed)) {
      preds[i] = sid::render(parsed);
    } else {
      ++unparseable;  // empty prediction string can never match a target
    }
  }
  EvalReport report = acc_at_1(preds, targets, &items);
  report.unparseable = unparseable;
  return report;
}

std::vector<EvalItem> render_eval_items(const std::vector<ingest::EvalInstance>& instances,
                                        const sid::Registry& registry) {
  const auto sid_of = [&registry](const std::string& poi) -> std::string {
    const auto it = registry.by_poi.find(poi);
    if (it == registry.by_poi.end()) {
      throw std::runtime_error("render_eval_items: poi '" + poi + "' missing from registry");
    }
    return sid::render(it->second);
  };
  std::vector<EvalItem> items;
  for (const auto& inst : instances) {
    EvalItem item;
    item.uid = inst.user_id;
    for (const auto& h : inst.history) item.history.push_back({sid_of(h.poi_id), h.timestamp});
    item.target_sid = sid_of(inst.target_poi);
    item.target_time = inst.target_time;
    items.push_back(std::move(item));
  }
  return items;
}

void write_eval_manifest(const std::vector<EvalItem>& items, std::ostream& out) {
  for (const auto& item : items) {
    nlohmann::json j;
    j["uid"] = item.uid;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : item.history) hist.push_back({{"sid", h.sid}, {"ts", h.timestamp}});
    j["history"] = hist;
    j["target"] = item.target_sid;
    j["target_ts"] = item.target_time;
    out << j.dump() << "\n";
  }
}

std::vector<EvalItem> read_eval_manifest(std::istream& in) {
  std::vector<EvalItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    EvalItem item;
    item.uid = j.at("uid").get<std::string>();
    for (const auto& h : j.at("history")) {
      item.history.push_back({h.at("sid").get<std::string>(), h.at("ts").get<int64_t>()});
    }
    item.target_sid = j.at("target").get<std::string>();
    item.target_time = j.at("target_ts").get<int64_t>();
    items.push_back(std::move(item));
  }
  return items;
}

PrefixSimilarity prefix_similarity_report(const sid::Registry& registry,
                                          const std::map<std::string, int>& poi_group,
                                          int sample_pairs, uint64_t seed, int bootstrap_rounds) {
  if (sample_pairs < 1) throw std::invalid_argument("sample_pairs must be >= 1");

  std::vector<const sid::SemanticId*> ids;
  std::vector<int> groups;
  std::map<int, std::vector<size_t>> members;
  for (const auto& [poi, id] : registry.by_poi) {
    const auto g = poi_group.find(poi);
    if (g == poi_group.end()) {
      throw std::runtime_error("prefix_similarity_report: poi '" + poi + "' has no group label");
    }
    members[g->second].push_back(ids.size());
    ids.push_back(&id);
    groups.push_back(g->second);
  }
  const size_t n = ids.size();
  bool has_pairable_group = false;
  for (const auto& [g, m] : members)
    if (m.size() >= 2) has_pairable_group = true;
  if (n < 2 || !has_pairable_group || members.size() < 2) {
    throw std::runtime_error(
        "prefix_similarity_report: need two groups and a group with two POIs");
  }

  num::Rng rng(seed);
  std::vector<double> same, cross;
  while (static_cast<int>(same.size()) < sample_pairs) {
    const size_t a = rng.next_below(n);
    const auto& m = members[groups[a]];
    if (m.size() < 2) continue;
    const size_t b = m[rng.next_below(m.size())];
    if (b == a) continue;
    same.push_back(static_cast<double>(sid::shared_prefix_len(*ids[a], *ids[b])));
  }
  while (static_cast<int>(cross.size()) < sample_pairs) {
    const size_t a = rng.next_below(n);
    const size_t b = rng.next_below(n);
    if (groups[a] == groups[b]) continue;
    cross.push_back(static_cast<double>(sid::shared_prefix_len(*ids[a], *ids[b])));
  }

  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto bootstrap_ci = [&rng, &mean, bootstrap_rounds](const std::vector<double>& v,
                                                            double* lo, double* hi) {
    std::vector<double> means(bootstrap_rounds);
    std::vector<double> resample(v.size());
    for (int r = 0; r < bootstrap_rounds; ++r) {
      for (auto& x : resample) x = v[rng.next_below(v.size())];
      means[r] = mean(resample);
    }
    std::sort(means.begin(), means.end());
    const size_t lo_i = static_cast<size_t>(std::floor(0.025 * (bootstrap_rounds - 1)));
    const size_t hi_i = static_cast<size_t>(std::ceil(0.975 * (bootstrap_rounds - 1)));
    *lo = means[lo_i];
    *hi = means[hi_i];
  };

  PrefixSimilarity out;
  out.same_n = static_cast<int64_t>(same.size());
  out.cross_n = static_cast<int64_t>(cross.size());
  out.same_mean = mean(same);
  out.cross_mean = mean(cross);
  bootstrap_ci(same, &out.same_ci_lo, &out.same_ci_hi);
  bootstrap_ci(cross, &out.cross_ci_lo, &out.cross_ci_hi);
  out.few_pairs_warning = out.same_n < 30 || out.cross_n < 30;
  return out;
}

}  // namespace sidkit::evalrec
