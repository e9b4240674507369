#pragma once

// Deterministic synthetic check-in corpus. POIs come in clusters that agree
// on category, geography (one plus-code cell per cluster), active hours, and
// the user community that visits them, so every feature span carries the
// same grouping signal. Shared by the make_fixture tool and the end-to-end
// tests.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "sidkit/rng.hpp"
#include "sidkit/timeutil.hpp"

namespace fixture {

struct Params {
  int num_clusters = 8;
  int pois_per_cluster = 25;
  int num_users = 60;
  int events_per_user = 80;
  uint64_t seed = 7;
};

inline std::string poi_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "P%04d", index);
  return buf;
}

inline std::string user_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U%03d", index);
  return buf;
}

inline std::string cluster_category(int cluster) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "cat_%02d", cluster);
  return buf;
}

// Cluster centers sit on plus-code cell centers (precision 8 cells are
// 0.0025 degrees square), 0.1 degrees apart; a +/-0.001 degree jitter keeps
// every POI of a cluster inside its cluster's cell.
inline double cluster_lat(int cluster) { return 40.0 + (cluster / 8) * 0.1 + 0.00125; }
inline double cluster_lon(int cluster) { return -74.0 + (cluster % 8) * 0.1 + 0.00125; }

struct Event {
  std::string user;
  std::string poi;
  int64_t timestamp = 0;
  std::string category;
  double lat = 0.0;
  double lon = 0.0;
};

inline std::vector<Event> make_events(const Params& p) {
  sidkit::num::Rng rng(p.seed);
  const int num_pois = p.num_clusters * p.pois_per_cluster;

  std::vector<double> poi_lat(num_pois), poi_lon(num_pois);
  for (int i = 0; i < num_pois; ++i) {
    const int c = i / p.pois_per_cluster;
    poi_lat[i] = cluster_lat(c) + (rng.next_double() * 2.0 - 1.0) * 0.001;
    poi_lon[i] = cluster_lon(c) + (rng.next_double() * 2.0 - 1.0) * 0.001;
  }

  // 2012-04-03 00:00:00, echoing the vintage of public check-in dumps.
  const int64_t base = sidkit::timeutil::to_epoch_seconds({2012, 4, 3, 0, 0, 0});

  std::vector<Event> events;
  events.reserve(static_cast<size_t>(p.num_users) * p.events_per_user);
  for (int u = 0; u < p.num_users; ++u) {
    const int home = u % p.num_clusters;
    const int second = (home + 1) % p.num_clusters;
    int64_t t = base + static_cast<int64_t>(u) * 3600;
    for (int e = 0; e < p.events_per_user; ++e) {
      t += 1800 + static_cast<int64_t>(rng.next_below(48 * 3600 - 1800));
      const uint64_t roll = rng.next_below(10);
      int cluster = home;
      if (roll >= 9) {
        cluster = static_cast<int>(rng.next_below(p.num_clusters));
      } else if (roll >= 7) {
        cluster = second;
      }
      const int poi = cluster * p.pois_per_cluster +
                      static_cast<int>(rng.next_below(p.pois_per_cluster));
      // Snap the wall-clock hour into the cluster's 4-hour activity window.
      const int hour = static_cast<int>((cluster * 5 + rng.next_below(4)) % 24);
      sidkit::timeutil::Civil c = sidkit::timeutil::from_epoch_seconds(t);
      c.hour = hour;
      const int64_t stamped = sidkit::timeutil::to_epoch_seconds(c);
      events.push_back({user_id(u), poi_id(poi), stamped, cluster_category(cluster),
                        poi_lat[poi], poi_lon[poi]});
    }
  }
  return events;
}

// Columns: user, poi, ISO timestamp, category, lat, lon (tab separated, no
// header) -- the ingest defaults.
inline void write_fixture_tsv(std::ostream& out, const Params& p) {
  char buf[32];
  for (const Event& e : make_events(p)) {
    out << e.user << "\t" << e.poi << "\t" << sidkit::timeutil::format_second(e.timestamp)
        << "\t" << e.category;
    std::snprintf(buf, sizeof(buf), "%.6f", e.lat);
    out << "\t" << buf;
    std::snprintf(buf, sizeof(buf), "%.6f", e.lon);
    out << "\t" << buf << "\n";
  }
}

}  // namespace fixture
