#include <benchmark/benchmark.h>

#include <vector>

#include "sidkit/geocode.hpp"
#include "sidkit/rng.hpp"

static void BM_PlusCodeEncode(benchmark::State& state) {
  const int precision = static_cast<int>(state.range(0));
  sidkit::num::Rng rng(7);
  std::vector<std::pair<double, double>> points;
  for (int i = 0; i < 1024; ++i) {
    points.push_back({rng.next_double() * 180.0 - 90.0, rng.next_double() * 360.0 - 180.0});
  }
  size_t i = 0;
  for (auto _ : state) {
    const auto& [lat, lon] = points[i++ & 1023];
    benchmark::DoNotOptimize(sidkit::geo::encode(lat, lon, precision));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PlusCodeEncode)->Arg(8)->Arg(10);

static void BM_PlusCodeDecode(benchmark::State& state) {
  sidkit::num::Rng rng(8);
  std::vector<std::string> codes;
  for (int i = 0; i < 1024; ++i) {
    codes.push_back(sidkit::geo::encode(rng.next_double() * 180.0 - 90.0,
                                        rng.next_double() * 360.0 - 180.0, 10));
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sidkit::geo::decode_cell(codes[i++ & 1023]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PlusCodeDecode);
