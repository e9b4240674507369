#include <benchmark/benchmark.h>

#include <sstream>

#include "sidkit/prompts.hpp"
#include "sidkit/sid.hpp"
#include "sidkit/timeutil.hpp"

using namespace sidkit;

namespace {

sid::Registry demo_registry(int pois) {
  std::vector<std::pair<std::string, std::vector<int>>> tuples;
  for (int i = 0; i < pois; ++i) {
    tuples.push_back({"p" + std::to_string(i), {i % 32, (i / 32) % 32, i % 29}});
  }
  return sid::assign_sids(tuples, 32, 3);
}

std::vector<ingest::UserSequence> demo_sequences(int users, int events) {
  const int64_t base = timeutil::to_epoch_seconds({2012, 4, 3, 0, 0, 0});
  std::vector<ingest::UserSequence> seqs;
  for (int u = 0; u < users; ++u) {
    ingest::UserSequence seq;
    for (int e = 0; e < events; ++e) {
      ingest::CheckIn c;
      c.user_id = "u" + std::to_string(u);
      c.poi_id = "p" + std::to_string((u * 31 + e * 7) % 512);
      c.timestamp = base + u * 86400 + e * 3600;
      seq.push_back(c);
    }
    seqs.push_back(seq);
  }
  return seqs;
}

}  // namespace

static void BM_MakeTrainingSet(benchmark::State& state) {
  const auto registry = demo_registry(512);
  const auto seqs = demo_sequences(static_cast<int>(state.range(0)), 120);
  int64_t examples = 0;
  for (auto _ : state) {
    const auto result = prompt::make_training_set(seqs, registry, {}, prompt::AugmentPolicy{},
                                                  prompt::Variant::full, 5, "train");
    examples += static_cast<int64_t>(result.examples.size());
    benchmark::DoNotOptimize(result);
  }
  state.SetItemsProcessed(examples);
}
BENCHMARK(BM_MakeTrainingSet)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_WriteJsonl(benchmark::State& state) {
  const auto registry = demo_registry(512);
  const auto seqs = demo_sequences(128, 120);
  const auto result = prompt::make_training_set(seqs, registry, {}, prompt::AugmentPolicy{},
                                                prompt::Variant::full, 5, "train");
  for (auto _ : state) {
    std::ostringstream out;
    prompt::write_jsonl(result.examples, out);
    benchmark::DoNotOptimize(out.str());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(result.examples.size()));
}
BENCHMARK(BM_WriteJsonl)->Unit(benchmark::kMillisecond);
