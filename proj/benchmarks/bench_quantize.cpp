#include <benchmark/benchmark.h>

#include "sidkit/rng.hpp"
#include "sidkit/rqvae.hpp"

using sidkit::num::Rng;
using sidkit::num::Tensor;

static void BM_Quantize(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  const int dim = 32, layers = 4;
  Rng rng(1);
  const Tensor z = Tensor::randn(n, dim, rng);
  std::vector<Tensor> cbs;
  for (int l = 0; l < layers; ++l) cbs.push_back(Tensor::randn(k, dim, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sidkit::rqvae::quantize(z, cbs));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Quantize)->Args({256, 64})->Args({1024, 64})->Args({1024, 256})->Args({4096, 256});

static void BM_TrainEpochStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  sidkit::rqvae::Config cfg;
  cfg.num_layers = 3;
  cfg.codebook_size = 32;
  cfg.code_dim = 16;
  cfg.encoder_hidden = {64};
  cfg.batch_size = n;
  cfg.epochs = 1;
  cfg.patience = 1;
  cfg.seed = 3;
  Rng rng(2);
  const Tensor features = Tensor::randn(n, 48, rng);
  for (auto _ : state) {
    sidkit::rqvae::Model m;
    m.config = cfg;
    benchmark::DoNotOptimize(sidkit::rqvae::train(m, features, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainEpochStep)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
