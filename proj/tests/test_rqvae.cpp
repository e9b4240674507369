#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "sidkit/autodiff.hpp"
#include "sidkit/rqvae.hpp"

using namespace sidkit::rqvae;
using sidkit::num::Graph;
using sidkit::num::Rng;
using sidkit::num::Tensor;

namespace {

Config tiny_config() {
  Config cfg;
  cfg.num_layers = 2;
  cfg.codebook_size = 4;
  cfg.code_dim = 6;
  cfg.encoder_hidden = {8};
  cfg.batch_size = 16;
  cfg.epochs = 4;
  cfg.patience = 2;
  cfg.seed = 11;
  return cfg;
}

Tensor random_features(int n, int dim, uint64_t seed) {
  Rng rng(seed);
  Tensor x(n, dim);
  for (size_t i = 0; i < x.size(); ++i) x[i] = rng.next_below(2) ? 1.0 : 0.0;
  return x;
}

Model fresh_model(const Config& cfg, int input_dim, uint64_t seed) {
  Model m;
  m.config = cfg;
  Rng rng(seed);
  init_params(m, input_dim, rng);
  // init_params leaves codebooks at zero (k-means fills them during
  // training); give them structure for the pure-function tests.
  for (int l = 0; l < cfg.num_layers; ++l) {
    m.params.value("cb." + std::to_string(l)) = Tensor::randn(cfg.codebook_size, cfg.code_dim, rng);
  }
  return m;
}

}  // namespace

TEST_CASE("config validation lists every problem at once") {
  Config cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.num_layers = 0;
  cfg.codebook_size = -1;
  cfg.compactness_mode = "sideways";
  try {
    cfg.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("num_layers") != std::string::npos);
    CHECK(msg.find("codebook_size") != std::string::npos);
    CHECK(msg.find("compactness_mode") != std::string::npos);
  }
}

TEST_CASE("quantize picks the brute-force nearest codeword per layer") {
  const Config cfg = tiny_config();
  Model m = fresh_model(cfg, 12, 5);
  Rng zrng(77);
  const Tensor z = Tensor::randn(9, cfg.code_dim, zrng);
  const auto cbs = codebooks_of(m);
  const QuantizationResult q = quantize(z, cbs);

  REQUIRE(q.indices.size() == 2);
  REQUIRE(q.residual_inputs.size() == 2);
  Tensor r = z;
  for (int l = 0; l < 2; ++l) {
    for (int i = 0; i < z.rows(); ++i) {
      // Independent argmin by exhaustive scan.
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < cfg.codebook_size; ++k) {
        double d = 0.0;
        for (int j = 0; j < cfg.code_dim; ++j) {
          const double diff = r.at(i, j) - cbs[l].at(k, j);
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      CHECK(q.indices[l][i] == best);
      CHECK(q.residual_inputs[l].at(i, 0) == r.at(i, 0));
    }
    for (int i = 0; i < z.rows(); ++i)
      for (int j = 0; j < cfg.code_dim; ++j) r.at(i, j) -= cbs[l].at(q.indices[l][i], j);
  }

  // quantized + final_residual reassembles the input.
  for (int i = 0; i < z.rows(); ++i) {
    for (int j = 0; j < cfg.code_dim; ++j) {
      CHECK(q.quantized.at(i, j) + q.final_residual.at(i, j) ==
            doctest::Approx(z.at(i, j)).epsilon(1e-14));
      CHECK(q.final_residual.at(i, j) == doctest::Approx(r.at(i, j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("duplicate codewords resolve to the smallest index") {
  std::vector<Tensor> cbs{Tensor::zeros(3, 2)};
  cbs[0].at(0, 0) = 5.0;  // far
  // rows 1 and 2 identical and nearest
  cbs[0].at(1, 0) = 1.0;
  cbs[0].at(2, 0) = 1.0;
  Tensor z = Tensor::zeros(1, 2);
  z.at(0, 0) = 1.1;
  const QuantizationResult q = quantize(z, cbs);
  CHECK(q.indices[0][0] == 1);
}

TEST_CASE("loss oracles match naive loops") {
  const Config cfg = tiny_config();
  Model m = fresh_model(cfg, 12, 9);
  Rng rng(13);
  const Tensor p = Tensor::randn(7, 12, rng);
  const Tensor p_hat = Tensor::randn(7, 12, rng);

  double recon = 0.0;
  for (size_t i = 0; i < p.size(); ++i) recon += (p[i] - p_hat[i]) * (p[i] - p_hat[i]);
  recon /= 7.0;
  CHECK(loss_recon(p, p_hat) == doctest::Approx(recon).epsilon(1e-12));

  const Tensor z = Tensor::randn(7, cfg.code_dim, rng);
  const auto cbs = codebooks_of(m);
  const QuantizationResult q = quantize(z, cbs);
  double quant = 0.0;
  for (int l = 0; l < cfg.num_layers; ++l) {
    for (int i = 0; i < 7; ++i) {
      for (int j = 0; j < cfg.code_dim; ++j) {
        const double diff = q.residual_inputs[l].at(i, j) - cbs[l].at(q.indices[l][i], j);
        quant += (1.0 + cfg.commitment_beta) * diff * diff;
      }
    }
  }
  quant /= 7.0;
  CHECK(loss_quant(q, cbs, cfg.commitment_beta) == doctest::Approx(quant).epsilon(1e-12));
}

TEST_CASE("utilization loss hits its closed forms") {
  // Perfectly balanced: zero.
  CHECK(loss_utilize({3, 3, 3, 3}) == doctest::Approx(0.0));
  // Everything on one codeword of K: 2(K-1)/K.
  for (int k : {2, 4, 32}) {
    std::vector<int64_t> counts(k, 0);
    counts[0] = 60;
    CHECK(loss_utilize(counts) == doctest::Approx(2.0 * (k - 1) / k).epsilon(1e-12));
  }
  // Hand-worked: counts {5,1,0,2}, N=8, K=4, N/K=2 -> (3+1+2+0)/8.
  CHECK(loss_utilize({5, 1, 0, 2}) == doctest::Approx(6.0 / 8.0).epsilon(1e-12));
}

TEST_CASE("compactness is the mean pairwise squared distance") {
  Tensor v = Tensor::zeros(3, 2);
  v.at(0, 0) = 0.0;
  v.at(1, 0) = 1.0;
  v.at(2, 0) = 3.0;
  // pairs: (0,1)=1, (0,2)=9, (1,2)=4 -> mean 14/3
  CHECK(loss_compactness(v) == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
  CHECK(loss_compactness(Tensor::zeros(1, 4)) == 0.0);
}

TEST_CASE("diversity loss composes utilization and compactness per layer") {
  const Config cfg = tiny_config();
  Model m = fresh_model(cfg, 12, 21);
  Rng rng(22);
  const Tensor z = Tensor::randn(10, cfg.code_dim, rng);
  const auto cbs = codebooks_of(m);
  const QuantizationResult q = quantize(z, cbs);

  double want = 0.0;
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::vector<int64_t> counts(cfg.codebook_size, 0);
    for (int idx : q.indices[l]) counts[idx]++;
    want += loss_utilize(counts);
    for (int k = 0; k < cfg.codebook_size; ++k) {
      std::vector<int> members;
      for (int i = 0; i < 10; ++i)
        if (q.indices[l][i] == k) members.push_back(i);
      if (members.size() < 2) continue;  // singleton and empty groups contribute nothing
      Tensor group(static_cast<int>(members.size()), cfg.code_dim);
      for (size_t a = 0; a < members.size(); ++a)
        for (int j = 0; j < cfg.code_dim; ++j)
          group.at(static_cast<int>(a), j) = q.residual_inputs[l].at(members[a], j);
      want += loss_compactness(group);
    }
  }
  CHECK(loss_diversity(q, cbs, cfg.codebook_size, "assigned") ==
        doctest::Approx(want).epsilon(1e-12));

  double want_cw = 0.0;
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::vector<int64_t> counts(cfg.codebook_size, 0);
    for (int idx : q.indices[l]) counts[idx]++;
    want_cw += loss_utilize(counts) + loss_compactness(cbs[l]);
  }
  CHECK(loss_diversity(q, cbs, cfg.codebook_size, "codewords") ==
        doctest::Approx(want_cw).epsilon(1e-12));
}

TEST_CASE("tape-built total loss agrees with the standalone losses") {
  const Config cfg = tiny_config();
  Model m = fresh_model(cfg, 12, 31);
  const Tensor batch = random_features(11, 12, 32);

  Graph g(&m.params);
  const LossGraph lg = build_total_loss(g, m, batch);

  const Tensor z = encode(m, batch);
  const auto cbs = codebooks_of(m);
  const QuantizationResult q = quantize(z, cbs);
  const Tensor recon_in = sidkit::num::add(z, sidkit::num::sub(q.quantized, z));
  const Tensor p_hat = decode(m, recon_in);

  CHECK(g.scalar_value(lg.recon) == doctest::Approx(loss_recon(batch, p_hat)).epsilon(1e-12));
  CHECK(g.scalar_value(lg.quant) ==
        doctest::Approx(loss_quant(q, cbs, cfg.commitment_beta)).epsilon(1e-12));
  CHECK(g.scalar_value(lg.div) ==
        doctest::Approx(loss_diversity(q, cbs, cfg.codebook_size, "assigned")).epsilon(1e-12));
  const double want_total = g.scalar_value(lg.recon) + cfg.quant_weight * g.scalar_value(lg.quant) +
                            cfg.diversity_weight * g.scalar_value(lg.div);
  CHECK(g.scalar_value(lg.total) == doctest::Approx(want_total).epsilon(1e-12));
  CHECK(lg.assignments == q.indices);
}

TEST_CASE("training runs, logs, and improves reconstruction") {
  Config cfg = tiny_config();
  cfg.epochs = 12;
  cfg.patience = 12;
  cfg.learning_rate = 5e-3;
  Model m;
  m.config = cfg;
  const Tensor features = random_features(48, 20, 3);

  std::ostringstream log;
  const TrainReport report = train(m, features, &log);
  REQUIRE_FALSE(report.epochs.empty());
  CHECK_FALSE(report.aborted_non_finite);
  CHECK(report.best_epoch >= 0);
  CHECK(report.best_recon <= report.epochs.front().recon);
  CHECK(log.str().find("epoch 1 recon") != std::string::npos);
  // One utilization entropy per layer, all finite.
  for (const auto& e : report.epochs) {
    REQUIRE(e.utilization_entropy.size() == 2);
    for (double h : e.utilization_entropy) CHECK(std::isfinite(h));
  }
}

TEST_CASE("training is bit-reproducible for a fixed seed") {
  const Tensor features = random_features(40, 16, 8);
  auto run = [&features] {
    Model m;
    m.config = tiny_config();
    train(m, features, nullptr);
    std::ostringstream out;
    save_model(m, out);
    return out.str();
  };
  const std::string a = run();
  const std::string b = run();
  CHECK(a == b);
  Model other;
  other.config = tiny_config();
  other.config.seed = 12;
  train(other, features, nullptr);
  std::ostringstream out;
  save_model(other, out);
  CHECK(a != out.str());
}

TEST_CASE("save/load reproduces assignments exactly") {
  Config cfg = tiny_config();
  Model m;
  m.config = cfg;
  const Tensor features = random_features(30, 14, 4);
  train(m, features, nullptr);

  std::ostringstream out;
  save_model(m, out);
  std::istringstream in(out.str());
  Model back = load_model(in);
  CHECK(back.input_dim == m.input_dim);
  CHECK(back.config.codebook_size == cfg.codebook_size);
  CHECK(infer_indices(back, features) == infer_indices(m, features));

  std::ostringstream again;
  save_model(back, again);
  CHECK(again.str() == out.str());

  std::istringstream junk("wrong-header\n");
  CHECK_THROWS_AS(load_model(junk), std::runtime_error);
}

TEST_CASE("a divergent run aborts and restores finite parameters") {
  Config cfg = tiny_config();
  cfg.learning_rate = 1e18;  // guaranteed blow-up
  cfg.epochs = 30;
  cfg.patience = 30;
  Model m;
  m.config = cfg;
  const Tensor features = random_features(32, 16, 6);
  std::ostringstream log;
  const TrainReport report = train(m, features, &log);
  if (report.aborted_non_finite) {
    CHECK(log.str().find("abort") != std::string::npos);
    // Restored parameters are usable: a forward pass stays finite.
    const Tensor z = encode(m, features);
    CHECK(z.all_finite());
  } else {
    // Adam's normalized steps can survive huge rates; the report must then
    // be a normal one.
    CHECK(report.best_epoch >= 0);
  }
}

TEST_CASE("infer_indices is batch-order independent") {
  Config cfg = tiny_config();
  Model m;
  m.config = cfg;
  const Tensor features = random_features(25, 14, 10);
  train(m, features, nullptr);
  const auto all = infer_indices(m, features);
  // Re-query single rows: each must match the bulk answer.
  for (int i = 0; i < features.rows(); i += 7) {
    Tensor one(1, features.cols());
    for (int j = 0; j < features.cols(); ++j) one.at(0, j) = features.at(i, j);
    const auto single = infer_indices(m, one);
    REQUIRE(single.size() == 1);
    CHECK(single[0] == all[i]);
  }
}
