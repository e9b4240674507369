#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sidkit/autodiff.hpp"
#include "sidkit/optimizer.hpp"
#include "sidkit/rng.hpp"
#include "sidkit/tensor.hpp"

namespace sidkit::rqvae {

struct Config {
  int num_layers = 3;      // stacked residual codebooks
  int codebook_size = 32;  // codewords per layer
  int code_dim = 64;       // latent width
  std::vector<int> encoder_hidden = {512, 128};
  double commitment_beta = 0.25;   // weight on the encoder-commitment term
  double quant_weight = 1.0;       // weight on the quantization loss
  double diversity_weight = 0.25;  // weight on the diversity loss
  double learning_rate = 1e-3;
  int batch_size = 256;
  int epochs = 200;    // hard cap
  int patience = 10;   // epochs without full-set recon improvement before stopping
  int kmeans_iters = 10;
  uint64_t seed = 1;
  // "assigned": compactness over the batch residuals mapped to each codeword
  // (default). "codewords": over the codebook rows themselves.
  std::string compactness_mode = "assigned";

  void validate() const;  // throws std::invalid_argument listing every problem
};

// Encoder/decoder weights and codebooks all live in one ParamStore under
// fixed names: enc.<i>.w / enc.<i>.b, dec.<i>.w / dec.<i>.b, cb.<l>.
struct Model {
  Config config;
  int input_dim = 0;
  num::ParamStore params;

  bool initialized() const { return input_dim > 0; }
};

// Creates randomly-initialized encoder/decoder weights and zero codebooks.
void init_params(Model& m, int input_dim, num::Rng& rng);

// Plain forward passes (no tape).
num::Tensor encode(const Model& m, const num::Tensor& x);
num::Tensor decode(const Model& m, const num::Tensor& z);

std::vector<num::Tensor> codebooks_of(const Model& m);

struct QuantizationResult {
  std::vector<std::vector<int>> indices;     // [layer][row]
  std::vector<num::Tensor> residual_inputs;  // r at each layer's input, [layer] of N x d
  num::Tensor quantized;                     // sum of selected codewords, N x d
  num::Tensor final_residual;                // what remains after the last layer, N x d
};

// Greedy per-layer nearest codeword (squared Euclidean, ties to the smaller
// index). Satisfies quantized + final_residual == input exactly up to
// floating-point rounding of the subtraction chain.
QuantizationResult quantize(const num::Tensor& z_e, const std::vector<num::Tensor>& codebooks);

// Loss values on plain tensors. These are the reference equations; the
// training tape in build_total_loss must agree with them exactly.
double loss_recon(const num::Tensor& p, const num::Tensor& p_hat);
double loss_quant(const QuantizationResult& q, const std::vector<num::Tensor>& codebooks,
                  double beta);
// (1/N) * sum_i |count_i - N/K| where N = sum of counts and counts has one
// entry per codeword (zeros included).
double loss_utilize(const std::vector<int64_t>& counts);
// Mean pairwise squared distance between rows; 0 when rows < 2.
double loss_compactness(const num::Tensor& vectors);
double loss_diversity(const QuantizationResult& q, const std::vector<num::Tensor>& codebooks,
                      int codebook_size, const std::string& compactness_mode);

// The training loss assembled on a tape bound to m.params.
struct LossGraph {
  num::Var total;
  num::Var recon;
  num::Var quant;
  num::Var div;
  num::Var z_e;
  std::vector<std::vector<int>> assignments;  // [layer][row]
};
LossGraph build_total_loss(num::Graph& g, const Model& m, const num::Tensor& batch);

// Initializes codebooks layer by layer: layer l clusters the residuals the
// already-initialized layers 0..l-1 leave on `first_batch`.
struct KmeansInitReport {
  bool sampled_with_replacement = false;
  bool degenerate = false;
};
KmeansInitReport kmeans_init_codebooks(Model& m, const num::Tensor& first_batch, num::Rng& rng);

struct EpochStats {
  int epoch = 0;
  double recon = 0.0;
  double quant = 0.0;
  double div = 0.0;
  std::vector<double> utilization_entropy;  // per layer, nats, over the full set
  int64_t collisions = 0;                   // rows sharing an index tuple with another row
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_recon = 0.0;
  bool aborted_non_finite = false;
  KmeansInitReport kmeans;
};

// Mini-batch training of the total loss. Initializes parameters and
// codebooks if the model is fresh. Single-threaded and bit-reproducible for
// a fixed seed. A non-finite loss aborts training and restores the
// parameters from the end of the previous epoch.
TrainReport train(Model& m, const num::Tensor& features, std::ostream* log = nullptr);

// Per-row codeword index tuples, [row][layer]. Batch-order independent.
std::vector<std::vector<int>> infer_indices(const Model& m, const num::Tensor& features);

// Versioned text checkpoint: config echo + every parameter tensor.
void save_model(const Model& m, std::ostream& out);
Model load_model(std::istream& in);

}  // namespace sidkit::rqvae
