#include "sidkit/rqvae.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sidkit/kmeans.hpp"

namespace sidkit::rqvae {

namespace {

std::string enc_w(int i) { return "enc." + std::to_string(i) + ".w"; }
std::string enc_b(int i) { return "enc." + std::to_string(i) + ".b"; }
std::string dec_w(int i) { return "dec." + std::to_string(i) + ".w"; }
std::string dec_b(int i) { return "dec." + std::to_string(i) + ".b"; }
std::string cb_name(int l) { return "cb." + std::to_string(l); }

// Layer widths, input to output.
std::vector<int> encoder_widths(const Config& c, int input_dim) {
  std::vector<int> w{input_dim};
  w.insert(w.end(), c.encoder_hidden.begin(), c.encoder_hidden.end());
  w.push_back(c.code_dim);
  return w;
}

std::vector<int> decoder_widths(const Config& c, int input_dim) {
  std::vector<int> w{c.code_dim};
  w.insert(w.end(), c.encoder_hidden.rbegin(), c.encoder_hidden.rend());
  w.push_back(input_dim);
  return w;
}

std::vector<int64_t> assignment_counts(const std::vector<int>& idx, int k) {
  std::vector<int64_t> counts(k, 0);
  for (int i : idx) ++counts[i];
  return counts;
}

// Rows of `m` grouped by assigned codeword; groups[c] lists row numbers.
std::vector<std::vector<int>> group_by_assignment(const std::vector<int>& idx, int k) {
  std::vector<std::vector<int>> groups(k);
  for (size_t i = 0; i < idx.size(); ++i) groups[idx[i]].push_back(static_cast<int>(i));
  return groups;
}

double entropy_nats(const std::vector<int64_t>& counts) {
  int64_t n = 0;
  for (int64_t c : counts) n += c;
  if (n == 0) return 0.0;
  double h = 0.0;
  for (int64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

int64_t colliding_rows(const std::vector<std::vector<int>>& tuples) {
  std::map<std::vector<int>, int64_t> groups;
  for (const auto& t : tuples) ++groups[t];
  int64_t n = 0;
  for (const auto& [t, c] : groups)
    if (c >= 2) n += c;
  return n;
}

}  // namespace

void Config::validate() const {
  std::vector<std::string> problems;
  if (num_layers < 1) problems.push_back("num_layers must be >= 1");
  if (codebook_size < 2) problems.push_back("codebook_size must be >= 2");
  if (code_dim < 1) problems.push_back("code_dim must be >= 1");
  for (int h : encoder_hidden)
    if (h < 1) problems.push_back("encoder_hidden widths must be >= 1");
  if (commitment_beta < 0.0) problems.push_back("commitment_beta must be >= 0");
  if (quant_weight < 0.0 || quant_weight > 1.0) problems.push_back("quant_weight must be in [0,1]");
  if (diversity_weight < 0.0 || diversity_weight > 1.0) {
    problems.push_back("diversity_weight must be in [0,1]");
  }
  if (learning_rate <= 0.0) problems.push_back("learning_rate must be positive");
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (epochs < 1) problems.push_back("epochs must be >= 1");
  if (patience < 1) problems.push_back("patience must be >= 1");
  if (kmeans_iters < 1) problems.push_back("kmeans_iters must be >= 1");
  if (compactness_mode != "assigned" && compactness_mode != "codewords") {
    problems.push_back("compactness_mode must be 'assigned' or 'codewords'");
  }
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw std::invalid_argument(msg);
  }
}

void init_params(Model& m, int input_dim, num::Rng& rng) {
  m.config.validate();
  if (input_dim < 1) throw std::invalid_argument("init_params: input_dim must be >= 1");
  m.input_dim = input_dim;

  const auto make_mlp = [&](const std::vector<int>& widths, auto w_name, auto b_name) {
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
      const int fan_in = widths[i];
      const int fan_out = widths[i + 1];
      const bool last = i + 2 == widths.size();
      // He scaling in front of ReLU; plain 1/sqrt(fan_in) for the linear head.
      const double stddev = last ? 1.0 / std::sqrt(fan_in) : std::sqrt(2.0 / fan_in);
      m.params.create(w_name(static_cast<int>(i)),
                      num::Tensor::randn(fan_in, fan_out, rng, stddev));
      m.params.create(b_name(static_cast<int>(i)), num::Tensor::zeros(1, fan_out));
    }
  };
  make_mlp(encoder_widths(m.config, input_dim), enc_w, enc_b);
  make_mlp(decoder_widths(m.config, input_dim), dec_w, dec_b);
  for (int l = 0; l < m.config.num_layers; ++l) {
    m.params.create(cb_name(l), num::Tensor::zeros(m.config.codebook_size, m.config.code_dim));
  }
}

num::Tensor encode(const Model& m, const num::Tensor& x) {
  if (x.cols() != m.input_dim) {
    throw std::runtime_error("encode: input width " + std::to_string(x.cols()) +
                             " does not match trained width " + std::to_string(m.input_dim));
  }
  num::Tensor h = x;
  const int layers = static_cast<int>(m.config.encoder_hidden.size()) + 1;
  for (int i = 0; i < layers; ++i) {
    h = num::matmul(h, m.params.value(enc_w(i)));
    const num::Tensor& b = m.params.value(enc_b(i));
    for (int r = 0; r < h.rows(); ++r)
      for (int c = 0; c < h.cols(); ++c) h.at(r, c) += b.at(0, c);
    if (i + 1 < layers) {
      for (auto& v : h.data())
        if (v < 0.0) v = 0.0;
    }
  }
  return h;
}

num::Tensor decode(const Model& m, const num::Tensor& z) {
  if (z.cols() != m.config.code_dim) {
    throw std::runtime_error("decode: input width " + std::to_string(z.cols()) +
                             " does not match code dim " + std::to_string(m.config.code_dim));
  }
  num::Tensor h = z;
  const int layers = static_cast<int>(m.config.encoder_hidden.size()) + 1;
  for (int i = 0; i < layers; ++i) {
    h = num::matmul(h, m.params.value(dec_w(i)));
    const num::Tensor& b = m.params.value(dec_b(i));
    for (int r = 0; r < h.rows(); ++r)
      for (int c = 0; c < h.cols(); ++c) h.at(r, c) += b.at(0, c);
    if (i + 1 < layers) {
      for (auto& v : h.data())
        if (v < 0.0) v = 0.0;
    }
  }
  return h;
}

std::vector<num::Tensor> codebooks_of(const Model& m) {
  std::vector<num::Tensor> out;
  for (int l = 0; l < m.config.num_layers; ++l) out.push_back(m.params.value(cb_name(l)));
  return out;
}

QuantizationResult quantize(const num::Tensor& z_e, const std::vector<num::Tensor>& codebooks) {
  QuantizationResult q;
  num::Tensor r = z_e;
  q.quantized = num::Tensor::zeros(z_e.rows(), z_e.cols());
  for (const auto& cb : codebooks) {
    if (cb.cols() != z_e.cols()) {
      throw std::runtime_error("quantize: codebook width " + std::to_string(cb.cols()) +
                               " does not match latent width " + std::to_string(z_e.cols()));
    }
    const std::vector<int> idx = num::argmin_rows(num::sq_dist_rows(r, cb));
    const num::Tensor gathered = num::gather_rows(cb, idx);
    q.residual_inputs.push_back(r);
    q.indices.push_back(idx);
    q.quantized = num::add(q.quantized, gathered);
    r = num::sub(r, gathered);
  }
  q.final_residual = r;
  return q;
}

double loss_recon(const num::Tensor& p, const num::Tensor& p_hat) {
  if (!p.same_shape(p_hat)) {
    throw std::runtime_error("loss_recon: shape mismatch " + p.shape_str() + " vs " +
                             p_hat.shape_str());
  }
  return num::sum_squares(num::sub(p, p_hat)) / static_cast<double>(p.rows());
}

double loss_quant(const QuantizationResult& q, const std::vector<num::Tensor>& codebooks,
                  double beta) {
  double total = 0.0;
  for (size_t l = 0; l < codebooks.size(); ++l) {
    const num::Tensor gathered = num::gather_rows(codebooks[l], q.indices[l]);
    const double d2 = num::sum_squares(num::sub(q.residual_inputs[l], gathered));
    total += (1.0 + beta) * d2;
  }
  return total / static_cast<double>(q.residual_inputs.front().rows());
}

double loss_utilize(const std::vector<int64_t>& counts) {
  int64_t n = 0;
  for (int64_t c : counts) n += c;
  if (n == 0) throw std::runtime_error("loss_utilize: empty batch");
  const double target = static_cast<double>(n) / static_cast<double>(counts.size());
  double s = 0.0;
  for (int64_t c : counts) s += std::abs(static_cast<double>(c) - target);
  return s / static_cast<double>(n);
}

double loss_compactness(const num::Tensor& vectors) {
  const int k = vectors.rows();
  if (k < 2) return 0.0;
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      double d = 0.0;
      for (int c = 0; c < vectors.cols(); ++c) {
        const double diff = vectors.at(i, c) - vectors.at(j, c);
        d += diff * diff;
      }
      s += d;
    }
  }
  return s / (static_cast<double>(k) * (k - 1));
}

double loss_diversity(const QuantizationResult& q, const std::vector<num::Tensor>& codebooks,
                      int codebook_size, const std::string& compactness_mode) {
  double total = 0.0;
  for (size_t l = 0; l < q.indices.size(); ++l) {
    total += loss_utilize(assignment_counts(q.indices[l], codebook_size));
    if (compactness_mode == "codewords") {
      total += loss_compactness(codebooks[l]);
      continue;
    }
    for (const auto& group : group_by_assignment(q.indices[l], codebook_size)) {
      if (group.size() < 2) continue;
      total += loss_compactness(num::gather_rows(q.residual_inputs[l], group));
    }
  }
  return total;
}

LossGraph build_total_loss(num::Graph& g, const Model& m, const num::Tensor& batch) {
  const Config& cfg = m.config;
  const int n = batch.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossGraph lg;
  const num::Var x = g.input(batch);

  // Encoder.
  num::Var h = x;
  const int enc_layers = static_cast<int>(cfg.encoder_hidden.size()) + 1;
  for (int i = 0; i < enc_layers; ++i) {
    h = g.affine(h, g.param(enc_w(i)), g.param(enc_b(i)));
    if (i + 1 < enc_layers) h = g.relu(h);
  }
  lg.z_e = h;

  // Residual quantization. The recursion subtracts a stop-gradient copy of
  // the selected codewords, so codebooks learn only from their own
  // quantization term and never through later layers.
  num::Var r = lg.z_e;
  num::Var z_q;
  num::Var quant_acc;
  num::Var comp_acc;
  bool have_comp = false;
  double utilize_sum = 0.0;
  for (int l = 0; l < cfg.num_layers; ++l) {
    const num::Var cb = g.param(cb_name(l));
    const std::vector<int> idx = num::argmin_rows(num::sq_dist_rows(g.value(r), g.value(cb)));
    lg.assignments.push_back(idx);
    const num::Var gathered = g.gather_rows(cb, idx);

    const num::Var term1 = g.sum_squares(g.sub(g.stop_gradient(r), gathered));
    const num::Var term2 = g.sum_squares(g.sub(r, g.stop_gradient(gathered)));
    const num::Var layer_quant = g.add(term1, g.scale(term2, cfg.commitment_beta));
    quant_acc = l == 0 ? layer_quant : g.add(quant_acc, layer_quant);

    utilize_sum += loss_utilize(assignment_counts(idx, cfg.codebook_size));
    if (cfg.compactness_mode == "codewords") {
      const num::Var c = g.mean_pairwise_sq_dist(cb);
      comp_acc = have_comp ? g.add(comp_acc, c) : c;
      have_comp = true;
    } else {
      for (const auto& group : group_by_assignment(idx, cfg.codebook_size)) {
        if (group.size() < 2) continue;
        const num::Var c = g.mean_pairwise_sq_dist(g.gather_rows(r, group));
        comp_acc = have_comp ? g.add(comp_acc, c) : c;
        have_comp = true;
      }
    }

    z_q = l == 0 ? gathered : g.add(z_q, gathered);
    r = g.sub(r, g.stop_gradient(gathered));
  }
  lg.quant = g.scale(quant_acc, inv_n);

  // Decoder sees the quantized latent; gradients pass straight through to
  // the encoder output.
  num::Var d = g.straight_through(lg.z_e, z_q);
  const int dec_layers = static_cast<int>(cfg.encoder_hidden.size()) + 1;
  for (int i = 0; i < dec_layers; ++i) {
    d = g.affine(d, g.param(dec_w(i)), g.param(dec_b(i)));
    if (i + 1 < dec_layers) d = g.relu(d);
  }
  lg.recon = g.scale(g.sum_squares(g.sub(x, d)), inv_n);

  // Codeword-usage counts are piecewise constant in the parameters, so the
  // utilization part enters as a constant; only compactness distances carry
  // gradient.
  lg.div = have_comp ? g.add(g.constant(utilize_sum), comp_acc) : g.constant(utilize_sum);

  lg.total = g.add(lg.recon, g.add(g.scale(lg.quant, cfg.quant_weight),
                                   g.scale(lg.div, cfg.diversity_weight)));
  return lg;
}

KmeansInitReport kmeans_init_codebooks(Model& m, const num::Tensor& first_batch, num::Rng& rng) {
  KmeansInitReport report;
  num::Tensor r = encode(m, first_batch);
  for (int l = 0; l < m.config.num_layers; ++l) {
    const num::KmeansResult km =
        num::fit_kmeans(r, m.config.codebook_size, m.config.kmeans_iters, rng);
    report.sampled_with_replacement |= km.sampled_with_replacement;
    report.degenerate |= km.degenerate;
    m.params.value(cb_name(l)) = km.centers;
    r = num::sub(r, num::gather_rows(km.centers, km.assignments));
  }
  return report;
}

TrainReport train(Model& m, const num::Tensor& features, std::ostream* log) {
  m.config.validate();
  const Config& cfg = m.config;
  const int n = features.rows();
  num::Rng rng(cfg.seed);

  TrainReport report;
  if (!m.initialized()) {
    init_params(m, features.cols(), rng);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    order.resize(std::min<size_t>(order.size(), static_cast<size_t>(cfg.batch_size)));
    report.kmeans = kmeans_init_codebooks(m, num::gather_rows(features, order), rng);
  } else if (m.input_dim != features.cols()) {
    throw std::runtime_error("train: feature width " + std::to_string(features.cols()) +
                             " does not match model width " + std::to_string(m.input_dim));
  }

  num::ParamStore last_good = m.params;
  double best_recon = std::numeric_limits<double>::infinity();
  int epochs_since_improve = 0;

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(perm);
    double recon_sum = 0.0, quant_sum = 0.0, div_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      const std::vector<int> rows(perm.begin() + start, perm.begin() + end);
      const num::Tensor batch = num::gather_rows(features, rows);
      try {
        num::Graph g(&m.params);
        const LossGraph lg = build_total_loss(g, m, batch);
        g.backward(lg.total);
        recon_sum += g.scalar_value(lg.recon) * static_cast<double>(rows.size());
        quant_sum += g.scalar_value(lg.quant) * static_cast<double>(rows.size());
        div_sum += g.scalar_value(lg.div) * static_cast<double>(rows.size());
      } catch (const std::runtime_error& e) {
        if (std::string(e.what()).find("non-finite") == std::string::npos) throw;
        m.params = last_good;
        report.aborted_non_finite = true;
        if (log) *log << "aborted at epoch " << epoch << ": " << e.what() << "\n";
        return report;
      }
      m.params.adam_step(cfg.learning_rate);
      m.params.zero_grads();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.recon = recon_sum / n;
    stats.quant = quant_sum / n;
    stats.div = div_sum / n;

    // Full-set pass for the report and the stopping rule.
    const num::Tensor z = encode(m, features);
    const QuantizationResult q = quantize(z, codebooks_of(m));
    for (const auto& idx : q.indices) {
      stats.utilization_entropy.push_back(entropy_nats(assignment_counts(idx, cfg.codebook_size)));
    }
    std::vector<std::vector<int>> tuples(n);
    for (int i = 0; i < n; ++i)
      for (size_t l = 0; l < q.indices.size(); ++l) tuples[i].push_back(q.indices[l][i]);
    stats.collisions = colliding_rows(tuples);
    const double full_recon = loss_recon(features, decode(m, q.quantized));
    report.epochs.push_back(stats);

    if (log) {
      char line[256];
      std::snprintf(line, sizeof(line), "epoch %d recon %.6f quant %.6f div %.6f", epoch,
                    stats.recon, stats.quant, stats.div);
      *log << line << " entropy ";
      for (size_t l = 0; l < stats.utilization_entropy.size(); ++l) {
        std::snprintf(line, sizeof(line), "%s%.6f", l ? "," : "", stats.utilization_entropy[l]);
        *log << line;
      }
      *log << " collisions " << stats.collisions << "\n";
    }

    if (full_recon < best_recon - 1e-12) {
      best_recon = full_recon;
      report.best_epoch = epoch;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
    }
    last_good = m.params;
    if (epochs_since_improve >= cfg.patience) break;
  }
  report.best_recon = best_recon;
  return report;
}

std::vector<std::vector<int>> infer_indices(const Model& m, const num::Tensor& features) {
  const QuantizationResult q = quantize(encode(m, features), codebooks_of(m));
  std::vector<std::vector<int>> tuples(features.rows());
  for (int i = 0; i < features.rows(); ++i)
    for (size_t l = 0; l < q.indices.size(); ++l) tuples[i].push_back(q.indices[l][i]);
  return tuples;
}

void save_model(const Model& m, std::ostream& out) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "sidkit-rqvae v1\n";
  out << "input_dim " << m.input_dim << "\n";
  out << "layers " << m.config.num_layers << " codebook " << m.config.codebook_size << " dim "
      << m.config.code_dim << "\n";
  out << "hidden";
  for (int h : m.config.encoder_hidden) out << " " << h;
  out << "\n";
  out << "beta " << m.config.commitment_beta << " mu " << m.config.quant_weight << " lambda "
      << m.config.diversity_weight << " lr " << m.config.learning_rate << "\n";
  out << "batch " << m.config.batch_size << " epochs " << m.config.epochs << " patience "
      << m.config.patience << " kmeans_iters " << m.config.kmeans_iters << " seed "
      << m.config.seed << "\n";
  out << "compactness " << m.config.compactness_mode << "\n";
  m.params.save(out);
}

Model load_model(std::istream& in) {
  const auto fail = [](const std::string& why) {
    throw std::runtime_error("load_model: " + why);
  };
  std::string line, word;
  if (!std::getline(in, line) || line != "sidkit-rqvae v1") fail("bad header");

  Model m;
  if (!std::getline(in, line)) fail("truncated");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> m.input_dim) || word != "input_dim") fail("bad input_dim line");
  }
  if (!std::getline(in, line)) fail("truncated");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> m.config.num_layers >> word >> m.config.codebook_size >> word >>
          m.config.code_dim)) {
      fail("bad layers line");
    }
  }
  if (!std::getline(in, line)) fail("truncated");
  {
    std::istringstream ss(line);
    if (!(ss >> word) || word != "hidden") fail("bad hidden line");
    m.config.encoder_hidden.clear();
    int h = 0;
    while (ss >> h) m.config.encoder_hidden.push_back(h);
  }
  if (!std::getline(in, line)) fail("truncated");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> m.config.commitment_beta >> word >> m.config.quant_weight >> word >>
          m.config.diversity_weight >> word >> m.config.learning_rate)) {
      fail("bad weights line");
    }
  }
  if (!std::getline(in, line)) fail("truncated");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> m.config.batch_size >> word >> m.config.epochs >> word >>
          m.config.patience >> word >> m.config.kmeans_iters >> word >> m.config.seed)) {
      fail("bad schedule line");
    }
  }
  if (!std::getline(in, line)) fail("truncated");
  {
    std::istringstream ss(line);
    if (!(ss >> word >> m.config.compactness_mode) || word != "compactness") {
      fail("bad compactness line");
    }
  }
  m.config.validate();
  m.params = num::ParamStore::load(in);
  return m;
}

}  // namespace sidkit::rqvae
