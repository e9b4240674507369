#include "sidkit/autodiff.hpp"

#include <stdexcept>

namespace sidkit::num {

int Graph::push(Tensor value, bool requires_grad, std::function<void(Graph&, int)> backprop,
                const std::string& op) {
  check_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Graph::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.grad_ready) {
    n.grad = Tensor::zeros(n.value.rows(), n.value.cols());
    n.grad_ready = true;
  }
  return n.grad;
}

void Graph::require_shape(Var a, Var b, const char* op) const {
  const Tensor& ta = nodes_[a.id].value;
  const Tensor& tb = nodes_[b.id].value;
  if (!ta.same_shape(tb)) {
    throw std::runtime_error(std::string(op) + ": shape mismatch " + ta.shape_str() + " vs " +
                             tb.shape_str());
  }
}

Var Graph::input(Tensor value) { return {push(std::move(value), false, nullptr, "input")}; }

Var Graph::constant(double value) { return input(Tensor::scalar(value)); }

Var Graph::param(const std::string& name) {
  if (!store_) throw std::runtime_error("Graph::param: no ParamStore bound");
  const int id = push(store_->value(name), true, nullptr, "param(" + name + ")");
  nodes_[id].param_name = name;
  return {id};
}

Var Graph::affine(Var x, Var w, Var b) {
  const Tensor& xv = nodes_[x.id].value;
  const Tensor& wv = nodes_[w.id].value;
  const Tensor& bv = nodes_[b.id].value;
  if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw std::runtime_error("affine: shape mismatch x=" + xv.shape_str() +
                             " w=" + wv.shape_str() + " b=" + bv.shape_str());
  }
  Tensor out = matmul(xv, wv);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out.at(i, j) += bv.at(0, j);
  const bool rg = wants_grad(x) || wants_grad(w) || wants_grad(b);
  auto back = [x, w, b](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.wants_grad(x)) {
      Tensor gx = matmul(go, transpose(g.nodes_[w.id].value));
      Tensor& acc = g.grad_buf(x.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += gx[i];
    }
    if (g.wants_grad(w)) {
      Tensor gw = matmul(transpose(g.nodes_[x.id].value), go);
      Tensor& acc = g.grad_buf(w.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += gw[i];
    }
    if (g.wants_grad(b)) {
      Tensor& acc = g.grad_buf(b.id);
      for (int i = 0; i < go.rows(); ++i)
        for (int j = 0; j < go.cols(); ++j) acc.at(0, j) += go.at(i, j);
    }
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr,
               "affine")};
}

Var Graph::relu(Var x) {
  Tensor out = nodes_[x.id].value;
  for (size_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] = 0.0;
  const bool rg = wants_grad(x);
  auto back = [x](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    const Tensor& xv = g.nodes_[x.id].value;
    Tensor& acc = g.grad_buf(x.id);
    for (size_t i = 0; i < acc.size(); ++i)
      if (xv[i] > 0.0) acc[i] += go[i];
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr, "relu")};
}

Var Graph::add(Var a, Var b) {
  require_shape(a, b, "add");
  Tensor out = num::add(nodes_[a.id].value, nodes_[b.id].value);
  const bool rg = wants_grad(a) || wants_grad(b);
  auto back = [a, b](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.wants_grad(a)) {
      Tensor& acc = g.grad_buf(a.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += go[i];
    }
    if (g.wants_grad(b)) {
      Tensor& acc = g.grad_buf(b.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += go[i];
    }
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr, "add")};
}

Var Graph::sub(Var a, Var b) {
  require_shape(a, b, "sub");
  Tensor out = num::sub(nodes_[a.id].value, nodes_[b.id].value);
  const bool rg = wants_grad(a) || wants_grad(b);
  auto back = [a, b](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    if (g.wants_grad(a)) {
      Tensor& acc = g.grad_buf(a.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += go[i];
    }
    if (g.wants_grad(b)) {
      Tensor& acc = g.grad_buf(b.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] -= go[i];
    }
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr, "sub")};
}

Var Graph::scale(Var x, double c) {
  Tensor out = num::scale(nodes_[x.id].value, c);
  const bool rg = wants_grad(x);
  auto back = [x, c](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& acc = g.grad_buf(x.id);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += c * go[i];
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr, "scale")};
}

Var Graph::gather_rows(Var m, const std::vector<int>& idx) {
  Tensor out = num::gather_rows(nodes_[m.id].value, idx);
  const bool rg = wants_grad(m);
  auto back = [m, idx](Graph& g, int self) {
    const Tensor& go = g.nodes_[self].grad;
    Tensor& acc = g.grad_buf(m.id);
    for (size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < go.cols(); ++j) acc.at(idx[i], j) += go.at(static_cast<int>(i), j);
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr,
               "gather_rows")};
}

Var Graph::stop_gradient(Var x) {
  return {push(nodes_[x.id].value, false, nullptr, "stop_gradient")};
}

Var Graph::straight_through(Var z_e, Var z_q) {
  require_shape(z_e, z_q, "straight_through");
  return add(z_e, stop_gradient(sub(z_q, z_e)));
}

Var Graph::mse(Var a, Var b) {
  require_shape(a, b, "mse");
  const Tensor& av = nodes_[a.id].value;
  const Tensor& bv = nodes_[b.id].value;
  Tensor out = Tensor::scalar(mse_value(av, bv));
  const bool rg = wants_grad(a) || wants_grad(b);
  auto back = [a, b](Graph& g, int self) {
    const double go = g.nodes_[self].grad[0];
    const Tensor& av = g.nodes_[a.id].value;
    const Tensor& bv = g.nodes_[b.id].value;
    const double c = 2.0 * go / static_cast<double>(av.size());
    if (g.wants_grad(a)) {
      Tensor& acc = g.grad_buf(a.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] += c * (av[i] - bv[i]);
    }
    if (g.wants_grad(b)) {
      Tensor& acc = g.grad_buf(b.id);
      for (size_t i = 0; i < acc.size(); ++i) acc[i] -= c * (av[i] - bv[i]);
    }
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr, "mse")};
}

Var Graph::sum_squares(Var x) {
  Tensor out = Tensor::scalar(num::sum_squares(nodes_[x.id].value));
  const bool rg = wants_grad(x);
  auto back = [x](Graph& g, int self) {
    const double go = g.nodes_[self].grad[0];
    const Tensor& xv = g.nodes_[x.id].value;
    Tensor& acc = g.grad_buf(x.id);
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += 2.0 * go * xv[i];
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr,
               "sum_squares")};
}

Var Graph::mean_pairwise_sq_dist(Var x) {
  const Tensor& xv = nodes_[x.id].value;
  const int k = xv.rows();
  if (k < 2) return constant(0.0);
  // sum_{i != j} ||v_i - v_j||^2 == 2k * sum_i ||v_i||^2 - 2 ||sum_i v_i||^2
  std::vector<double> col_sum(xv.cols(), 0.0);
  double sq = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < xv.cols(); ++j) {
      col_sum[j] += xv.at(i, j);
      sq += xv.at(i, j) * xv.at(i, j);
    }
  double s = 2.0 * k * sq;
  for (double c : col_sum) s -= 2.0 * c * c;
  const double inv = 1.0 / (static_cast<double>(k) * (k - 1));
  Tensor out = Tensor::scalar(s * inv);
  const bool rg = wants_grad(x);
  auto back = [x, inv](Graph& g, int self) {
    const double go = g.nodes_[self].grad[0];
    const Tensor& xv = g.nodes_[x.id].value;
    const int k = xv.rows();
    std::vector<double> col_sum(xv.cols(), 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < xv.cols(); ++j) col_sum[j] += xv.at(i, j);
    Tensor& acc = g.grad_buf(x.id);
    // d/dv_a = 4 * inv * (k * v_a - colsum)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < xv.cols(); ++j)
        acc.at(i, j) += go * 4.0 * inv * (k * xv.at(i, j) - col_sum[j]);
  };
  return {push(std::move(out), rg, rg ? std::function<void(Graph&, int)>(back) : nullptr,
               "mean_pairwise_sq_dist")};
}

double Graph::scalar_value(Var v) const {
  const Tensor& t = nodes_[v.id].value;
  if (t.size() != 1) throw std::runtime_error("scalar_value: node is " + t.shape_str());
  return t[0];
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.grad_ready) {
    static const Tensor empty;
    if (n.value.size() == 0) return empty;
    // Nodes untouched by backward have identically-zero gradients.
    const_cast<Node&>(n).grad = Tensor::zeros(n.value.rows(), n.value.cols());
    const_cast<Node&>(n).grad_ready = true;
  }
  return n.grad;
}

void Graph::backward(Var root) {
  const Tensor& rv = nodes_[root.id].value;
  if (rv.size() != 1) {
    throw std::runtime_error("backward: root must be a scalar, got " + rv.shape_str());
  }
  grad_buf(root.id)[0] = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.grad_ready) continue;
    if (n.backprop) n.backprop(*this, id);
  }
  if (store_) {
    for (const Node& n : nodes_) {
      if (!n.param_name.empty() && n.grad_ready) {
        Tensor& acc = store_->grad(n.param_name);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += n.grad[i];
      }
    }
  }
}

}  // namespace sidkit::num
