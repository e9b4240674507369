#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sidkit/optimizer.hpp"
#include "sidkit/tensor.hpp"

namespace sidkit::num {

class Graph;

// Handle into a Graph's node list.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Eager reverse-mode tape over a fixed operator set. Each op computes its
// forward value immediately and records a backward rule; backward() sweeps
// the tape in reverse creation order. The tape is acyclic and topologically
// ordered by construction.
class Graph {
 public:
  explicit Graph(ParamStore* store = nullptr) : store_(store) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf with no gradient.
  Var input(Tensor value);
  // 1x1 leaf with no gradient.
  Var constant(double value);
  // Leaf bound to a ParamStore entry; gradients flow back into the store.
  Var param(const std::string& name);

  // y = x * w + b, with x:[n,i], w:[i,o], b:[1,o] broadcast over rows.
  Var affine(Var x, Var w, Var b);
  Var relu(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var x, double c);
  // out[i] = m[idx[i]]; backward scatter-adds into m's rows.
  Var gather_rows(Var m, const std::vector<int>& idx);
  // Forward identity; contributes zero gradient upstream.
  Var stop_gradient(Var x);
  // Forward z_q, backward identity into z_e: z_e + sg(z_q - z_e).
  Var straight_through(Var z_e, Var z_q);
  // Scalar: mean of squared elementwise differences.
  Var mse(Var a, Var b);
  // Scalar: sum of squares of all elements.
  Var sum_squares(Var x);
  // Scalar: (1/(k(k-1))) * sum_{i != j} ||row_i - row_j||^2; zero when k < 2.
  Var mean_pairwise_sq_dist(Var x);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  double scalar_value(Var v) const;
  const Tensor& grad(Var v) const;

  // Reverse accumulation from a scalar root. Gradients of param leaves are
  // added into the bound ParamStore's accumulators.
  void backward(Var root);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::string param_name;
    std::function<void(Graph&, int)> backprop;
  };

  int push(Tensor value, bool requires_grad, std::function<void(Graph&, int)> backprop,
           const std::string& op);
  Tensor& grad_buf(int id);
  bool wants_grad(Var v) const { return nodes_[v.id].requires_grad; }
  void require_shape(Var a, Var b, const char* op) const;

  ParamStore* store_ = nullptr;
  std::vector<Node> nodes_;
};

}  // namespace sidkit::num
