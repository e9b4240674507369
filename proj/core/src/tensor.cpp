#include "sidkit/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace sidkit::num {

Tensor::Tensor(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
  if (rows <= 0 || cols <= 0) {
    throw std::runtime_error("Tensor: nonpositive shape " + std::to_string(rows) + "x" +
                             std::to_string(cols));
  }
}

Tensor Tensor::zeros(int rows, int cols) { return Tensor(rows, cols); }

Tensor Tensor::full(int rows, int cols, double value) {
  Tensor t(rows, cols);
  for (auto& v : t.data_) v = value;
  return t;
}

Tensor Tensor::scalar(double value) {
  Tensor t(1, 1);
  t.data_[0] = value;
  return t;
}

Tensor Tensor::randn(int rows, int cols, Rng& rng, double stddev) {
  Tensor t(rows, cols);
  for (auto& v : t.data_) v = rng.next_gaussian() * stddev;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void check_finite(const Tensor& t, const std::string& op) {
  if (!t.all_finite()) {
    throw std::runtime_error("non-finite value produced by op '" + op + "'");
  }
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::runtime_error(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
  }
}
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::runtime_error("matmul: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* out_row = &out.data()[static_cast<size_t>(i) * m];
    for (int p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      if (aip == 0.0) continue;
      const double* b_row = &b.data()[static_cast<size_t>(p) * m];
      for (int j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = a;
  for (size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return out;
}

Tensor sq_dist_rows(const Tensor& x, const Tensor& c) {
  if (x.cols() != c.cols()) {
    throw std::runtime_error("sq_dist_rows: shape mismatch " + x.shape_str() + " vs " +
                             c.shape_str());
  }
  Tensor out(x.rows(), c.rows());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < c.rows(); ++j) {
      double d = 0.0;
      for (int p = 0; p < x.cols(); ++p) {
        const double diff = x.at(i, p) - c.at(j, p);
        d += diff * diff;
      }
      out.at(i, j) = d;
    }
  }
  return out;
}

double mse_value(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double sum_squares(const Tensor& a) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * a[i];
  return s;
}

std::vector<int> argmin_rows(const Tensor& dists) {
  std::vector<int> idx(dists.rows());
  for (int i = 0; i < dists.rows(); ++i) {
    int best = 0;
    double best_v = dists.at(i, 0);
    for (int j = 1; j < dists.cols(); ++j) {
      if (dists.at(i, j) < best_v) {
        best_v = dists.at(i, j);
        best = j;
      }
    }
    idx[i] = best;
  }
  return idx;
}

Tensor gather_rows(const Tensor& m, const std::vector<int>& idx) {
  if (idx.empty()) throw std::runtime_error("gather_rows: empty index list");
  Tensor out(static_cast<int>(idx.size()), m.cols());
  for (size_t i = 0; i < idx.size(); ++i) {
    const int r = idx[i];
    if (r < 0 || r >= m.rows()) throw std::runtime_error("gather_rows: index out of range");
    for (int j = 0; j < m.cols(); ++j) out.at(static_cast<int>(i), j) = m.at(r, j);
  }
  return out;
}

}  // namespace sidkit::num
