#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sidkit/rng.hpp"

namespace sidkit::num {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 tensors;
// scalars are 1x1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols);

  static Tensor zeros(int rows, int cols);
  static Tensor full(int rows, int cols, double value);
  static Tensor scalar(double value);
  static Tensor randn(int rows, int cols, Rng& rng, double stddev = 1.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  std::string shape_str() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Throws std::runtime_error naming `op` if any element is NaN/Inf.
void check_finite(const Tensor& t, const std::string& op);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// out[i][j] = squared Euclidean distance between row i of x and row j of c.
Tensor sq_dist_rows(const Tensor& x, const Tensor& c);

// Mean of squared elementwise differences over all elements.
double mse_value(const Tensor& a, const Tensor& b);

double sum_squares(const Tensor& a);

// Index of the minimum value in each row; ties resolve to the smallest index.
std::vector<int> argmin_rows(const Tensor& dists);

Tensor gather_rows(const Tensor& m, const std::vector<int>& idx);

}  // namespace sidkit::num
