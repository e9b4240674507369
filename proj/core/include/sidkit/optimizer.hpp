#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sidkit/tensor.hpp"

namespace sidkit::num {

// Named parameter tensors with matching gradient accumulators and Adam
// moment state. Owned by exactly one trainer at a time.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Tensor init);
  bool contains(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);

  std::vector<std::string> names() const;
  void zero_grads();
  int64_t step_count() const { return step_; }

  // Bias-corrected Adam update over every parameter, in name order.
  void adam_step(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                 double eps = 1e-8);

  void save(std::ostream& out) const;
  static ParamStore load(std::istream& in);

 private:
  struct Entry {
    Tensor value;
    Tensor grad;
    Tensor m;
    Tensor v;
  };
  std::map<std::string, Entry> entries_;
  int64_t step_ = 0;
};

}  // namespace sidkit::num
