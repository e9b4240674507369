#include "sidkit/optimizer.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sidkit::num {

Tensor& ParamStore::create(const std::string& name, Tensor init) {
  if (entries_.count(name)) throw std::runtime_error("ParamStore: duplicate parameter " + name);
  Entry e;
  e.grad = Tensor::zeros(init.rows(), init.cols());
  e.m = Tensor::zeros(init.rows(), init.cols());
  e.v = Tensor::zeros(init.rows(), init.cols());
  e.value = std::move(init);
  auto [it, ok] = entries_.emplace(name, std::move(e));
  (void)ok;
  return it->second.value;
}

bool ParamStore::contains(const std::string& name) const { return entries_.count(name) > 0; }

Tensor& ParamStore::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("ParamStore: unknown parameter " + name);
  return it->second.value;
}

const Tensor& ParamStore::value(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("ParamStore: unknown parameter " + name);
  return it->second.value;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::runtime_error("ParamStore: unknown parameter " + name);
  return it->second.grad;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

void ParamStore::zero_grads() {
  for (auto& [k, e] : entries_) {
    for (auto& g : e.grad.data()) g = 0.0;
  }
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (auto& [k, e] : entries_) {
    for (size_t i = 0; i < e.value.size(); ++i) {
      const double g = e.grad[i];
      e.m[i] = beta1 * e.m[i] + (1.0 - beta1) * g;
      e.v[i] = beta2 * e.v[i] + (1.0 - beta2) * g * g;
      const double mhat = e.m[i] / bc1;
      const double vhat = e.v[i] / bc2;
      e.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    check_finite(e.value, "adam_step(" + k + ")");
  }
}

void ParamStore::save(std::ostream& out) const {
  out << "sidkit-params v1\n";
  out << entries_.size() << " " << step_ << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& [name, e] : entries_) {
    out << name << " " << e.value.rows() << " " << e.value.cols() << "\n";
    const auto dump = [&out](const Tensor& t) {
      for (size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << t[i];
      out << "\n";
    };
    dump(e.value);
    dump(e.m);
    dump(e.v);
  }
}

ParamStore ParamStore::load(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "sidkit-params" || version != "v1") {
    throw std::runtime_error("ParamStore: bad checkpoint header");
  }
  size_t count = 0;
  int64_t step = 0;
  in >> count >> step;
  ParamStore store;
  store.step_ = step;
  for (size_t i = 0; i < count; ++i) {
    std::string name;
    int rows = 0, cols = 0;
    in >> name >> rows >> cols;
    if (!in || rows <= 0 || cols <= 0) throw std::runtime_error("ParamStore: truncated checkpoint");
    Entry e;
    e.value = Tensor(rows, cols);
    e.grad = Tensor(rows, cols);
    e.m = Tensor(rows, cols);
    e.v = Tensor(rows, cols);
    const auto slurp = [&in](Tensor& t) {
      for (size_t j = 0; j < t.size(); ++j) in >> t[j];
    };
    slurp(e.value);
    slurp(e.m);
    slurp(e.v);
    if (!in) throw std::runtime_error("ParamStore: truncated checkpoint");
    store.entries_.emplace(name, std::move(e));
  }
  return store;
}

}  // namespace sidkit::num
