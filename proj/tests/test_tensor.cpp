#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "sidkit/rng.hpp"
#include "sidkit/tensor.hpp"

using namespace sidkit::num;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double sparsity = 0.0) {
  Tensor t(r, c);
  for (auto& v : t.data()) {
    v = rng.next_double() < sparsity ? 0.0 : rng.next_gaussian();
  }
  return t;
}

}  // namespace

TEST_CASE("tensor construction and indexing are row major") {
  Tensor t = Tensor::zeros(2, 3);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
  t.at(1, 2) = 5.0;
  CHECK(t[5] == 5.0);
  CHECK(Tensor::full(2, 2, 3.5).at(1, 1) == 3.5);
  CHECK(Tensor::scalar(2.0).size() == 1);
}

TEST_CASE("elementwise ops match loops") {
  Rng rng(1);
  const Tensor a = random_tensor(4, 5, rng);
  const Tensor b = random_tensor(4, 5, rng);
  const Tensor s = add(a, b);
  const Tensor d = sub(a, b);
  const Tensor sc = scale(a, -2.5);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(s[i] == a[i] + b[i]);
    CHECK(d[i] == a[i] - b[i]);
    CHECK(sc[i] == -2.5 * a[i]);
  }
  CHECK_THROWS(add(a, Tensor::zeros(4, 4)));
}

TEST_CASE("matmul matches the naive triple loop, including sparse inputs") {
  Rng rng(2);
  for (double sparsity : {0.0, 0.7, 1.0}) {
    const Tensor a = random_tensor(5, 7, rng, sparsity);
    const Tensor b = random_tensor(7, 4, rng);
    const Tensor c = matmul(a, b);
    REQUIRE(c.rows() == 5);
    REQUIRE(c.cols() == 4);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 4; ++j) {
        double want = 0.0;
        for (int k = 0; k < 7; ++k) want += a.at(i, k) * b.at(k, j);
        CHECK(c.at(i, j) == doctest::Approx(want).epsilon(1e-12));
      }
    }
  }
  CHECK_THROWS(matmul(Tensor::zeros(2, 3), Tensor::zeros(4, 2)));
}

TEST_CASE("transpose") {
  Rng rng(3);
  const Tensor a = random_tensor(3, 5, rng);
  const Tensor t = transpose(a);
  REQUIRE(t.rows() == 5);
  REQUIRE(t.cols() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 5; ++j) CHECK(t.at(j, i) == a.at(i, j));
}

TEST_CASE("sq_dist_rows matches loops") {
  Rng rng(4);
  const Tensor x = random_tensor(6, 3, rng);
  const Tensor c = random_tensor(4, 3, rng);
  const Tensor d = sq_dist_rows(x, c);
  REQUIRE(d.rows() == 6);
  REQUIRE(d.cols() == 4);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 4; ++j) {
      double want = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double diff = x.at(i, k) - c.at(j, k);
        want += diff * diff;
      }
      CHECK(d.at(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("argmin_rows breaks ties toward the smallest index") {
  Tensor d(2, 3);
  d.at(0, 0) = 5.0;
  d.at(0, 1) = 1.0;
  d.at(0, 2) = 1.0;  // tie with column 1
  d.at(1, 0) = 2.0;
  d.at(1, 1) = 2.0;  // tie with column 0
  d.at(1, 2) = 9.0;
  CHECK(argmin_rows(d) == std::vector<int>{1, 0});
}

TEST_CASE("gather_rows selects and validates") {
  Rng rng(5);
  const Tensor m = random_tensor(4, 3, rng);
  const Tensor g = gather_rows(m, {2, 2, 0});
  REQUIRE(g.rows() == 3);
  for (int j = 0; j < 3; ++j) {
    CHECK(g.at(0, j) == m.at(2, j));
    CHECK(g.at(1, j) == m.at(2, j));
    CHECK(g.at(2, j) == m.at(0, j));
  }
  CHECK_THROWS(gather_rows(m, {4}));
  CHECK_THROWS(gather_rows(m, {-1}));
}

TEST_CASE("reductions match loops") {
  Rng rng(6);
  const Tensor a = random_tensor(3, 4, rng);
  const Tensor b = random_tensor(3, 4, rng);
  double ss = 0.0, se = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ss += a[i] * a[i];
    const double d = a[i] - b[i];
    se += d * d;
  }
  CHECK(sum_squares(a) == doctest::Approx(ss).epsilon(1e-14));
  CHECK(mse_value(a, b) == doctest::Approx(se / a.size()).epsilon(1e-14));
}

TEST_CASE("check_finite names the offending op") {
  Tensor t = Tensor::zeros(1, 2);
  CHECK_NOTHROW(check_finite(t, "fine"));
  t[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(check_finite(t, "badop"),
                       doctest::Contains("non-finite value produced by op 'badop'"),
                       std::runtime_error);
  t[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(check_finite(t, "badop"), std::runtime_error);
}
