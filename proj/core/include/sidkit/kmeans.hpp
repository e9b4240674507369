#pragma once

#include <vector>

#include "sidkit/rng.hpp"
#include "sidkit/tensor.hpp"

namespace sidkit::num {

struct KmeansResult {
  Tensor centers;                // k x d
  std::vector<int> assignments;  // one per input row
  bool degenerate = false;       // all inputs identical
  bool sampled_with_replacement = false;
};

// Lloyd iterations with k-means++ seeding. Fewer rows than k: rows are
// sampled with replacement and the result flagged. Empty clusters are
// re-seeded from the point farthest from its assigned center.
KmeansResult fit_kmeans(const Tensor& points, int k, int iters, Rng& rng);

}  // namespace sidkit::num
