#include "sidkit/kmeans.hpp"

#include <limits>
#include <stdexcept>

namespace sidkit::num {

namespace {

double row_sq_dist(const Tensor& a, int i, const Tensor& b, int j) {
  double d = 0.0;
  for (int c = 0; c < a.cols(); ++c) {
    const double diff = a.at(i, c) - b.at(j, c);
    d += diff * diff;
  }
  return d;
}

}  // namespace

KmeansResult fit_kmeans(const Tensor& points, int k, int iters, Rng& rng) {
  if (k < 1) throw std::runtime_error("fit_kmeans: k must be positive");
  KmeansResult res;

  Tensor data = points;
  if (data.rows() < k) {
    Tensor padded(k, data.cols());
    for (int i = 0; i < k; ++i) {
      const int src = static_cast<int>(rng.next_below(static_cast<uint64_t>(data.rows())));
      for (int c = 0; c < data.cols(); ++c) padded.at(i, c) = data.at(src, c);
    }
    data = std::move(padded);
    res.sampled_with_replacement = true;
  }
  const int n = data.rows();
  const int d = data.cols();

  res.degenerate = true;
  for (int i = 1; i < n && res.degenerate; ++i)
    for (int c = 0; c < d; ++c)
      if (data.at(i, c) != data.at(0, c)) {
        res.degenerate = false;
        break;
      }

  // k-means++ seeding.
  Tensor centers(k, d);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
  for (int c = 0; c < d; ++c) centers.at(0, c) = data.at(first, c);
  for (int ci = 1; ci < k; ++ci) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dist = row_sq_dist(data, i, centers, ci - 1);
      if (dist < min_dist[i]) min_dist[i] = dist;
      total += min_dist[i];
    }
    int pick;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.next_below(static_cast<uint64_t>(n)));
    } else {
      double target = rng.next_double() * total;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        target -= min_dist[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    for (int c = 0; c < d; ++c) centers.at(ci, c) = data.at(pick, c);
  }

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < iters; ++iter) {
    // Assignment step; ties go to the smallest index.
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = row_sq_dist(data, i, centers, 0);
      for (int ci = 1; ci < k; ++ci) {
        const double dist = row_sq_dist(data, i, centers, ci);
        if (dist < best_d) {
          best_d = dist;
          best = ci;
        }
      }
      assign[i] = best;
    }
    // Update step.
    Tensor sums(k, d);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (int c = 0; c < d; ++c) sums.at(assign[i], c) += data.at(i, c);
    }
    for (int ci = 0; ci < k; ++ci) {
      if (counts[ci] == 0) {
        // Re-seed from the point farthest from its assigned center.
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double dist = row_sq_dist(data, i, centers, assign[i]);
          if (dist > far_d) {
            far_d = dist;
            far = i;
          }
        }
        for (int c = 0; c < d; ++c) centers.at(ci, c) = data.at(far, c);
        assign[far] = ci;
        continue;
      }
      for (int c = 0; c < d; ++c) centers.at(ci, c) = sums.at(ci, c) / counts[ci];
    }
  }

  // Final assignment against the settled centers.
  std::vector<int> final_assign(points.rows(), 0);
  for (int i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = row_sq_dist(points, i, centers, 0);
    for (int ci = 1; ci < k; ++ci) {
      const double dist = row_sq_dist(points, i, centers, ci);
      if (dist < best_d) {
        best_d = dist;
        best = ci;
      }
    }
    final_assign[i] = best;
  }

  res.centers = std::move(centers);
  res.assignments = std::move(final_assign);
  return res;
}

}  // namespace sidkit::num
