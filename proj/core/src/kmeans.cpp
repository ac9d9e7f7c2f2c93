#include "bort/kmeans.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "bort/rng.hpp"

namespace bort {

namespace {

double dist_sq(const double* a, const double* b, int64_t d) {
  double acc = 0.0;
  for (int64_t i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    acc += t * t;
  }
  return acc;
}

}  // namespace

KMeansResult kmeans(const Tensor64& points, int k, uint64_t seed, int max_iter) {
  if (points.ndim() != 2) throw ShapeError("kmeans expects [n,d] points");
  const int64_t n = points.dim(0), d = points.dim(1);
  if (k < 1 || k > n) throw ConfigError("kmeans: need 1 <= k <= n");

  auto rng = make_rng(mix_seed(seed, 0x6b6d));
  KMeansResult res;
  res.centroids = Tensor64({k, d});

  // k-means++ seeding; identical points degenerate to copies of one point.
  std::vector<double> min_d(static_cast<size_t>(n), 0.0);
  int64_t first = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(n)));
  std::memcpy(res.centroids.data(), points.data() + first * d,
              static_cast<size_t>(d) * sizeof(double));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (int cc = 0; cc < c; ++cc)
        best = std::min(best, dist_sq(points.data() + i * d, res.centroids.data() + cc * d, d));
      min_d[static_cast<size_t>(i)] = best;
      total += best;
    }
    int64_t chosen;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (int64_t i = 0; i < n; ++i) {
        acc += min_d[static_cast<size_t>(i)];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<int64_t>(uniform_index(rng, static_cast<uint64_t>(n)));
    }
    std::memcpy(res.centroids.data() + c * d, points.data() + chosen * d,
                static_cast<size_t>(d) * sizeof(double));
  }

  res.assignments.assign(static_cast<size_t>(n), 0);
  std::vector<int64_t> counts(static_cast<size_t>(k), 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    bool changed = false;
    for (int64_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = dist_sq(points.data() + i * d, res.centroids.data(), d);
      for (int c = 1; c < k; ++c) {
        const double dd = dist_sq(points.data() + i * d, res.centroids.data() + c * d, d);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (res.assignments[static_cast<size_t>(i)] != best) {
        res.assignments[static_cast<size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Tensor64 sums({k, d});
    std::fill(counts.begin(), counts.end(), 0);
    for (int64_t i = 0; i < n; ++i) {
      const int c = res.assignments[static_cast<size_t>(i)];
      counts[static_cast<size_t>(c)] += 1;
      for (int64_t j = 0; j < d; ++j) sums.at2(c, j) += points.at2(i, j);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) {
        for (int64_t j = 0; j < d; ++j)
          res.centroids.at2(c, j) = sums.at2(c, j) / static_cast<double>(counts[static_cast<size_t>(c)]);
      } else {
        // Reseed at the point farthest from its own centroid.
        int64_t far = 0;
        double fd = -1.0;
        for (int64_t i = 0; i < n; ++i) {
          const int ci = res.assignments[static_cast<size_t>(i)];
          const double dd = dist_sq(points.data() + i * d, res.centroids.data() + ci * d, d);
          if (dd > fd) {
            fd = dd;
            far = i;
          }
        }
        std::memcpy(res.centroids.data() + c * d, points.data() + far * d,
                    static_cast<size_t>(d) * sizeof(double));
      }
    }
  }

  res.inertia = 0.0;
  for (int64_t i = 0; i < n; ++i)
    res.inertia += dist_sq(points.data() + i * d,
                           res.centroids.data() + res.assignments[static_cast<size_t>(i)] * d, d);
  return res;
}

}  // namespace bort
