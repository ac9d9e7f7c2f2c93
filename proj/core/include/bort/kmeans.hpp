#pragma once

#include <cstdint>
#include <vector>

#include "bort/tensor.hpp"

namespace bort {

struct KMeansResult {
  std::vector<int> assignments;  // per point, ties to the lowest centroid index
  Tensor64 centroids;            // [k, d]
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, 64-bit, deterministic per seed.
/// Empty clusters are reseeded at the point farthest from its centroid.
KMeansResult kmeans(const Tensor64& points, int k, uint64_t seed, int max_iter = 100);

}  // namespace bort
