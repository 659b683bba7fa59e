#pragma once

#include <cstddef>
#include <vector>

#include "albench/matrix.hpp"
#include "albench/rng.hpp"

namespace albench {

struct KMeansResult {
  Matrix centroids;
  std::vector<std::size_t> assignment;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding. Runs `restarts` times and keeps
/// the lowest inertia (first one on ties). Empty clusters are re-seeded with
/// the point farthest from its centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, Stream& rng, std::size_t restarts = 10,
                    std::size_t max_iterations = 100);

}  // namespace albench
