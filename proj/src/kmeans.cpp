#include "albench/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace albench {

namespace {

Matrix plus_plus_seeds(const Matrix& points, std::size_t k, Stream& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining mass is zero: duplicate points. Any choice is equivalent.
      pick = rng.below(n);
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
  }
  return centroids;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  const std::size_t d = points.cols();
  KMeansResult r{std::move(centroids), std::vector<std::size_t>(n, k), 0.0};
  std::vector<double> dist(n, 0.0);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double dd = squared_distance(points.row(i), r.centroids.row(c));
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      dist[i] = best_d;
      if (r.assignment[i] != best) {
        r.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = points.row(i);
      auto s = sums.row(r.assignment[i]);
      for (std::size_t j = 0; j < d; ++j) s[j] += row[j];
      ++counts[r.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::size_t far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(points.row(far).begin(), points.row(far).end(), r.centroids.row(c).begin());
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < d; ++j) r.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) r.inertia += squared_distance(points.row(i), r.centroids.row(r.assignment[i]));
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, Stream& rng, std::size_t restarts, std::size_t max_iterations) {
  if (k == 0 || k > points.rows()) throw std::invalid_argument("kmeans: k must lie in [1, n_points]");
  if (restarts == 0) throw std::invalid_argument("kmeans: restarts must be >= 1");
  KMeansResult best;
  bool have = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    KMeansResult candidate = lloyd(points, plus_plus_seeds(points, k, rng), max_iterations);
    if (!have || candidate.inertia < best.inertia) {
      best = std::move(candidate);
      have = true;
    }
  }
  return best;
}

}  // namespace albench
