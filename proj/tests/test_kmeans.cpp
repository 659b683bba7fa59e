#include <cmath>
#include <set>
#include <vector>

#include "albench/kmeans.hpp"
#include "doctest.h"

using namespace albench;

namespace {

Matrix blobs(Stream& rng, std::size_t per_blob, const std::vector<std::pair<double, double>>& centers, double std) {
  Matrix m(per_blob * centers.size(), 2);
  std::size_t r = 0;
  for (auto [cx, cy] : centers) {
    for (std::size_t i = 0; i < per_blob; ++i, ++r) {
      m(r, 0) = cx + std * rng.normal();
      m(r, 1) = cy + std * rng.normal();
    }
  }
  return m;
}

}  // namespace

TEST_CASE("separated blobs are recovered") {
  Stream data(1);
  Matrix pts = blobs(data, 30, {{0, 0}, {10, 0}, {0, 10}}, 0.5);
  Stream rng(2);
  KMeansResult km = kmeans(pts, 3, rng);
  for (std::size_t b = 0; b < 3; ++b) {
    std::set<std::size_t> labels;
    for (std::size_t i = 0; i < 30; ++i) labels.insert(km.assignment[b * 30 + i]);
    CHECK(labels.size() == 1);
  }
  std::set<std::size_t> all(km.assignment.begin(), km.assignment.end());
  CHECK(all.size() == 3);
}

TEST_CASE("inertia and centroids are consistent with the assignment") {
  Stream data(3);
  Matrix pts = blobs(data, 15, {{0, 0}, {3, 1}}, 1.0);
  Stream rng(4);
  KMeansResult km = kmeans(pts, 4, rng, 3);
  double inertia = 0.0;
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    double best = INFINITY;
    for (std::size_t c = 0; c < 4; ++c) best = std::min(best, squared_distance(pts.row(i), km.centroids.row(c)));
    CHECK(squared_distance(pts.row(i), km.centroids.row(km.assignment[i])) == doctest::Approx(best));
    inertia += best;
  }
  CHECK(km.inertia == doctest::Approx(inertia));
}

TEST_CASE("k = 1 gives the mean and k = n gives zero inertia") {
  Matrix pts(4, 1, std::vector<double>{1.0, 2.0, 4.0, 9.0});
  Stream rng(5);
  KMeansResult one = kmeans(pts, 1, rng);
  CHECK(one.centroids(0, 0) == doctest::Approx(4.0));
  CHECK(one.inertia == doctest::Approx(9 + 4 + 0 + 25));
  KMeansResult all = kmeans(pts, 4, rng);
  CHECK(all.inertia == doctest::Approx(0.0));
}

TEST_CASE("duplicate points do not break seeding") {
  Matrix pts(5, 2, 1.0);
  Stream rng(6);
  KMeansResult km = kmeans(pts, 3, rng);
  CHECK(km.inertia == 0.0);
}

TEST_CASE("kmeans is deterministic given the stream and rejects bad k") {
  Stream data(7);
  Matrix pts = blobs(data, 20, {{0, 0}, {2, 2}}, 1.0);
  Stream a(8), b(8);
  KMeansResult ka = kmeans(pts, 3, a);
  KMeansResult kb = kmeans(pts, 3, b);
  CHECK(ka.assignment == kb.assignment);
  CHECK(ka.centroids == kb.centroids);
  CHECK(a == b);
  CHECK_THROWS(kmeans(pts, 0, a));
  CHECK_THROWS(kmeans(pts, 41, a));
  CHECK_THROWS(kmeans(pts, 2, a, 0));
}

TEST_CASE("more restarts never increase inertia") {
  Stream data(9);
  Matrix pts = blobs(data, 10, {{0, 0}, {4, 0}, {2, 3}, {6, 5}}, 1.2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Stream a(seed), b(seed);
    double single = kmeans(pts, 4, a, 1).inertia;
    double many = kmeans(pts, 4, b, 10).inertia;
    CHECK(many <= single);
  }
}
