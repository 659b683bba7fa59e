#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "albench/rng.hpp"
#include "doctest.h"

using namespace albench;

namespace {

std::vector<std::uint64_t> draw(Stream s, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) out.push_back(s.next_u64());
  return out;
}

}  // namespace

TEST_CASE("equal seed triples give equal sequences on every stream") {
  RngBundle a = make_bundle(1, 2, 3);
  RngBundle b = make_bundle(1, 2, 3);
  CHECK(draw(a.omega, 50) == draw(b.omega, 50));
  CHECK(draw(a.data, 50) == draw(b.data, 50));
  CHECK(draw(a.model, 50) == draw(b.model, 50));
}

TEST_CASE("changing the algorithm seed leaves the data stream alone") {
  RngBundle a = make_bundle(1, 2, 3);
  RngBundle b = make_bundle(9, 2, 3);
  CHECK(draw(a.data, 100) == draw(b.data, 100));
  CHECK(draw(a.model, 100) == draw(b.model, 100));
  CHECK(draw(a.omega, 10) != draw(b.omega, 10));
}

TEST_CASE("draws on one stream do not move the others") {
  RngBundle fresh = make_bundle(1, 2, 3);
  RngBundle used = make_bundle(1, 2, 3);
  for (int i = 0; i < 100; ++i) used.model.next_u64();
  CHECK(draw(used.data, 20) == draw(fresh.data, 20));

  // Interleaved consumption matches per-stream consumption.
  RngBundle inter = make_bundle(4, 5, 6);
  std::vector<std::uint64_t> o, d, m;
  for (int i = 0; i < 30; ++i) {
    o.push_back(inter.omega.next_u64());
    d.push_back(inter.data.next_u64());
    m.push_back(inter.model.next_u64());
  }
  RngBundle solo = make_bundle(4, 5, 6);
  CHECK(o == draw(solo.omega, 30));
  CHECK(d == draw(solo.data, 30));
  CHECK(m == draw(solo.model, 30));
}

TEST_CASE("the three streams of a bundle differ even with equal seeds") {
  RngBundle b = make_bundle(7, 7, 7);
  CHECK(draw(b.omega, 5) != draw(b.data, 5));
  CHECK(draw(b.data, 5) != draw(b.model, 5));
}

TEST_CASE("restart bundles shift the data and model seeds") {
  RngBundle base = make_bundle(5, 10, 20);
  RngBundle r0 = restart_bundle(base, 0);
  CHECK(r0 == base);
  RngBundle r3 = restart_bundle(base, 3);
  CHECK(r3.seed_omega == 5);
  CHECK(r3.seed_data == 13);
  CHECK(r3.seed_model == 23);
  CHECK(r3 == make_bundle(5, 13, 23));
  RngBundle r49 = restart_bundle(base, 49);
  CHECK(r49.seed_omega == 5);
  CHECK(r49.seed_data == 59);
  CHECK(r49.seed_model == 69);
  CHECK(draw(r49.omega, 10) == draw(base.omega, 10));
}

TEST_CASE("PCG reference output") {
  // Independent re-implementation of the documented construction: increment
  // from splitmix64 of the salted seed, the standard PCG seeding sequence,
  // XSH-RR output.
  const std::uint64_t seed = 42;
  const std::uint64_t inc = (splitmix64(seed ^ 0xDA3E39CB94B95BDBULL) << 1) | 1u;
  std::uint64_t state = 0;
  auto step = [&]() {
    const std::uint64_t old = state;
    state = old * 6364136223846793005ULL + inc;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32 - rot) & 31));
  };
  step();
  state += splitmix64(seed);
  step();
  Stream s(seed);
  std::vector<std::uint32_t> expected, got;
  for (int i = 0; i < 8; ++i) {
    expected.push_back(step());
    got.push_back(s.next_u32());
  }
  CHECK(got == expected);
}

TEST_CASE("uniform lies in [0, 1) and has the right mean") {
  Stream s(11);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normal draws have zero mean and unit variance") {
  Stream s(12);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double z = s.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.02);
}

TEST_CASE("below is unbiased") {
  Stream s(13);
  std::array<int, 6> counts{};
  const int n = 120000;
  for (int i = 0; i < n; ++i) counts[s.below(6)]++;
  for (int c : counts) CHECK(std::abs(c / double(n) - 1.0 / 6.0) < 0.01);
  CHECK_THROWS(s.below(0));
}

TEST_CASE("sample_without_replacement returns distinct indices") {
  Stream s(14);
  auto v = s.sample_without_replacement(10, 10);
  std::vector<std::size_t> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
  CHECK(s.sample_without_replacement(5, 0).empty());
  CHECK_THROWS(s.sample_without_replacement(3, 4));

  // Every 2-subset of 4 equally likely.
  std::map<std::pair<std::size_t, std::size_t>, int> freq;
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    auto p = s.sample_without_replacement(4, 2);
    freq[{std::min(p[0], p[1]), std::max(p[0], p[1])}]++;
  }
  CHECK(freq.size() == 6);
  for (const auto& [k, c] : freq) CHECK(std::abs(c / double(n) - 1.0 / 6.0) < 0.01);
}

TEST_CASE("derive is stateless and label sensitive") {
  Stream s(99);
  Stream before = s;
  Stream a = s.derive("minibatch");
  CHECK(s == before);
  CHECK(draw(a, 5) == draw(s.derive("minibatch"), 5));
  CHECK(draw(a, 5) != draw(s.derive("validation"), 5));
  CHECK(draw(s.derive("x", 0), 5) != draw(s.derive("x", 1), 5));
  CHECK(draw(Stream(98).derive("minibatch"), 5) != draw(a, 5));
}

TEST_CASE("split advances the parent by one draw") {
  Stream s(3);
  Stream ref(3);
  Stream child = s.split("masks");
  ref.next_u64();
  CHECK(s == ref);
  Stream s2(3);
  CHECK(draw(s2.split("masks"), 4) == draw(child, 4));
}

TEST_CASE("shuffle is a permutation") {
  Stream s(5);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  s.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("fnv1a64 known vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
