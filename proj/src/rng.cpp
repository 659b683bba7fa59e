#include "albench/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace albench {

namespace {
constexpr std::uint64_t kPcgMultiplier = 6364136223846793005ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Stream::Stream(std::uint64_t seed) : seed_(seed), state_(0), inc_((splitmix64(seed ^ 0xDA3E39CB94B95BDBULL) << 1) | 1U) {
  // Standard PCG seeding sequence.
  next_u32();
  state_ += splitmix64(seed);
  next_u32();
}

std::uint32_t Stream::next_u32() {
  std::uint64_t old = state_;
  state_ = old * kPcgMultiplier + inc_;
  auto xorshifted = static_cast<std::uint32_t>(((old >> 18U) ^ old) >> 27U);
  auto rot = static_cast<std::uint32_t>(old >> 59U);
  return (xorshifted >> rot) | (xorshifted << ((32U - rot) & 31U));
}

std::uint64_t Stream::next_u64() {
  std::uint64_t hi = next_u32();
  std::uint64_t lo = next_u32();
  return (hi << 32U) | lo;
}

double Stream::uniform() {
  return static_cast<double>(next_u64() >> 11U) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Stream::normal() {
  double u1 = uniform();
  double u2 = uniform();
  // 1 - u1 lies in (0, 1], keeping the log finite.
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Stream::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Stream::below: n must be positive");
  auto bound = static_cast<std::uint64_t>(n);
  // Rejection sampling on the top of the 64-bit range.
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return static_cast<std::size_t>(r % bound);
  }
}

bool Stream::bernoulli(double p) { return uniform() < p; }

std::vector<std::size_t> Stream::sample_without_replacement(std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k exceeds n");
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + below(n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

Stream Stream::derive(std::string_view label, std::uint64_t index) const {
  std::uint64_t h = splitmix64(seed_ ^ splitmix64(fnv1a64(label)));
  h = splitmix64(h ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
  return Stream(h);
}

Stream Stream::split(std::string_view label) {
  std::uint64_t draw = next_u64();
  return Stream(splitmix64(draw ^ splitmix64(fnv1a64(label))));
}

RngBundle make_bundle(std::uint64_t seed_omega, std::uint64_t seed_data, std::uint64_t seed_model) {
  // Each stream is keyed by its own seed and a stream label, so equal numeric
  // seeds on two streams still give unrelated sequences.
  return RngBundle{seed_omega,
                   seed_data,
                   seed_model,
                   Stream(seed_omega).derive("omega"),
                   Stream(seed_data).derive("data"),
                   Stream(seed_model).derive("model")};
}

RngBundle restart_bundle(const RngBundle& base, std::uint64_t restart_index) {
  return make_bundle(base.seed_omega, base.seed_data + restart_index, base.seed_model + restart_index);
}

}  // namespace albench
