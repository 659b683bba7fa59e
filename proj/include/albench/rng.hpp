#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace albench {

/// Portable pseudo-random stream: PCG-XSH-RR 64/32 with a seed-dependent
/// increment. All sampling routines below are implemented here (no <random>
/// distributions), so sequences are identical on every platform.
class Stream {
 public:
  explicit Stream(std::uint64_t seed = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller. Consumes two uniforms per call.
  double normal();
  /// Unbiased integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  bool bernoulli(double p);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct draws from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  /// Child stream keyed by (seed, label, index). Does not touch this stream's
  /// state: the same label always yields the same child.
  [[nodiscard]] Stream derive(std::string_view label, std::uint64_t index = 0) const;

  /// Child stream keyed by the next draw of this stream and a label. Advances
  /// this stream by one 64-bit draw.
  [[nodiscard]] Stream split(std::string_view label);

  std::uint64_t seed() const { return seed_; }

  friend bool operator==(const Stream&, const Stream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// Three independent streams: acquisition (omega), data handling (split and
/// minibatch order) and model (initialization and dropout masks).
struct RngBundle {
  std::uint64_t seed_omega = 0;
  std::uint64_t seed_data = 0;
  std::uint64_t seed_model = 0;
  Stream omega;
  Stream data;
  Stream model;

  friend bool operator==(const RngBundle&, const RngBundle&) = default;
};

RngBundle make_bundle(std::uint64_t seed_omega, std::uint64_t seed_data, std::uint64_t seed_model);

/// Restart r keeps the algorithm seed and shifts the data and model seeds by r.
RngBundle restart_bundle(const RngBundle& base, std::uint64_t restart_index);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace albench
