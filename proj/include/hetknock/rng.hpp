#pragma once

#include <cstdint>
#include <random>

#include "hetknock/errors.hpp"
#include "hetknock/normal.hpp"

// Deterministic random streams. Every concurrent unit of work (simulation
// rep, knockoff coordinate, forest tree) owns a substream keyed by
// (root seed, kind, index) so results do not depend on thread scheduling.
// All real-valued draws go through the inverse CDF on 53-bit uniforms; no
// distribution object from <random> is used, keeping the byte stream
// identical across standard library implementations.

namespace hetknock {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Collapses (seed, key...) into a fresh seed; splitmix64 scrambles each key
// so nearby indices give unrelated streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k1, std::uint64_t k2 = 0) {
  std::uint64_t s = seed;
  std::uint64_t out = detail::splitmix64(s);
  s ^= k1 * 0x9E3779B97F4A7C15ULL;
  out ^= detail::splitmix64(s);
  s ^= k2 * 0xC2B2AE3D27D4EB4FULL;
  out ^= detail::splitmix64(s);
  return out;
}

// Stream keys; distinct constants keep unrelated draws unrelated even for
// equal indices.
namespace stream {
inline constexpr std::uint64_t kFeatures = 0x66656174;   // feature matrix
inline constexpr std::uint64_t kKnockoff = 0x6b6e6f63;   // knockoff columns
inline constexpr std::uint64_t kNoise = 0x6e6f6973;      // response noise
inline constexpr std::uint64_t kForest = 0x74726565;     // tree substreams
inline constexpr std::uint64_t kSplit = 0x73706c74;      // sample splitting
inline constexpr std::uint64_t kRep = 0x72657073;        // simulation reps
inline constexpr std::uint64_t kTest = 0x74657374;       // test internals
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t k1, std::uint64_t k2 = 0) {
    return Rng(derive_seed(seed, k1, k2));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0, 1); never returns an endpoint, so the
  // probit transform below stays finite.
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  double chi_square(int df) {
    double s = 0.0;
    for (int i = 0; i < df; ++i) {
      double z = normal();
      s += z * z;
    }
    return s;
  }

  // Unbiased integer in [0, n); rejection keeps the distribution exact.
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) fail(ErrorCode::BadArgument, "bounded(0)");
    std::uint64_t reject_below = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = gen_();
    while (x < reject_below) x = gen_();
    return x % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace hetknock
