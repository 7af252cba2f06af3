#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <cstdint>

namespace hdrexp {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from a seed and a stream index.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^ (stream * 0xD1B54A32D192ED03ULL + 1));
}

/// Counter-based generator: draw n of stream `key` is mix64(key + n * golden), the
/// SplitMix64 sequence addressed by position. Normals use the inverse normal CDF,
/// so each draw consumes exactly one counter value and output is platform independent
/// up to the accuracy of the inverse-erfc evaluation.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + counter * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(std::uint64_t counter) const {
    using namespace boost::math::policies;
    static constexpr auto policy = make_policy(promote_double<false>());
    return -1.4142135623730951 * boost::math::erfc_inv(2.0 * uniform(counter), policy);
  }

 private:
  std::uint64_t key_;
};

}  // namespace hdrexp
