#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace waitgame {

using Gwei = std::uint64_t;
using ValidatorIndex = std::uint32_t;

inline constexpr double kSlotSeconds = 12.0;
inline constexpr std::int64_t kSlotMillis = 12000;
inline constexpr double kAttestationDeadlineSeconds = 4.0;
inline constexpr Gwei kGweiPerEth = 1'000'000'000ULL;
inline constexpr Gwei kUniformEffectiveBalanceGwei = 32 * kGweiPerEth;

/// splitmix64 finalizer. Stable across platforms; used for every seed
/// derivation in the project so sweeps can be re-run bit for bit.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a list of integers into one seed: h = splitmix64(h ^ part) per part.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (auto p : parts) h = splitmix64(h ^ p);
  return h;
}

/// 64-bit Mersenne Twister with explicitly defined real/integer draws, so
/// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open_closed() { return 1.0 - uniform01(); }

  /// Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % bound;
  }

  double normal() {
    // Box-Muller on our own uniforms.
    const double u1 = uniform_open_closed();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

/// Median of a sample (mean of the two middle values for even sizes).
inline std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace waitgame
