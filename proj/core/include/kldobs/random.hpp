#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "kldobs/numkit.hpp"

namespace kldobs {

/// Seeded source of standard normal draws. The uniform-to-normal map is
/// implemented here (Marsaglia polar method on 53-bit uniforms) rather than
/// via std::normal_distribution, whose output is implementation-defined, so
/// a seed reproduces the same sequence on every platform.
///
/// A stream must be used by one thread at a time; parallel workers derive
/// their own streams with derive_seed().
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double standard_normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for sub-stream `index` of `base`: mix64(base ^ mix64(index)).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

namespace numkit {

/// n independent N(0, 1) draws; empty for n == 0.
Vector sample_standard_normal(RandomStream& stream, Eigen::Index n);

}  // namespace numkit
}  // namespace kldobs
