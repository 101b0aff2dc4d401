#pragma once

#include "midpoint/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace midpoint {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3").  Pure: the same (counter, key) always maps to the
/// same four words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Version of the key-derivation scheme.  Reports embed it so that a stored
/// seed can be replayed against the same stream layout.
inline constexpr int kRngSchemaVersion = 1;

/// Hierarchically keyed, counter-based random stream.
///
/// A stream is identified by a seed and a path of integers (run, block,
/// step, ...).  `child(i)` appends to the path; streams with different paths
/// are independent.  Draws are addressed by (particle, draw) so that any
/// partition of particles across workers produces identical numbers.  A
/// sequential cursor is also kept for the occasional scalar consumer.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream child(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t key() const noexcept { return key_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t particle, std::uint64_t draw) const noexcept;
  /// Standard normal.
  double normal(std::uint64_t particle, std::uint64_t draw) const noexcept;

  /// Fills `out` with standard normals; column j belongs to particle
  /// `first_particle + j`, row i is draw `first_draw + i`.
  void fill_normal(BatchRef out, std::uint64_t first_particle, std::uint64_t first_draw = 0) const;
  /// Fills `out(j)` with the uniform for particle `first_particle + j`.
  void fill_uniform(Eigen::Ref<Array> out, std::uint64_t first_particle, std::uint64_t draw = 0) const;

  double next_uniform() noexcept;
  double next_normal() noexcept;

 private:
  RngStream(std::uint64_t seed, std::vector<std::uint64_t> path);

  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
  std::uint64_t cursor_ = 0;
};

/// Midpoint fraction drawn uniformly from [(i-1)/R, i/R], 1 <= i <= R.
/// R = 1 gives a uniform draw on [0, 1].
double uniform_midpoint(RngStream& rng, int i, int R);

/// Addressed variant used by the batched samplers.
inline double uniform_midpoint(const RngStream& rng, std::uint64_t particle, int i, int R) {
  return (static_cast<double>(i - 1) + rng.uniform(particle, static_cast<std::uint64_t>(i))) / R;
}

}  // namespace midpoint
