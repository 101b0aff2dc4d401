#include "midpoint/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace midpoint {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// Domain tags kept in the top bits of the second counter word.
constexpr std::uint64_t kUniformDomain = 1ull << 63;
constexpr std::uint64_t kCursorDomain = 1ull << 62;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> draw_block(std::uint64_t key, std::uint64_t c0, std::uint64_t c1) noexcept {
  return philox4x32({static_cast<std::uint32_t>(c0), static_cast<std::uint32_t>(c0 >> 32),
                     static_cast<std::uint32_t>(c1), static_cast<std::uint32_t>(c1 >> 32)},
                    {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)});
}

// 53-bit open-interval uniform from two 32-bit words.
double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::uint64_t derive_key(std::uint64_t seed, const std::vector<std::uint64_t>& path) noexcept {
  std::uint64_t k = splitmix64(seed ^ (0x6D69647074ull + kRngSchemaVersion));
  for (std::uint64_t p : path) k = splitmix64(k ^ splitmix64(p + 0x5851F42D4C957F2Dull));
  return k;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed) : RngStream(seed, {}) {}

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)), key_(derive_key(seed_, path_)) {}

RngStream RngStream::child(std::uint64_t index) const {
  auto p = path_;
  p.push_back(index);
  return RngStream(seed_, std::move(p));
}

double RngStream::uniform(std::uint64_t particle, std::uint64_t draw) const noexcept {
  const auto w = draw_block(key_, particle, draw | kUniformDomain);
  return to_unit(w[0], w[1]);
}

double RngStream::normal(std::uint64_t particle, std::uint64_t draw) const noexcept {
  // Box-Muller on one Philox block; even/odd draws share the block.
  const auto w = draw_block(key_, particle, (draw >> 1) & ~(kUniformDomain | kCursorDomain));
  const double u1 = to_unit(w[0], w[1]);
  const double u2 = to_unit(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return (draw & 1u) ? r * std::sin(theta) : r * std::cos(theta);
}

void RngStream::fill_normal(BatchRef out, std::uint64_t first_particle, std::uint64_t first_draw) const {
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const std::uint64_t particle = first_particle + static_cast<std::uint64_t>(j);
    Eigen::Index i = 0;
    std::uint64_t draw = first_draw;
    if (draw & 1u) {
      if (out.rows() > 0) out(i++, j) = normal(particle, draw++);
    }
    for (; i + 1 < out.rows(); i += 2, draw += 2) {
      const auto w = draw_block(key_, particle, draw >> 1);
      const double r = std::sqrt(-2.0 * std::log(to_unit(w[0], w[1])));
      const double theta = 2.0 * std::numbers::pi * to_unit(w[2], w[3]);
      out(i, j) = r * std::cos(theta);
      out(i + 1, j) = r * std::sin(theta);
    }
    if (i < out.rows()) out(i, j) = normal(particle, draw);
  }
}

void RngStream::fill_uniform(Eigen::Ref<Array> out, std::uint64_t first_particle, std::uint64_t draw) const {
  for (Eigen::Index j = 0; j < out.size(); ++j) out(j) = uniform(first_particle + static_cast<std::uint64_t>(j), draw);
}

double RngStream::next_uniform() noexcept {
  const auto w = draw_block(key_, cursor_++, kCursorDomain | kUniformDomain);
  return to_unit(w[0], w[1]);
}

double RngStream::next_normal() noexcept {
  const auto w = draw_block(key_, cursor_++, kCursorDomain);
  const double r = std::sqrt(-2.0 * std::log(to_unit(w[0], w[1])));
  return r * std::cos(2.0 * std::numbers::pi * to_unit(w[2], w[3]));
}

double uniform_midpoint(RngStream& rng, int i, int R) {
  if (R < 1 || i < 1 || i > R) throw std::invalid_argument("uniform_midpoint: require 1 <= i <= R");
  return (static_cast<double>(i - 1) + rng.next_uniform()) / R;
}

}  // namespace midpoint
