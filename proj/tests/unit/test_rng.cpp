#include "doctest.h"
#include "oracles.hpp"

#include "midpoint/rng.hpp"
#include "midpoint/workers.hpp"

using namespace midpoint;

TEST_CASE("philox matches the published known-answer vectors") {
  using W = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same path gives the same numbers, different paths differ") {
  const RngStream a(42), b(42);
  CHECK(a.child(3).child(1).normal(7, 2) == b.child(3).child(1).normal(7, 2));
  CHECK(a.child(3).uniform(0, 0) != a.child(4).uniform(0, 0));
  CHECK(RngStream(1).uniform(0, 0) != RngStream(2).uniform(0, 0));
  CHECK(a.child(1).path() == std::vector<std::uint64_t>{1});
}

TEST_CASE("uniforms stay in the open unit interval") {
  const RngStream r(5);
  for (std::uint64_t p = 0; p < 20000; ++p) {
    const double u = r.uniform(p, 0);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("uniform_midpoint respects its sub-interval") {
  RngStream r(9);
  for (int k = 0; k < 1000; ++k) {
    const double a = uniform_midpoint(r, 1, 1);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
    const double b = uniform_midpoint(r, 3, 4);
    CHECK(b >= 0.5);
    CHECK(b <= 0.75);
  }
  CHECK_THROWS_AS(uniform_midpoint(r, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(uniform_midpoint(r, 5, 4), std::invalid_argument);
}

TEST_CASE("uniform_midpoint passes a KS test on [0.5, 0.75]") {
  RngStream r(2024);
  std::vector<double> x(100000);
  for (auto& v : x) v = uniform_midpoint(r, 3, 4);
  const double d = oracle::ks_statistic(x, [](double v) { return std::clamp((v - 0.5) / 0.25, 0.0, 1.0); });
  CHECK(oracle::ks_pvalue(d, x.size()) > 0.001);
  // addressed variant
  const RngStream s(77);
  for (std::uint64_t p = 0; p < x.size(); ++p) x[p] = uniform_midpoint(s, p, 2, 4);
  const double d2 = oracle::ks_statistic(x, [](double v) { return std::clamp((v - 0.25) / 0.25, 0.0, 1.0); });
  CHECK(oracle::ks_pvalue(d2, x.size()) > 0.001);
}

TEST_CASE("normals pass a KS test against the standard normal") {
  const RngStream r(11);
  std::vector<double> x;
  for (std::uint64_t p = 0; p < 50000; ++p) {
    x.push_back(r.normal(p, 0));
    x.push_back(r.normal(p, 1));
  }
  const double d = oracle::ks_statistic(x, oracle::normal_cdf);
  CHECK(oracle::ks_pvalue(d, x.size()) > 0.001);
}

TEST_CASE("sibling streams are uncorrelated") {
  const RngStream root(123);
  const RngStream a = root.child(0), b = root.child(1);
  constexpr long n = 1000000;
  double sum = 0.0;
  for (long p = 0; p < n; ++p) sum += a.normal(static_cast<std::uint64_t>(p), 0) * b.normal(static_cast<std::uint64_t>(p), 0);
  CHECK(std::abs(sum / n) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("batched fills do not depend on how particles are split") {
  const RngStream r(3);
  Batch whole(6, 100);
  r.fill_normal(whole, 0);
  Batch left(6, 37), right(6, 63);
  r.fill_normal(left, 0);
  r.fill_normal(right, 37);
  CHECK(whole.leftCols(37) == left);
  CHECK(whole.rightCols(63) == right);
  CHECK(whole(4, 10) == r.normal(10, 4));

  Array u(100), v(40);
  r.fill_uniform(u, 0, 2);
  r.fill_uniform(v, 60, 2);
  CHECK(u.tail(40).matrix() == v.matrix());
}

TEST_CASE("sequential cursor is deterministic and keyed") {
  RngStream a(8), b(8);
  for (int i = 0; i < 10; ++i) CHECK(a.next_normal() == b.next_normal());
  RngStream c(8);
  CHECK(c.next_uniform() != RngStream(8).child(0).next_uniform());
}

TEST_CASE("worker pool covers every index once") {
  for (std::size_t workers : {1u, 3u, 8u}) {
    const WorkerPool pool(workers);
    std::vector<int> hits(1000, 0);
    pool.parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  const WorkerPool pool(4);
  CHECK_THROWS_AS(pool.parallel_for(10, [](std::size_t b, std::size_t) {
    if (b > 0) throw std::runtime_error("boom");
  }),
                  std::runtime_error);
}
