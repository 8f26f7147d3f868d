#include <doctest.h>

#include <random>
#include <set>

#include "escape/rng.hpp"

using escape::Rng;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(Rng::philox(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Rng::philox(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Rng::philox(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same seed and stream reproduce the sequence") {
  Rng a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a() == b());
}

TEST_CASE("different streams and seeds give different sequences") {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t id = 0; id < 50; ++id) firsts.insert(Rng(s, id)());
  CHECK(firsts.size() == 200);
}

TEST_CASE("uniform ranges") {
  Rng r(1, 0);
  double lo = 1, hi = 0, sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    const double v = r.uniform_pos();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo < 1e-4);
  CHECK(hi > 1 - 1e-4);
  // mean of n uniforms: sd = sqrt(1/12/n)
  CHECK(std::abs(sum / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("works as a standard URBG") {
  Rng r(3, 0);
  std::normal_distribution<double> z;
  double s = 0, ss = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = z(r);
    s += x;
    ss += x * x;
  }
  CHECK(std::abs(s / n) < 0.02);
  CHECK(std::abs(ss / n - 1) < 0.03);
}
