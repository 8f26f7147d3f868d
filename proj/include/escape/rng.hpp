#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace escape {

// Philox4x32-10 counter-based generator. The key is the seed and the upper
// half of the counter is the stream id, so (seed, stream_id) pairs give
// independent, reproducible streams with no shared state.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed = 0, std::uint64_t stream_id = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0,1) with 53 random bits.
  double uniform();
  // Uniform on (0,1]; safe under log().
  double uniform_pos();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  // Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

}  // namespace escape
