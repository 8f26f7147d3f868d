#include "escape/rng.hpp"

namespace escape {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;
}  // namespace

std::array<std::uint32_t, 4> Rng::philox(std::array<std::uint32_t, 4> c,
                                         std::array<std::uint32_t, 2> k) {
  for (int r = 0; r < 10; ++r) {
    const std::uint64_t p0 = std::uint64_t(kM0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kM1) * c[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

void Rng::refill() {
  block_ = philox({std::uint32_t(counter_), std::uint32_t(counter_ >> 32), std::uint32_t(stream_),
                   std::uint32_t(stream_ >> 32)},
                  {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
  ++counter_;
  pos_ = 0;
}

Rng::result_type Rng::operator()() {
  if (pos_ > 2) refill();
  const std::uint64_t lo = block_[pos_];
  const std::uint64_t hi = block_[pos_ + 1];
  pos_ += 2;
  return (hi << 32) | lo;
}

double Rng::uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

double Rng::uniform_pos() { return (double((*this)() >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace escape
