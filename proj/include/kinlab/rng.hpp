#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace kinlab {

/// Philox4x32 with 10 rounds.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(m0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(m1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

/// 128 random bits addressed by (seed, stream, index).
inline std::array<std::uint64_t, 2> counter_block(std::uint64_t seed, std::uint64_t stream,
                                                  std::uint64_t index) {
  auto out = philox4x32({std::uint32_t(index), std::uint32_t(index >> 32), std::uint32_t(stream),
                         std::uint32_t(stream >> 32)},
                        {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  return {(std::uint64_t(out[1]) << 32) | out[0], (std::uint64_t(out[3]) << 32) | out[2]};
}

// [0,1) from the top 53 bits
inline double bits_to_unit(std::uint64_t b) { return double(b >> 11) * 0x1.0p-53; }
// (0,1]
inline double bits_to_open_unit(std::uint64_t b) { return (double(b >> 11) + 1.0) * 0x1.0p-53; }

inline double box_muller(std::uint64_t a, std::uint64_t b) {
  const double r = std::sqrt(-2.0 * std::log(bits_to_open_unit(a)));
  return r * std::cos(2.0 * std::numbers::pi * bits_to_unit(b));
}

/// Standard normal that depends only on its address, never on call order.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const auto blk = counter_block(seed, stream, index);
  return box_muller(blk[0], blk[1]);
}

/// Seed for a named sub-task, so unrelated consumers of one master seed never share streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) {
  return counter_block(master, 0xD1B54A32D192ED03ull, tag)[0];
}

/// Sequential generator over one (seed, stream) address space.
/// Satisfies UniformRandomBitGenerator, so std algorithms can use it too.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t position = 0)
      : seed_(seed), stream_(stream), counter_(position) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type(0); }

  result_type operator()() {
    // one block per call keeps position() a plain draw count
    return counter_block(seed_, stream_, counter_++)[0];
  }

  double uniform() { return bits_to_unit((*this)()); }
  double uniform_open() { return bits_to_open_unit((*this)()); }
  double normal() {
    const auto blk = counter_block(seed_, stream_, counter_++);
    return box_muller(blk[0], blk[1]);
  }
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_, stream_, counter_;
};

}  // namespace kinlab
