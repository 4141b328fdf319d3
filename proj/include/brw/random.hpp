#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace brw {

/// xoshiro256++: 256-bit state, period 2^256 - 1.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;
  explicit Xoshiro256pp(std::seed_seq& seq);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const std::uint64_t out = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// A reproducible random stream identified by (seed, stream id).
///
/// Streams with equal (seed, stream) produce identical sequences; distinct
/// stream ids are decorrelated through std::seed_seq. Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return Xoshiro256pp::min(); }
  static constexpr result_type max() { return Xoshiro256pp::max(); }

  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return to_unit_closed_open(engine_()); }
  /// Uniform on (0, 1].
  double uniform_positive() { return to_unit_open_closed(engine_()); }

  void fill(std::span<std::uint64_t> out);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  static constexpr double to_unit_closed_open(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }
  static constexpr double to_unit_open_closed(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  Xoshiro256pp engine_;
};

}  // namespace brw
