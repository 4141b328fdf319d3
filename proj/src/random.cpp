#include "brw/random.hpp"

#include <array>

namespace brw {

namespace {

Xoshiro256pp make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::array<std::uint32_t, 5> words{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
      0x62727721u};
  std::seed_seq seq(words.begin(), words.end());
  return Xoshiro256pp(seq);
}

}  // namespace

Xoshiro256pp::Xoshiro256pp(std::seed_seq& seq) {
  std::array<std::uint32_t, 8> w{};
  seq.generate(w.begin(), w.end());
  for (int i = 0; i < 4; ++i) s_[i] = (std::uint64_t{w[2 * i]} << 32) | w[2 * i + 1];
  // The all-zero state is a fixed point.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

void RandomStream::fill(std::span<std::uint64_t> out) {
  for (auto& w : out) w = engine_();
}

}  // namespace brw
