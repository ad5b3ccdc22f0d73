#pragma once

// Counter-based Philox4x32-10 generator. A draw is a pure function of
// (seed, stream, counter), so independent work units never share state.

#include <array>
#include <cstdint>
#include <utility>

namespace dlab {

using PhiloxBlock = std::array<std::uint32_t, 4>;

PhiloxBlock philox4x32_10(PhiloxBlock counter, std::array<std::uint32_t, 2> key);

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  /// Position the stream at a block index; each block yields two 64-bit words.
  void seek(std::uint64_t block) {
    counter_ = block;
    have_word_ = false;
    have_normal_ = false;
  }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Two independent standard normals from a single block, without touching the stream position.
  std::pair<double, double> normal_pair_at(std::uint64_t block) const;

 private:
  std::array<std::uint64_t, 2> words_at(std::uint64_t block) const;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_word_ = 0;
  bool have_word_ = false;
  double spare_normal_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace dlab
