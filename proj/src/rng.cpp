#include "dlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace dlab {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

double to_open_unit(std::uint64_t w) { return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53; }

std::pair<double, double> box_muller(double u1, double u2) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace

PhiloxBlock philox4x32_10(PhiloxBlock ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

std::array<std::uint64_t, 2> RandomStream::words_at(std::uint64_t block) const {
  const PhiloxBlock out = philox4x32_10(
      {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), static_cast<std::uint32_t>(stream_),
       static_cast<std::uint32_t>(stream_ >> 32)},
      {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  return {(static_cast<std::uint64_t>(out[1]) << 32) | out[0], (static_cast<std::uint64_t>(out[3]) << 32) | out[2]};
}

std::uint64_t RandomStream::next_u64() {
  if (have_word_) {
    have_word_ = false;
    return spare_word_;
  }
  const auto w = words_at(counter_++);
  spare_word_ = w[1];
  have_word_ = true;
  return w[0];
}

double RandomStream::uniform() { return to_open_unit(next_u64()); }

double RandomStream::normal() {
  if (have_normal_) {
    have_normal_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const auto [a, b] = box_muller(u1, u2);
  spare_normal_ = b;
  have_normal_ = true;
  return a;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % n));
  std::uint64_t w = next_u64();
  while (w >= limit) w = next_u64();
  return w % n;
}

std::pair<double, double> RandomStream::normal_pair_at(std::uint64_t block) const {
  const auto w = words_at(block);
  return box_muller(to_open_unit(w[0]), to_open_unit(w[1]));
}

}  // namespace dlab
