#include "dlab/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace dlab;

TEST_CASE("philox known-answer vectors") {
  // Published Random123 test vectors.
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxBlock{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxBlock{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxBlock{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and seekable") {
  RandomStream a(42, 3), b(42, 3), c(42, 4);
  std::vector<double> xs;
  for (int i = 0; i < 100; ++i) xs.push_back(a.normal());
  for (int i = 0; i < 100; ++i) CHECK(b.normal() == xs[i]);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += c.normal() == xs[i];
  CHECK(same == 0);

  RandomStream d(42, 3);
  d.seek(7);
  const auto u = d.next_u64();
  d.seek(7);
  CHECK(d.next_u64() == u);
  CHECK(d.normal_pair_at(5) == RandomStream(42, 3).normal_pair_at(5));
}

TEST_CASE("uniform and normal moments") {
  RandomStream s(9, 0);
  const int n = 200000;
  double su = 0.0, su2 = 0.0, sn = 0.0, sn2 = 0.0, sn4 = 0.0;
  double umin = 1.0, umax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    su2 += u * u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  // Tolerances are about five standard errors.
  CHECK(std::abs(su / n - 0.5) < 0.0035);
  CHECK(std::abs(su2 / n - 1.0 / 3.0) < 0.004);
  CHECK(std::abs(sn / n) < 0.012);
  CHECK(std::abs(sn2 / n - 1.0) < 0.016);
  CHECK(std::abs(sn4 / n - 3.0) < 0.1);
}

TEST_CASE("bounded integers cover the range evenly") {
  RandomStream s(1, 1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts[s.below(7)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}
