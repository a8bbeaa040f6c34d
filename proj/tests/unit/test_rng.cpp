#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "divgauge/rng.hpp"
#include "doctest.h"

using namespace divgauge;

TEST_CASE("philox known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::apply(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::apply(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::apply(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and disjoint") {
  Stream a(42, StreamRole::kQSampling);
  Stream b(42, StreamRole::kQSampling);
  Stream c(42, StreamRole::kPSampling);
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    same += x == c.next_u64();
  }
  CHECK(same == 0);
}

TEST_CASE("uniform and normal moments") {
  Stream s(7, StreamRole::kAux);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("bounded integers and permutations") {
  Stream s(3, StreamRole::kPermutation);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[s.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  const auto perm = random_permutation(1000, s);
  std::vector<std::size_t> sorted(perm);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> iota(1000);
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(sorted == iota);
}

TEST_CASE("split children differ from parent") {
  Stream parent(11, StreamRole::kInit);
  Stream c1 = parent.split(1);
  Stream c2 = parent.split(2);
  CHECK(c1.next_u64() != c2.next_u64());
  CHECK(parent.split(1).next_u64() == Stream(11, StreamRole::kInit).split(1).next_u64());
}
