#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "ompn/rng.hpp"

using ompn::Rng;
using ompn::mix_seed;

TEST_SUITE("rng") {

TEST_CASE("stream is frozen for a fixed seed") {
  // These constants pin the generator's exact output so any platform or
  // refactoring drift is caught immediately; reproducible instances and
  // multistart draws depend on this stream bit-for-bit.
  Rng r(42);
  CHECK(r.next_u64() == 15021278609987233951ull);
  CHECK(r.next_u64() == 5881210131331364753ull);
  CHECK(r.next_u64() == 18149643915985481100ull);
  CHECK(r.next_u64() == 12933668939759105464ull);

  Rng d(42);
  CHECK(d.next_double() == doctest::Approx(0.81430514512290986).epsilon(1e-15));
  CHECK(d.next_double() == doctest::Approx(0.31882104006166112).epsilon(1e-15));
  CHECK(d.next_double() == doctest::Approx(0.98389416817748876).epsilon(1e-15));
}

TEST_CASE("same seed replays, different seed diverges") {
  Rng a(7), b(7), c(8);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && (va == b.next_u64());
    any_diff = any_diff || (va != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("doubles stay in [0, 1) and look uniform") {
  Rng r(123);
  const int draws = 100000;
  double sum = 0.0;
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = r.next_double();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(sum / draws == doctest::Approx(0.5).epsilon(0.02));
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("uniform(lo, hi) respects its interval") {
  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    const double v = r.uniform(-3.0, 4.5);
    REQUIRE(v >= -3.0);
    REQUIRE(v < 4.5);
  }
}

TEST_CASE("below(bound) is in range and covers all residues") {
  Rng r(99);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = r.below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("seed mixing is order-sensitive and stable") {
  CHECK(mix_seed(1, 2) == 13832682312333872540ull);
  CHECK(mix_seed(2, 1) == 7201719831048520067ull);
  CHECK(mix_seed(1, 2) != mix_seed(2, 1));
  CHECK(mix_seed(0, 0) == mix_seed(0, 0));
  // Children of nearby seeds should still decorrelate.
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
  CHECK(mix_seed(1, 1) != mix_seed(2, 1));
}

}  // TEST_SUITE
