#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "entshap/coalition.hpp"
#include "entshap/error.hpp"
#include "entshap/parallel.hpp"
#include "entshap/rng.hpp"

using namespace entshap;

TEST_CASE("streams are deterministic and keyed, not stateful") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  // Different stream ids decorrelate immediately.
  RngStream c(42, 8);
  REQUIRE(RngStream(42, 7).next_u64() != c.next_u64());

  // derive() depends only on the key, never on how much was drawn.
  RngStream fresh(42, 7);
  RngStream drained(42, 7);
  for (int i = 0; i < 17; ++i) drained.next_u64();
  REQUIRE(fresh.derive(3).next_u64() == drained.derive(3).next_u64());
  REQUIRE(fresh.derive(3).next_u64() != fresh.derive(4).next_u64());
}

TEST_CASE("uniform lands in [0,1) and uniform_pos in (0,1]") {
  RngStream rng(1, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  REQUIRE(lo < 0.01);
  REQUIRE(hi > 0.99);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform_pos();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
}

TEST_CASE("uniform_below is in range and roughly uniform") {
  RngStream rng(5, 0);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.uniform_below(7);
    REQUIRE(v < 7);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (const auto c : counts) REQUIRE(std::fabs(c - 10000.0) < 500.0);
  REQUIRE_THROWS_AS(rng.uniform_below(0), Error);
}

TEST_CASE("normal has the right first two moments") {
  RngStream rng(9, 0);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  REQUIRE(std::fabs(mean) < 0.01);
  REQUIRE(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("sample_without_replacement draws distinct in-range indices") {
  RngStream rng(11, 0);
  std::vector<std::int64_t> scratch, out;
  rng.sample_without_replacement<std::int64_t>(50, 20, scratch, out);
  REQUIRE(out.size() == 20);
  std::set<std::int64_t> seen(out.begin(), out.end());
  REQUIRE(seen.size() == 20);
  for (const auto v : out) {
    REQUIRE(v >= 0);
    REQUIRE(v < 50);
  }
  // Full-size draw is a permutation.
  rng.sample_without_replacement<std::int64_t>(10, 10, scratch, out);
  std::sort(out.begin(), out.end());
  for (std::int64_t i = 0; i < 10; ++i) REQUIRE(out[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("coalition mask basics across the 64-bit word boundary") {
  for (const int d : {5, 64, 70, 130}) {
    CoalitionMask m = CoalitionMask::empty(d);
    REQUIRE(m.cardinality() == 0);
    m.add(0);
    m.add(d - 1);
    REQUIRE(m.contains(0));
    REQUIRE(m.contains(d - 1));
    REQUIRE_FALSE(m.contains(1));
    REQUIRE(m.cardinality() == 2);
    const CoalitionMask c = m.complement();
    REQUIRE(c.cardinality() == d - 2);
    REQUIRE_FALSE(c.contains(0));
    m.remove(0);
    REQUIRE(m.cardinality() == 1);
    REQUIRE(CoalitionMask::full(d).cardinality() == d);
  }
}

TEST_CASE("with/without copy semantics and members listing") {
  CoalitionMask m = CoalitionMask::from_bits(6, 0b010110);
  const CoalitionMask w = m.with(0);
  REQUIRE(w.contains(0));
  REQUIRE_FALSE(m.contains(0));
  REQUIRE(m.members() == std::vector<int>{1, 2, 4});
  REQUIRE(m.without(2).members() == std::vector<int>{1, 4});
  REQUIRE(m.to_string() == "011010");
}

TEST_CASE("mask hashing separates distinct coalitions") {
  std::set<std::uint64_t> hashes;
  const int d = 10;
  for (std::uint64_t bits = 0; bits < (1u << d); ++bits)
    hashes.insert(CoalitionMask::from_bits(d, bits).hash64());
  REQUIRE(hashes.size() == (1u << d));
  // Same bit pattern at different dimension hashes differently.
  REQUIRE(CoalitionMask::from_bits(5, 3).hash64() != CoalitionMask::from_bits(6, 3).hash64());
}

TEST_CASE("parallel_for writes every slot once, any thread count") {
  const std::int64_t n = 1000;
  std::vector<int> ref(static_cast<std::size_t>(n), 0);
  parallel_for(n, 1, [&](std::int64_t i) { ref[static_cast<std::size_t>(i)] += static_cast<int>(i); });
  for (const int threads : {2, 4, 7}) {
    std::vector<int> got(static_cast<std::size_t>(n), 0);
    parallel_for(n, threads, [&](std::int64_t i) { got[static_cast<std::size_t>(i)] += static_cast<int>(i); });
    REQUIRE(got == ref);
  }
}

TEST_CASE("parallel_for propagates the first exception") {
  REQUIRE_THROWS_AS(parallel_for(100, 4,
                                 [&](std::int64_t i) {
                                   if (i == 31) throw_data("boom");
                                 }),
                    Error);
}
