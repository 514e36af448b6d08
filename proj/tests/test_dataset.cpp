#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "entshap/dataset.hpp"
#include "entshap/error.hpp"
#include "entshap/io.hpp"
#include "entshap/rng.hpp"

using namespace entshap;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "entshap_test_dataset";
  fs::create_directories(p);
  return p;
}

Dataset toy(std::int64_t n = 6, int d = 3, std::uint64_t seed = 3) {
  Dataset ds = Dataset::make(n, d);
  ds.target = std::vector<double>(static_cast<std::size_t>(n));
  RngStream rng(seed, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.set(i, j, rng.normal());
    (*ds.target)[static_cast<std::size_t>(i)] = rng.normal();
  }
  return ds;
}

}  // namespace

TEST_CASE("csv round trip is bit exact, including awkward doubles") {
  Dataset ds = Dataset::make(4, 2);
  ds.feature_names = {"a,comma", "b\"quote"};
  ds.target = std::vector<double>{0.1, -1e-300, 1.0 / 3.0, 12345678901234567.0};
  ds.set(0, 0, 0.1 + 0.2);  // 0.30000000000000004
  ds.set(0, 1, -0.0);
  ds.set(1, 0, 1e308);
  ds.set(1, 1, 5e-324);  // smallest subnormal
  ds.set(2, 0, -2.5);
  ds.set_missing(2, 1);
  ds.set(3, 0, 42.0);
  ds.set(3, 1, 1.0 / 3.0);

  const auto path = (temp_dir() / "round.csv").string();
  write_csv(ds, path);
  const Dataset back = load_csv(path, ds.target_name);
  REQUIRE(back.n == ds.n);
  REQUIRE(back.d == ds.d);
  REQUIRE(back.feature_names == ds.feature_names);
  REQUIRE(back.values.size() == ds.values.size());
  for (std::size_t k = 0; k < ds.values.size(); ++k) {
    if (ds.missing[k]) {
      REQUIRE(back.missing[k] == 1);
    } else {
      // Bit-exact: compare via bit patterns, which also pins -0.0.
      REQUIRE(std::bit_cast<std::uint64_t>(back.values[k]) ==
              std::bit_cast<std::uint64_t>(ds.values[k]));
    }
  }
  REQUIRE(*back.target == *ds.target);
  REQUIRE(content_hash(back) == content_hash(ds));
}

TEST_CASE("load_csv reports row and column on bad cells") {
  const auto dir = temp_dir();
  const auto path = (dir / "bad.csv").string();

  write_text_file(path, "a,b,y\n1,2,3\n4,oops,6\n");
  try {
    load_csv(path, "y");
    FAIL("expected data error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("row 2") != std::string::npos);
    REQUIRE(msg.find("column 'b'") != std::string::npos);
  }

  // Missing target cell is an error even though features may be missing.
  write_text_file(path, "a,y\n1,NA\n");
  REQUIRE_THROWS_AS(load_csv(path, "y"), Error);
  // Unknown target column.
  write_text_file(path, "a,b\n1,2\n");
  REQUIRE_THROWS_AS(load_csv(path, "zz"), Error);
  // Ragged row.
  write_text_file(path, "a,b\n1,2\n3\n");
  REQUIRE_THROWS_AS(load_csv(path, std::nullopt), Error);
}

TEST_CASE("missing token is configurable and NA cells flow through") {
  const auto path = (temp_dir() / "miss.csv").string();
  write_text_file(path, "a,b,y\n1,?,0\n?,2,1\n");
  const Dataset ds = load_csv(path, "y", "?");
  REQUIRE(ds.is_missing(0, 1));
  REQUIRE(ds.is_missing(1, 0));
  REQUIRE_FALSE(ds.is_missing(0, 0));
  REQUIRE(ds.missing_count() == 2);
  REQUIRE(std::isnan(ds.at(0, 1)));
  REQUIRE_FALSE(ds.row_complete(0));
}

TEST_CASE("split_half is a seeded disjoint partition") {
  const auto s = split_half(101, 9);
  REQUIRE(s.first.size() == 50);
  REQUIRE(s.second.size() == 51);
  std::set<std::int64_t> all(s.first.begin(), s.first.end());
  all.insert(s.second.begin(), s.second.end());
  REQUIRE(all.size() == 101);
  const auto again = split_half(101, 9);
  REQUIRE(again.first == s.first);
  REQUIRE(split_half(101, 10).first != s.first);
}

TEST_CASE("split_fraction sizes by rounding") {
  const auto s = split_fraction(600, 0.2, 4);
  REQUIRE(s.second.size() == 120);
  REQUIRE(s.first.size() == 480);
  REQUIRE_THROWS_AS(split_fraction(10, 0.0, 1), Error);
  REQUIRE_THROWS_AS(split_fraction(10, 1.0, 1), Error);
}

TEST_CASE("mask_missing hits the exact requested count, target untouched") {
  const Dataset ds = toy(40, 5);
  for (const double f : {0.0, 0.1, 0.25, 0.5}) {
    const Dataset masked = mask_missing(ds, f, 77);
    const auto expect = static_cast<std::int64_t>(std::llround(f * 40 * 5));
    REQUIRE(masked.missing_count() == expect);
    REQUIRE(*masked.target == *ds.target);
  }
  // Seeded: same plan both times.
  REQUIRE(content_hash(mask_missing(ds, 0.3, 5)) == content_hash(mask_missing(ds, 0.3, 5)));
  REQUIRE(content_hash(mask_missing(ds, 0.3, 5)) != content_hash(mask_missing(ds, 0.3, 6)));
}

TEST_CASE("subset keeps rows in the requested order") {
  const Dataset ds = toy(8, 2);
  const Dataset sub = ds.subset({5, 1, 5});
  REQUIRE(sub.n == 3);
  REQUIRE(sub.at(0, 0) == ds.at(5, 0));
  REQUIRE(sub.at(1, 1) == ds.at(1, 1));
  REQUIRE(sub.at(2, 0) == ds.at(5, 0));
  REQUIRE((*sub.target)[1] == (*ds.target)[1]);
}

TEST_CASE("content hash tracks values, missingness, names, and target") {
  Dataset a = toy();
  Dataset b = toy();
  REQUIRE(content_hash(a) == content_hash(b));
  b.set(0, 0, a.at(0, 0) + 1e-12);
  REQUIRE(content_hash(a) != content_hash(b));
  Dataset c = toy();
  c.set_missing(2, 1);
  REQUIRE(content_hash(a) != content_hash(c));
  Dataset e = toy();
  e.feature_names[0] = "renamed";
  REQUIRE(content_hash(a) != content_hash(e));
}
