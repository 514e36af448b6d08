#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "entshap/verify.hpp"

using namespace entshap;

TEST_CASE("verification suite passes at reduced table count") {
  VerifyOptions opt;
  opt.tables = 8;
  opt.seed = 20240601;
  const auto report = run_verification(opt);
  REQUIRE(report.all_pass);
  REQUIRE(report.items.size() >= 14);
  for (const auto& item : report.items) {
    INFO(item.name << " max_err=" << item.max_err << " tol=" << item.tol);
    REQUIRE(item.pass);
  }
}

TEST_CASE("verification is deterministic in the seed") {
  VerifyOptions opt;
  opt.tables = 5;
  const auto a = run_verification(opt);
  const auto b = run_verification(opt);
  REQUIRE(a.items.size() == b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    REQUIRE(a.items[i].name == b.items[i].name);
    REQUIRE(a.items[i].max_err == b.items[i].max_err);
  }
}

TEST_CASE("an injected sign error fails exactly one named check") {
  VerifyOptions opt;
  opt.tables = 5;
  opt.inject = "ig-sign";
  const auto report = run_verification(opt);
  REQUIRE_FALSE(report.all_pass);
  int failed = 0;
  std::string failed_name;
  for (const auto& item : report.items)
    if (!item.pass) {
      ++failed;
      failed_name = item.name;
    }
  REQUIRE(failed == 1);
  REQUIRE(failed_name == "ig_shapley_sum_is_information_gain");
}
