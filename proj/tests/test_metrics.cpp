#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "entshap/error.hpp"
#include "entshap/metrics.hpp"

using namespace entshap;

TEST_CASE("auc is one for separable scores and half for constants") {
  const std::vector<double> sep{0.9, 0.8, 0.7, 0.2, 0.1};
  const std::vector<std::uint8_t> lab{1, 1, 1, 0, 0};
  REQUIRE(roc_auc(sep, lab).auc == 1.0);

  const std::vector<double> flipped{0.1, 0.2, 0.3, 0.8, 0.9};
  REQUIRE(roc_auc(flipped, lab).auc == 0.0);

  const std::vector<double> tied(5, 0.5);
  REQUIRE(roc_auc(tied, lab).auc == 0.5);
}

TEST_CASE("auc hand case with a tie group") {
  // scores: pos {3, 2}, neg {2, 1}. Pairs: (3>2)=1, (3>1)=1, (2=2)=0.5, (2>1)=1
  // -> u = 3.5 over 4 pairs.
  const std::vector<double> scores{3.0, 2.0, 2.0, 1.0};
  const std::vector<std::uint8_t> labels{1, 1, 0, 0};
  const auto r = roc_auc(scores, labels);
  REQUIRE_THAT(r.auc, Catch::Matchers::WithinAbs(0.875, 1e-15));
  // Curve starts at (0,0), ends at (1,1).
  REQUIRE(r.points.front().fpr == 0.0);
  REQUIRE(r.points.front().tpr == 0.0);
  REQUIRE(r.points.back().fpr == 1.0);
  REQUIRE(r.points.back().tpr == 1.0);
}

TEST_CASE("auc input validation") {
  REQUIRE_THROWS_AS(roc_auc({1.0, 2.0}, {1, 1}), Error);
  REQUIRE_THROWS_AS(roc_auc({1.0, 2.0}, {0, 0}), Error);
  REQUIRE_THROWS_AS(roc_auc({1.0}, {1, 0}), Error);
  REQUIRE_THROWS_AS(roc_auc({}, {}), Error);
  REQUIRE_THROWS_AS(roc_auc({1.0, std::nan("")}, {1, 0}), Error);
  REQUIRE_THROWS_AS(roc_auc({1.0, 2.0}, {1, 2}), Error);
}

TEST_CASE("median handles even and odd lengths") {
  REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
  REQUIRE(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  REQUIRE(median({7.0}) == 7.0);
  REQUIRE_THROWS_AS(median({}), Error);
}

TEST_CASE("mean stddev and standard error agree with hand values") {
  const std::vector<double> v{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
  REQUIRE_THAT(mean(v), Catch::Matchers::WithinAbs(5.0, 1e-15));
  // Sample variance 32/7.
  REQUIRE_THAT(sample_stddev(v), Catch::Matchers::WithinAbs(std::sqrt(32.0 / 7.0), 1e-15));
  REQUIRE_THAT(standard_error(v),
               Catch::Matchers::WithinAbs(std::sqrt(32.0 / 7.0) / std::sqrt(8.0), 1e-15));
  REQUIRE_THROWS_AS(sample_stddev({1.0}), Error);
  REQUIRE_THROWS_AS(standard_error({1.0}), Error);
}
