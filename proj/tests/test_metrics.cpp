#include "fixtures.hpp"
#include "oracles.hpp"

#include "metricmi/metrics.hpp"
#include "metricmi/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace metricmi;

namespace {

std::vector<double> random_train(Rng& rng, std::size_t max_spikes, double span) {
  std::vector<double> t(rng.below(max_spikes + 1));
  for (auto& x : t) x = span * rng.uniform01();
  std::sort(t.begin(), t.end());
  return t;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("euclidean") {
  const std::vector<double> a{0, 0}, b{3, 4};
  CHECK(euclidean(a, b) == 5.0);
  CHECK(distance(VectorPoint{a}, VectorPoint{b}, Euclidean{}) == 5.0);
}

TEST_CASE("victor-purpura small cases") {
  CHECK(victor_purpura(std::vector{1.0}, std::vector{1.2}, 1.0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(victor_purpura(std::vector{1.0}, std::vector{4.0}, 1.0) == 2.0);
  CHECK(victor_purpura({}, std::vector{0.1, 0.2}, 1.0) == 2.0);
  CHECK(victor_purpura(std::vector{0.1, 0.5}, std::vector{0.3, 0.9}, 0.0) == 0.0);
}

TEST_CASE("victor-purpura matches edit-path enumeration") {
  Rng rng(17);
  for (int k = 0; k < 400; ++k) {
    const auto a = random_train(rng, 3, 2.0);
    const auto b = random_train(rng, 3, 2.0);
    const double q = 4.0 * rng.uniform01();
    CHECK(victor_purpura(a, b, q) == doctest::Approx(oracle::vp_enumerate(a, b, q)).epsilon(1e-12));
  }
}

TEST_CASE("van rossum closed form") {
  const double d = van_rossum(std::vector{0.3}, std::vector{1.3}, 1.0);
  CHECK(d == doctest::Approx(std::sqrt(1.0 - std::exp(-1.0))).epsilon(1e-12));
  CHECK(std::abs(d - 0.79506) < 1e-5);
  CHECK(van_rossum({}, std::vector{0.5}, 0.2) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("van rossum matches numerical integration") {
  Rng rng(23);
  for (int k = 0; k < 12; ++k) {
    const auto a = random_train(rng, 4, 1.0);
    const auto b = random_train(rng, 4, 1.0);
    const double tau = 0.05 + 0.5 * rng.uniform01();
    CHECK(van_rossum(a, b, tau) == doctest::Approx(oracle::van_rossum_numeric(a, b, tau)).epsilon(1e-3));
  }
}

TEST_CASE("metric axioms on spike trains") {
  Rng rng(31);
  const std::vector<MetricSpec> metrics{VictorPurpura{0.0}, VictorPurpura{2.5}, VanRossum{0.1}, VanRossum{1.0}};
  for (int k = 0; k < 200; ++k) {
    const SpikeTrain a{random_train(rng, 6, 1.0)};
    const SpikeTrain b{random_train(rng, 6, 1.0)};
    const SpikeTrain c{random_train(rng, 6, 1.0)};
    for (const auto& m : metrics) {
      CHECK(distance(a, a, m) == 0.0);
      CHECK(distance(a, b, m) == distance(b, a, m));
      CHECK(distance(a, b, m) >= 0.0);
      CHECK(distance(a, c, m) <= distance(a, b, m) + distance(b, c, m) + 1e-12);
    }
  }
}

TEST_CASE("variant and parameter errors") {
  CHECK_THROWS_AS(distance(VectorPoint{{1.0}}, SpikeTrain{{0.1}}, Euclidean{}), MetricError);
  CHECK_THROWS_AS(distance(VectorPoint{{1.0}}, VectorPoint{{2.0}}, VictorPurpura{1.0}), MetricError);
  CHECK_THROWS_AS(distance(SpikeTrain{{0.1}}, SpikeTrain{{0.2}}, Euclidean{}), MetricError);
  CHECK_THROWS_AS(validate(MetricSpec{VictorPurpura{-1.0}}), MetricError);
  CHECK_THROWS_AS(validate(MetricSpec{VanRossum{0.0}}), MetricError);
  CHECK_THROWS_AS(validate(MetricSpec{VanRossum{INFINITY}}), MetricError);
  CHECK(metric_name(VanRossum{}) == "van-rossum");
}

TEST_CASE("distance matrix invariants") {
  auto d = fixture::random(3, 5, 3, 2);
  for (unsigned threads : {1u, 3u}) {
    auto dm = distance_matrix(d, Euclidean{}, threads);
    REQUIRE(dm.size() == d.n_r());
    for (std::size_t i = 0; i < dm.size(); ++i) {
      CHECK(dm(i, i) == 0.0);
      for (std::size_t j = 0; j < dm.size(); ++j) {
        CHECK(dm(i, j) == dm(j, i));
        CHECK(dm(i, j) == distance(d.point(i), d.point(j), Euclidean{}));
      }
    }
  }
  CHECK_THROWS(DistanceMatrix::from_entries(2, {0, 1, 2, 0}));
  CHECK_THROWS(DistanceMatrix::from_entries(2, {1, 1, 1, 0}));
  CHECK_THROWS(DistanceMatrix::from_entries(2, {0, -1, -1, 0}));
  CHECK_THROWS(DistanceMatrix::from_entries(2, {0, 1, 1}));
}

TEST_CASE("neighbour order breaks ties by index") {
  // points 0, 2, 1, 3 on a line: from 2 (index 2 at x=1) both 0 and 2 sit at distance 1
  auto d = fixture::line({0, 2, 1, 3}, {0, 0, 1, 1});
  auto dm = distance_matrix(d, Euclidean{});
  CHECK(neighbor_order(dm, 2) == std::vector<std::uint32_t>{2, 0, 1, 3});
  CHECK(neighbor_order(dm, 1) == std::vector<std::uint32_t>{1, 2, 3, 0});
  NeighborTable table(dm, 2);
  for (std::size_t i = 0; i < dm.size(); ++i) {
    auto o = table.order(i);
    CHECK(std::vector<std::uint32_t>(o.begin(), o.end()) == neighbor_order(dm, i));
  }
}

} // TEST_SUITE
