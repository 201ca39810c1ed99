// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "gmmv/grid.hpp"

using namespace gmmv;

TEST_CASE("flattened index round trip") {
  Grid2D g(-0.075, -0.075, 0.0025, 60, 47);
  REQUIRE(g.size() == 60 * 47);
  for (int n = 0; n < g.size(); ++n) {
    auto [ix, iy] = g.unflatten(n);
    REQUIRE(g.flatten(ix, iy) == n);
  }
  // row-major: x varies fastest
  REQUIRE(g.flatten(1, 0) == 1);
  REQUIRE(g.flatten(0, 1) == 60);
}

TEST_CASE("cell centers") {
  Grid2D g(-0.075, -0.075, 0.0025, 60, 60);
  Vec2 c0 = g.center(0);
  REQUIRE(c0.x == Catch::Approx(-0.075 + 0.00125));
  REQUIRE(c0.y == Catch::Approx(-0.075 + 0.00125));
}

TEST_CASE("grid construction rejects bad units") {
  REQUIRE_THROWS_AS(Grid2D(0, 0, -0.001, 10, 10), Error);
  REQUIRE_THROWS_AS(Grid2D(0, 0, 0.001, 0, 10), Error);
}

TEST_CASE("frequency set invariants") {
  REQUIRE_THROWS_AS(FrequencySet({2e9, 2e9}), Error);
  REQUIRE_THROWS_AS(FrequencySet({4e9, 2e9}), Error);
  REQUIRE_THROWS_AS(FrequencySet({-1e9}), Error);
  FrequencySet fs({2e9, 4e9, 6e9, 8e9});
  REQUIRE(fs.count() == 4);
  REQUIRE(fs.lambda(1) == Catch::Approx(constants::c0 / 4e9));
  REQUIRE(fs.lambda_min() == Catch::Approx(constants::c0 / 8e9));
  REQUIRE(fs.k(1) == Catch::Approx(2 * constants::pi * 4e9 / constants::c0));
}

TEST_CASE("grid rule: reference case at 4 GHz") {
  // delta = 2.5 mm against lambda(4 GHz) = 74.95 mm: lambda/15 ~ 4.996 mm
  Grid2D g(-0.075, -0.075, 0.0025, 60, 60);
  FrequencySet fs({4e9});
  auto r = check_grid_rule(g, fs);
  REQUIRE(r.pass);
  REQUIRE(r.delta_max == Catch::Approx(constants::c0 / 4e9 / 15.0));
}

TEST_CASE("grid rule boundary and failure") {
  FrequencySet fs({4e9});
  double dmax = constants::c0 / 4e9 / 15.0;
  Grid2D exact(-0.075, -0.075, dmax, 30, 30);
  REQUIRE(check_grid_rule(exact, fs).pass);
  Grid2D coarse(-0.075, -0.075, 2 * dmax, 15, 15);
  auto r = check_grid_rule(coarse, fs);
  REQUIRE_FALSE(r.pass);
  REQUIRE(r.delta_max == Catch::Approx(dmax));
}

TEST_CASE("grid rule is monotone in delta") {
  FrequencySet fs({2e9, 8e9});
  double d = 0.004;
  bool passed_coarser = check_grid_rule(Grid2D(0, 0, d, 10, 10), fs).pass;
  for (int i = 1; i <= 10; ++i) {
    double finer = d / (1 + i);
    bool p = check_grid_rule(Grid2D(0, 0, finer, 10, 10), fs).pass;
    if (passed_coarser) REQUIRE(p);
  }
}

TEST_CASE("contrast map chi vanishes on background cells") {
  Grid2D g(0, 0, 0.001, 4, 4);
  ContrastMap m(g);
  BackgroundModel bg;
  m.eps_r[5] = 3.0;
  auto chi = m.chi(2 * constants::pi * 4e9, bg);
  for (int n = 0; n < g.size(); ++n) {
    if (n == 5)
      REQUIRE(std::abs(chi[n]) > 0);
    else
      REQUIRE(std::abs(chi[n]) == 0.0);
  }
  auto sup = m.support(bg);
  REQUIRE(sup[5]);
  REQUIRE_FALSE(sup[0]);
}
