// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "gmmv/scene.hpp"

using namespace gmmv;

TEST_CASE("circle rasterization matches direct center enumeration") {
  // r = 15 mm circle on a 2.5 mm grid: ~ pi * 6^2 = 113 cells
  Grid2D g(-0.075, -0.075, 0.0025, 60, 60);
  SceneSpec spec;
  spec.shapes.push_back(make_circle({0.0, 0.0}, 0.015, Material{3.0, 0.0}));
  auto map = rasterize_scene(spec, g);
  int flagged = 0;
  int expected = 0;
  for (int n = 0; n < g.size(); ++n) {
    if (map.eps_r[n] > 1.0) ++flagged;
    Vec2 c = g.center(n);
    if (c.x * c.x + c.y * c.y <= 0.015 * 0.015) ++expected;  // independent enumeration
  }
  REQUIRE(flagged == expected);
  REQUIRE(std::abs(flagged - constants::pi * 36.0) <= 12.0);  // perimeter jitter
}

TEST_CASE("empty scene leaves chi identically zero") {
  Grid2D g(-0.01, -0.01, 0.001, 20, 20);
  auto map = rasterize_scene(SceneSpec{}, g);
  BackgroundModel bg;
  auto chi = map.chi(2 * constants::pi * 1e9, bg);
  REQUIRE(chi.norm() == 0.0);
}

TEST_CASE("metal rectangle gets the metallic conductivity") {
  Grid2D g(-0.025, 0.015, 0.0013, 39, 39);
  SceneSpec spec;
  spec.shapes.push_back(make_rectangle({0.0, 0.0403}, 0.0245, 0.0127, 0.0, Material::metal()));
  auto map = rasterize_scene(spec, g);
  int metal_cells = 0;
  for (int n = 0; n < g.size(); ++n)
    if (map.sigma[n] == kMetalSigma) ++metal_cells;
  // 24.5 mm x 12.7 mm at 1.3 mm cells: about 18 x 9 cells
  REQUIRE(metal_cells > 100);
  REQUIRE(metal_cells < 250);
}

TEST_CASE("later shapes overwrite earlier ones") {
  Grid2D g(-0.05, -0.05, 0.0025, 40, 40);
  SceneSpec spec;
  spec.shapes.push_back(make_circle({0, 0}, 0.02, Material::metal()));
  spec.shapes.push_back(make_circle({0, 0}, 0.01, Material{1.0, 0.0}));  // hollow core
  auto map = rasterize_scene(spec, g);
  int n_center = g.flatten(20, 20);
  REQUIRE(map.sigma[n_center] == 0.0);
  int n_rim = g.flatten(20 + 6, 20);  // 15-16 mm from center: inside the annulus
  REQUIRE(map.sigma[n_rim] == kMetalSigma);
}

TEST_CASE("shape outside the grid is rejected") {
  Grid2D g(-0.01, -0.01, 0.001, 20, 20);
  SceneSpec spec;
  spec.shapes.push_back(make_circle({0.02, 0.0}, 0.005, Material{2.0, 0.0}));
  REQUIRE_THROWS_AS(rasterize_scene(spec, g), Error);
}

TEST_CASE("u-profile carves the slot") {
  Grid2D g(-0.07, -0.07, 0.0013, 108, 108);
  SceneSpec spec;
  spec.shapes.push_back(make_uprofile({0, 0}, 0.080, 0.050, 0.060, 0.040, 0.0, Material::metal()));
  auto map = rasterize_scene(spec, g);
  auto at = [&](double x, double y) {
    int ix = static_cast<int>((x - g.x0) / g.delta);
    int iy = static_cast<int>((y - g.y0) / g.delta);
    return map.sigma[g.flatten(ix, iy)];
  };
  REQUIRE(at(0.0, -0.020) == kMetalSigma);   // bottom wall
  REQUIRE(at(-0.035, 0.0) == kMetalSigma);   // left wall
  REQUIRE(at(0.035, 0.0) == kMetalSigma);    // right wall
  REQUIRE(at(0.0, 0.0) == 0.0);              // slot interior
  REQUIRE(at(0.0, 0.020) == 0.0);            // slot opening
}

TEST_CASE("rasterized area converges to the analytic area") {
  const double r = 0.015;
  const double area_true = constants::pi * r * r;
  double prev_err = 0.0;
  for (int level = 0; level < 2; ++level) {
    double d = 0.0025 / (1 << level);
    int n = static_cast<int>(std::round(0.08 / d));
    Grid2D g(-0.04, -0.04, d, n, n);
    SceneSpec spec;
    spec.shapes.push_back(make_circle({0, 0}, r, Material{2.0, 0.0}));
    auto map = rasterize_scene(spec, g);
    int flagged = 0;
    for (int i = 0; i < g.size(); ++i)
      if (map.eps_r[i] > 1.0) ++flagged;
    double err = std::abs(flagged * d * d - area_true);
    if (level == 1) REQUIRE(err <= prev_err / 1.9);  // error halves or better
    prev_err = err;
  }
}

TEST_CASE("supersampled rasterization produces boundary mixtures") {
  Grid2D g(-0.02, -0.02, 0.0025, 16, 16);
  SceneSpec spec;
  spec.shapes.push_back(make_circle({0, 0}, 0.01, Material{3.0, 0.0}));
  auto aa = rasterize_scene(spec, g, 8);
  bool has_mixture = false;
  for (int n = 0; n < g.size(); ++n)
    if (aa.eps_r[n] > 1.0 + 1e-9 && aa.eps_r[n] < 3.0 - 1e-9) has_mixture = true;
  REQUIRE(has_mixture);
  // interior cells are pure target material
  REQUIRE(aa.eps_r[g.flatten(8, 8)] == Catch::Approx(3.0));
}
