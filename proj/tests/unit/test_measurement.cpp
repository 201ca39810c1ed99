// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "gmmv/measurement.hpp"

using namespace gmmv;

static MeasurementConfig reference_arc() {
  RingSpec src{0.72, 0.0, 10.0, 36};
  RingSpec rx{0.76, 0.0, 5.0, 72};
  return make_rotating_arc_config(src, rx, 60.0, 300.0, 5.0);
}

TEST_CASE("rotating arc activates 49 of 72 slots per source") {
  auto cfg = reference_arc();
  REQUIRE(cfg.num_sources() == 36);
  REQUIRE(cfg.catalog_size() == 72);
  for (int p = 0; p < 36; ++p) REQUIRE(cfg.num_active(p) == 49);
  cfg.check_consistent();
  // active slots of source 0 span 60..300 degrees
  std::set<int> s0(cfg.active[0].begin(), cfg.active[0].end());
  REQUIRE(s0.count(12));   // 60 deg
  REQUIRE(s0.count(60));   // 300 deg
  REQUIRE_FALSE(s0.count(0));  // emitter azimuth is never measured
}

TEST_CASE("every-kth split: 9 CV + 40 RECON per source") {
  auto cfg = split_cv(reference_arc(), 9, CvStrategy::EveryKth);
  for (int p = 0; p < cfg.num_sources(); ++p) {
    REQUIRE(cfg.num_cv(p) == 9);
    REQUIRE(cfg.num_recon(p) == 40);
  }
  // the chosen relative indices are floor(j*Q/Q_cv)
  std::vector<int> expect;
  for (int j = 0; j < 9; ++j) expect.push_back(j * 49 / 9);
  for (int j = 0; j < 9; ++j) REQUIRE(cfg.roles[0][expect[j]] == RxRole::Cv);
}

TEST_CASE("split partition: RECON and CV are disjoint and cover all receivers") {
  auto cfg = split_cv(reference_arc(), 9, CvStrategy::EveryKth);
  for (int p = 0; p < cfg.num_sources(); ++p) {
    REQUIRE(cfg.num_cv(p) + cfg.num_recon(p) == cfg.num_active(p));
  }
}

TEST_CASE("oversized or empty CV request is rejected") {
  auto cfg = reference_arc();
  REQUIRE_THROWS_AS(split_cv(cfg, 49, CvStrategy::EveryKth), Error);
  REQUIRE_THROWS_AS(split_cv(cfg, 60, CvStrategy::EveryKth), Error);
  REQUIRE_THROWS_AS(split_cv(cfg, 0, CvStrategy::EveryKth), Error);
  try {
    split_cv(cfg, 49, CvStrategy::EveryKth);
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::CvTooLarge);
  }
}

TEST_CASE("random split is deterministic per seed") {
  auto a = split_cv(reference_arc(), 9, CvStrategy::Random, 42);
  auto b = split_cv(reference_arc(), 9, CvStrategy::Random, 42);
  auto c = split_cv(reference_arc(), 9, CvStrategy::Random, 43);
  REQUIRE(a.roles == b.roles);
  REQUIRE(a.roles != c.roles);
  for (int p = 0; p < a.num_sources(); ++p) REQUIRE(a.num_cv(p) == 9);
}

TEST_CASE("geometry validation rejects antennas inside the grid") {
  auto cfg = reference_arc();
  Grid2D grid(-0.075, -0.075, 0.0025, 60, 60);
  cfg.validate_against_grid(grid);  // antennas at 0.72 m: fine
  cfg.sources[0] = {0.0, 0.0};
  REQUIRE_THROWS_AS(cfg.validate_against_grid(grid), Error);
}

TEST_CASE("second-opus style arc lands on the 1-degree catalog") {
  RingSpec src{1.67, 0.0, 45.0, 8};
  RingSpec rx{1.67, 0.0, 1.0, 360};
  auto cfg = make_rotating_arc_config(src, rx, 60.0, 300.0, 1.0);
  REQUIRE(cfg.catalog_size() == 360);
  for (int p = 0; p < 8; ++p) REQUIRE(cfg.num_active(p) == 241);
}
