// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gmmv/config.hpp"

namespace gmmv {

/// Named measurement scenarios mirroring the reference experimental setups:
/// grid bounds, frequency sets, antenna rings, and target geometries. Targets
/// are synthetic stand-ins with nominal materials; metals use the lossy
/// metallic approximation.
inline std::vector<std::string> preset_names() {
  return {"two-cylinders", "foam-die-int", "rect-metal", "u-shape", "foam-met-ext"};
}

inline ExperimentConfig make_preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;

  auto first_opus_measurement = [] {
    // emitter ring 720 mm in 10 deg steps; receiver arm 760 mm sweeping
    // 60..300 deg behind the emitter in 5 deg steps (49 active of 72 slots)
    RingSpec src{0.72, 0.0, 10.0, 36};
    RingSpec rx{0.76, 0.0, 5.0, 72};
    return make_rotating_arc_config(src, rx, 60.0, 300.0, 5.0);
  };
  auto second_opus_measurement = [](int num_src) {
    // 1.67 m rings, receiver arm 60..300 deg in 1 deg steps (241 of 360)
    RingSpec src{1.67, 0.0, 360.0 / num_src, num_src};
    RingSpec rx{1.67, 0.0, 1.0, 360};
    return make_rotating_arc_config(src, rx, 60.0, 300.0, 1.0);
  };

  if (name == "two-cylinders") {
    cfg.grid = Grid2D(-0.075, -0.075, 0.0025, 60, 60);
    cfg.freqs = FrequencySet({2e9, 4e9, 6e9, 8e9});
    cfg.measurement = split_cv(first_opus_measurement(), 9, CvStrategy::EveryKth);
    cfg.cv_count = 9;
    Material diel{3.0, 0.0};
    cfg.scene.shapes.push_back(make_circle({-0.045, 0.0}, 0.015, diel));
    cfg.scene.shapes.push_back(make_circle({0.045, 0.0}, 0.015, diel));
  } else if (name == "rect-metal") {
    cfg.grid = Grid2D(-0.025, 0.015, 0.0013, 39, 39);
    cfg.freqs = FrequencySet({10e9, 12e9, 14e9, 16e9});
    cfg.measurement = split_cv(first_opus_measurement(), 9, CvStrategy::EveryKth);
    cfg.cv_count = 9;
    cfg.scene.shapes.push_back(
        make_rectangle({0.0, 0.0403}, 0.0245, 0.0127, 0.0, Material::metal()));
  } else if (name == "u-shape") {
    cfg.grid = Grid2D(-0.070, -0.070, 0.0013, 108, 108);
    cfg.freqs = FrequencySet({4e9, 8e9, 12e9, 16e9});
    cfg.measurement = split_cv(first_opus_measurement(), 9, CvStrategy::EveryKth);
    cfg.cv_count = 9;
    cfg.scene.shapes.push_back(
        make_uprofile({0.0, 0.0}, 0.080, 0.050, 0.060, 0.040, 0.0, Material::metal()));
  } else if (name == "foam-die-int") {
    cfg.grid = Grid2D(-0.060, -0.060, 0.0025, 48, 48);
    cfg.freqs = FrequencySet({2e9, 4e9, 6e9, 8e9, 10e9});
    cfg.measurement = split_cv(second_opus_measurement(8), 36, CvStrategy::EveryKth);
    cfg.cv_count = 36;
    cfg.scene.shapes.push_back(make_circle({0.0, 0.0}, 0.040, Material{1.45, 0.0}));
    cfg.scene.shapes.push_back(make_circle({-0.015, 0.0}, 0.015, Material{3.0, 0.0}));
  } else if (name == "foam-met-ext") {
    cfg.grid = Grid2D(-0.090, -0.075, 0.0025, 60, 60);
    cfg.freqs = FrequencySet({2e9, 3e9, 4e9, 5e9, 6e9, 7e9, 8e9});
    cfg.measurement = split_cv(second_opus_measurement(18), 36, CvStrategy::EveryKth);
    cfg.cv_count = 36;
    // foam cylinder with a copper tube attached outside it
    cfg.scene.shapes.push_back(make_circle({0.0, 0.0}, 0.040, Material{1.45, 0.0}));
    cfg.scene.shapes.push_back(make_circle({-0.05425, 0.0}, 0.01425, Material::metal()));
    cfg.scene.shapes.push_back(make_circle({-0.05425, 0.0}, 0.01225, Material{1.0, 0.0}));
  } else {
    throw Error(ErrorCode::MissingField, "unknown preset '" + name + "'");
  }
  return cfg;
}

}  // namespace gmmv
