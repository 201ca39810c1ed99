// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"
#include "gmmv/measurement.hpp"
#include "gmmv/scene.hpp"
#include "gmmv/spgl1.hpp"

namespace gmmv {

/// Everything one experiment needs: grid, background, frequencies, measurement
/// geometry, scene, and solver options.
struct ExperimentConfig {
  std::string name;
  Grid2D grid;
  BackgroundModel background;
  FrequencySet freqs;
  MeasurementConfig measurement;
  SceneSpec scene;
  SolverOptions solver;
  int cv_count = 0;  // CV receivers per source requested by the config
};

namespace detail {

using json = nlohmann::json;

class ConfigErrors {
 public:
  void add(const std::string& msg) { msgs_.push_back(msg); }
  bool empty() const { return msgs_.empty(); }
  /// All violations are reported together, not just the first.
  [[noreturn]] void raise(ErrorCode code) const {
    std::string all;
    for (std::size_t i = 0; i < msgs_.size(); ++i) {
      if (i) all += "; ";
      all += msgs_[i];
    }
    throw Error(code, all);
  }
  void raise_if_any(ErrorCode code) const {
    if (!empty()) raise(code);
  }

 private:
  std::vector<std::string> msgs_;
};

inline RingSpec parse_ring(const json& j) {
  RingSpec r;
  r.radius = j.at("radius").get<double>();
  r.start_deg = j.value("start_deg", 0.0);
  r.step_deg = j.at("step_deg").get<double>();
  r.count = j.at("count").get<int>();
  return r;
}

inline Material parse_material(const json& j) {
  if (j.value("pec", false)) return Material::metal();
  Material m;
  m.eps_r = j.value("eps_r", 1.0);
  m.sigma = j.value("sigma", 0.0);
  return m;
}

inline Shape parse_shape(const json& j) {
  std::string type = j.at("type").get<std::string>();
  Material m = parse_material(j);
  Vec2 c{j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
  if (type == "circle") return make_circle(c, j.at("radius").get<double>(), m);
  if (type == "rectangle")
    return make_rectangle(c, j.at("width").get<double>(), j.at("height").get<double>(),
                          j.value("rotation_deg", 0.0), m);
  if (type == "u_profile")
    return make_uprofile(c, j.at("width").get<double>(), j.at("height").get<double>(),
                         j.at("slot_width").get<double>(), j.at("slot_depth").get<double>(),
                         j.value("rotation_deg", 0.0), m);
  throw Error(ErrorCode::MissingField, "unknown shape type '" + type + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j, const std::string& name_hint = "") {
  using detail::ConfigErrors;
  ConfigErrors missing;
  for (const char* sec : {"grid", "frequencies", "sources", "receivers"})
    if (!j.contains(sec)) missing.add(std::string("missing section '") + sec + "'");
  missing.raise_if_any(ErrorCode::MissingField);

  ExperimentConfig cfg;
  cfg.name = j.value("name", name_hint);

  ConfigErrors units;
  const auto& jg = j.at("grid");
  double delta = jg.value("delta", 0.0);
  int nx = jg.value("nx", 0), ny = jg.value("ny", 0);
  if (delta <= 0.0) units.add("grid.delta must be positive");
  if (nx < 1 || ny < 1) units.add("grid.nx/ny must be >= 1");

  double eps_bg = 1.0, sigma_bg = 0.0;
  if (j.contains("background")) {
    eps_bg = j.at("background").value("eps_r", 1.0);
    sigma_bg = j.at("background").value("sigma", 0.0);  // omitted -> free space
    if (eps_bg < 1.0) units.add("background.eps_r must be >= 1");
    if (sigma_bg < 0.0) units.add("background.sigma must be >= 0");
  }

  std::vector<double> freqs = j.at("frequencies").get<std::vector<double>>();
  for (double f : freqs)
    if (f <= 0.0) units.add("frequencies must be positive");
  units.raise_if_any(ErrorCode::BadUnits);

  cfg.grid = Grid2D(jg.value("x0", 0.0), jg.value("y0", 0.0), delta, nx, ny);
  cfg.background = BackgroundModel(eps_bg, sigma_bg);
  cfg.freqs = FrequencySet(freqs, eps_bg);

  const auto& js = j.at("sources");
  const auto& jr = j.at("receivers");
  if (js.contains("ring") && jr.contains("ring") && jr.contains("arc")) {
    const auto& arc = jr.at("arc");
    cfg.measurement = make_rotating_arc_config(
        detail::parse_ring(js.at("ring")), detail::parse_ring(jr.at("ring")),
        arc.at("start_deg").get<double>(), arc.at("stop_deg").get<double>(),
        arc.at("step_deg").get<double>());
  } else if (js.contains("ring") && jr.contains("ring")) {
    cfg.measurement =
        make_full_ring_config(detail::parse_ring(js.at("ring")), detail::parse_ring(jr.at("ring")));
  } else if (js.contains("positions") && jr.contains("positions")) {
    MeasurementConfig mc;
    for (const auto& p : js.at("positions"))
      mc.sources.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& p : jr.at("positions"))
      mc.receivers.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    std::vector<int> all(mc.receivers.size());
    for (std::size_t q = 0; q < all.size(); ++q) all[q] = static_cast<int>(q);
    mc.active.assign(mc.sources.size(), all);
    mc.roles.assign(mc.sources.size(), std::vector<RxRole>(all.size(), RxRole::Recon));
    cfg.measurement = mc;
  } else {
    throw Error(ErrorCode::MissingField,
                "sources/receivers need either ring (+arc) or explicit positions");
  }

  if (jr.contains("cv")) {
    const auto& jcv = jr.at("cv");
    cfg.cv_count = jcv.at("count").get<int>();
    CvStrategy strat = CvStrategy::EveryKth;
    if (jcv.value("strategy", "every_kth") == std::string("random")) strat = CvStrategy::Random;
    cfg.measurement =
        split_cv(cfg.measurement, cfg.cv_count, strat, jcv.value("seed", std::uint64_t{0}));
  }

  if (j.contains("scene"))
    for (const auto& sh : j.at("scene")) cfg.scene.shapes.push_back(detail::parse_shape(sh));

  if (j.contains("solver")) {
    const auto& so = j.at("solver");
    cfg.solver.delta_n = so.value("delta_n", cfg.solver.delta_n);
    cfg.solver.max_total_iterations =
        so.value("max_total_iterations", cfg.solver.max_total_iterations);
    cfg.solver.max_inner_per_tau = so.value("max_inner_per_tau", cfg.solver.max_inner_per_tau);
    cfg.solver.inner_tolerance = so.value("inner_tolerance", cfg.solver.inner_tolerance);
    cfg.solver.bp_tolerance = so.value("bp_tolerance", cfg.solver.bp_tolerance);
  }

  // geometry checks, all violations reported together
  detail::ConfigErrors geo;
  for (const auto& s : cfg.measurement.sources)
    if (cfg.grid.contains(s)) geo.add("source inside the inversion grid");
  for (const auto& r : cfg.measurement.receivers)
    if (cfg.grid.contains(r)) geo.add("receiver inside the inversion grid");
  for (const auto& sh : cfg.scene.shapes) {
    double xmin, xmax, ymin, ymax;
    sh.bbox(xmin, xmax, ymin, ymax);
    if (xmin < cfg.grid.x0 || xmax > cfg.grid.x_max() || ymin < cfg.grid.y0 ||
        ymax > cfg.grid.y_max())
      geo.add("scene shape extends outside the grid");
  }
  geo.raise_if_any(ErrorCode::GeometryViolation);

  cfg.measurement.check_consistent();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("config parse error: ") + e.what());
  }
  std::string name = path;
  auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_config(j, name);
}

}  // namespace gmmv
