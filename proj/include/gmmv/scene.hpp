// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"

namespace gmmv {

/// Metallic targets are modeled as a strongly lossy dielectric; the skin depth
/// at the frequencies of interest is far below one cell.
inline constexpr double kMetalSigma = 1.0e4;  // [S/m]

struct Material {
  double eps_r = 1.0;
  double sigma = 0.0;

  static Material metal() { return {1.0, kMetalSigma}; }
};

struct Shape {
  enum class Kind { Circle, Rectangle, UProfile };

  Kind kind = Kind::Circle;
  Vec2 center;
  // Circle
  double radius = 0.0;
  // Rectangle / UProfile outer box
  double width = 0.0;
  double height = 0.0;
  double rotation_deg = 0.0;
  // UProfile slot, cut into the +y side of the outer box (before rotation)
  double slot_width = 0.0;
  double slot_depth = 0.0;

  Material material;

  bool contains(const Vec2& p) const {
    double dx = p.x - center.x;
    double dy = p.y - center.y;
    if (kind == Kind::Circle) return dx * dx + dy * dy <= radius * radius;
    double a = -rotation_deg * constants::pi / 180.0;
    double lx = dx * std::cos(a) - dy * std::sin(a);
    double ly = dx * std::sin(a) + dy * std::cos(a);
    bool in_box = std::abs(lx) <= width / 2 && std::abs(ly) <= height / 2;
    if (kind == Kind::Rectangle) return in_box;
    bool in_slot = std::abs(lx) <= slot_width / 2 && ly >= height / 2 - slot_depth;
    return in_box && !in_slot;
  }

  /// Axis-aligned bounding box (loose for rotated shapes).
  void bbox(double& xmin, double& xmax, double& ymin, double& ymax) const {
    double r = (kind == Kind::Circle) ? radius : 0.5 * std::hypot(width, height);
    xmin = center.x - r;
    xmax = center.x + r;
    ymin = center.y - r;
    ymax = center.y + r;
  }
};

struct SceneSpec {
  std::vector<Shape> shapes;
};

inline Shape make_circle(Vec2 c, double r, Material m) {
  Shape s;
  s.kind = Shape::Kind::Circle;
  s.center = c;
  s.radius = r;
  s.material = m;
  return s;
}

inline Shape make_rectangle(Vec2 c, double w, double h, double rot_deg, Material m) {
  Shape s;
  s.kind = Shape::Kind::Rectangle;
  s.center = c;
  s.width = w;
  s.height = h;
  s.rotation_deg = rot_deg;
  s.material = m;
  return s;
}

inline Shape make_uprofile(Vec2 c, double w, double h, double slot_w, double slot_d,
                           double rot_deg, Material m) {
  Shape s;
  s.kind = Shape::Kind::UProfile;
  s.center = c;
  s.width = w;
  s.height = h;
  s.slot_width = slot_w;
  s.slot_depth = slot_d;
  s.rotation_deg = rot_deg;
  s.material = m;
  return s;
}

/// Paints shapes onto the grid in order; later shapes overwrite earlier ones.
/// With supersample == 1 a cell takes a shape's material iff its center lies
/// inside the shape. With supersample > 1 the cell material is the area
/// average over supersample^2 sub-points, which the forward simulation uses to
/// keep staircasing error below the validation tolerances.
inline ContrastMap rasterize_scene(const SceneSpec& spec, const Grid2D& grid,
                                   int supersample = 1, Material base = {}) {
  for (const auto& sh : spec.shapes) {
    double xmin, xmax, ymin, ymax;
    sh.bbox(xmin, xmax, ymin, ymax);
    if (xmin < grid.x0 - 1e-12 || xmax > grid.x_max() + 1e-12 || ymin < grid.y0 - 1e-12 ||
        ymax > grid.y_max() + 1e-12) {
      throw Error(ErrorCode::ShapeOutOfGrid, "shape extends outside the grid");
    }
  }
  ContrastMap map(grid);
  map.eps_r.setConstant(base.eps_r);
  map.sigma.setConstant(base.sigma);
  const int ss = std::max(1, supersample);
  for (int n = 0; n < grid.size(); ++n) {
    auto [ix, iy] = grid.unflatten(n);
    if (ss == 1) {
      Vec2 c = grid.center(n);
      for (const auto& sh : spec.shapes) {
        if (sh.contains(c)) {
          map.eps_r[n] = sh.material.eps_r;
          map.sigma[n] = sh.material.sigma;
        }
      }
      continue;
    }
    double er = 0.0, sg = 0.0;
    for (int sy = 0; sy < ss; ++sy) {
      for (int sx = 0; sx < ss; ++sx) {
        Vec2 p{grid.x0 + (ix + (sx + 0.5) / ss) * grid.delta,
               grid.y0 + (iy + (sy + 0.5) / ss) * grid.delta};
        double per = base.eps_r, psg = base.sigma;
        for (const auto& sh : spec.shapes) {
          if (sh.contains(p)) {
            per = sh.material.eps_r;
            psg = sh.material.sigma;
          }
        }
        er += per;
        sg += psg;
      }
    }
    map.eps_r[n] = er / (ss * ss);
    map.sigma[n] = sg / (ss * ss);
  }
  return map;
}

}  // namespace gmmv
