// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"

namespace gmmv {

enum class RxRole : std::uint8_t { Recon = 0, Cv = 1 };

enum class CvStrategy { EveryKth, Random };

/// Circular antenna ring, counter-clockwise from start_deg in steps of step_deg.
struct RingSpec {
  double radius = 0.0;   // [m]
  double start_deg = 0.0;
  double step_deg = 0.0;
  int count = 0;

  Vec2 position(int i) const {
    double a = (start_deg + i * step_deg) * constants::pi / 180.0;
    return {radius * std::cos(a), radius * std::sin(a)};
  }
};

/// Sources, a receiver catalog, per-source active-receiver masks (rotating-arm
/// setups measure only an arc behind each emitter), and the CV split labeling
/// each active (source, receiver) slot RECON or CV.
struct MeasurementConfig {
  std::vector<Vec2> sources;
  std::vector<Vec2> receivers;  // catalog of all receiver slots
  std::optional<RingSpec> receiver_ring;  // set when the catalog came from a ring

  std::vector<std::vector<int>> active;   // per source: ordered catalog indices
  std::vector<std::vector<RxRole>> roles; // parallel to active

  int num_sources() const { return static_cast<int>(sources.size()); }
  int catalog_size() const { return static_cast<int>(receivers.size()); }

  int num_active(int p) const { return static_cast<int>(active[p].size()); }
  int num_cv(int p) const {
    int c = 0;
    for (RxRole r : roles[p])
      if (r == RxRole::Cv) ++c;
    return c;
  }
  int num_recon(int p) const { return num_active(p) - num_cv(p); }

  bool has_cv() const {
    for (int p = 0; p < num_sources(); ++p)
      if (num_cv(p) > 0) return true;
    return false;
  }

  void validate_against_grid(const Grid2D& grid) const {
    for (const auto& s : sources)
      if (grid.contains(s))
        throw Error(ErrorCode::GeometryViolation, "source lies inside the inversion grid");
    for (const auto& r : receivers)
      if (grid.contains(r))
        throw Error(ErrorCode::GeometryViolation, "receiver lies inside the inversion grid");
  }

  void check_consistent() const {
    if (sources.empty()) throw Error(ErrorCode::MissingField, "no sources");
    if (receivers.empty()) throw Error(ErrorCode::MissingField, "no receivers");
    if (active.size() != sources.size() || roles.size() != sources.size())
      throw Error(ErrorCode::DimMismatch, "mask/role arrays do not match source count");
    for (std::size_t p = 0; p < sources.size(); ++p) {
      if (active[p].empty())
        throw Error(ErrorCode::GeometryViolation, "a source has no active receivers");
      if (active[p].size() != roles[p].size())
        throw Error(ErrorCode::DimMismatch, "roles do not match active receivers");
      int n_recon = 0;
      for (std::size_t j = 0; j < active[p].size(); ++j) {
        int q = active[p][j];
        if (q < 0 || q >= catalog_size())
          throw Error(ErrorCode::DimMismatch, "active receiver index out of range");
        if (roles[p][j] == RxRole::Recon) ++n_recon;
      }
      if (n_recon == 0)
        throw Error(ErrorCode::CvTooLarge, "a source has no RECON receivers left");
    }
  }
};

/// Builds the rotating-arm configuration: sources on a ring, receivers on a
/// catalog ring, and per source the arc [arc_start, arc_stop] relative to the
/// source azimuth active. All slots start as RECON.
inline MeasurementConfig make_rotating_arc_config(const RingSpec& src_ring,
                                                  const RingSpec& rx_ring,
                                                  double arc_start_deg, double arc_stop_deg,
                                                  double arc_step_deg) {
  MeasurementConfig cfg;
  for (int p = 0; p < src_ring.count; ++p) cfg.sources.push_back(src_ring.position(p));
  for (int q = 0; q < rx_ring.count; ++q) cfg.receivers.push_back(rx_ring.position(q));
  cfg.receiver_ring = rx_ring;
  int n_arc = static_cast<int>(std::lround((arc_stop_deg - arc_start_deg) / arc_step_deg)) + 1;
  for (int p = 0; p < src_ring.count; ++p) {
    double src_ang = src_ring.start_deg + p * src_ring.step_deg;
    std::vector<int> act;
    for (int j = 0; j < n_arc; ++j) {
      double ang = src_ang + arc_start_deg + j * arc_step_deg;
      double slot_f = (ang - rx_ring.start_deg) / rx_ring.step_deg;
      int slot = static_cast<int>(std::lround(slot_f));
      if (std::abs(slot_f - slot) > 1e-9)
        throw Error(ErrorCode::GeometryViolation,
                    "arc angles do not land on receiver catalog slots");
      slot = ((slot % rx_ring.count) + rx_ring.count) % rx_ring.count;
      act.push_back(slot);
    }
    cfg.active.push_back(act);
    cfg.roles.emplace_back(act.size(), RxRole::Recon);
  }
  return cfg;
}

/// Full-coverage configuration: every source sees the whole catalog.
inline MeasurementConfig make_full_ring_config(const RingSpec& src_ring,
                                               const RingSpec& rx_ring) {
  MeasurementConfig cfg;
  for (int p = 0; p < src_ring.count; ++p) cfg.sources.push_back(src_ring.position(p));
  for (int q = 0; q < rx_ring.count; ++q) cfg.receivers.push_back(rx_ring.position(q));
  cfg.receiver_ring = rx_ring;
  std::vector<int> all(rx_ring.count);
  for (int q = 0; q < rx_ring.count; ++q) all[q] = q;
  cfg.active.assign(src_ring.count, all);
  cfg.roles.assign(src_ring.count, std::vector<RxRole>(rx_ring.count, RxRole::Recon));
  return cfg;
}

namespace detail {
inline std::vector<int> pick_cv_indices(int q, int q_cv, CvStrategy strategy,
                                        std::uint64_t seed) {
  std::vector<int> idx;
  if (strategy == CvStrategy::EveryKth) {
    for (int j = 0; j < q_cv; ++j)
      idx.push_back(static_cast<int>(static_cast<std::int64_t>(j) * q / q_cv));
  } else {
    // Fisher-Yates prefix over a splitmix64-seeded LCG-free generator.
    std::vector<int> pool(q);
    for (int i = 0; i < q; ++i) pool[i] = i;
    std::uint64_t s = seed;
    auto next = [&s]() {
      s += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = s;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
    for (int j = 0; j < q_cv; ++j) {
      int r = j + static_cast<int>(next() % static_cast<std::uint64_t>(q - j));
      std::swap(pool[j], pool[r]);
      idx.push_back(pool[j]);
    }
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}
}  // namespace detail

/// Labels q_cv receivers of every source CV (the rest RECON). The split is on
/// the per-source active list, so each source withholds the same number of
/// slots regardless of its arc position.
inline MeasurementConfig split_cv(const MeasurementConfig& in, int q_cv, CvStrategy strategy,
                                  std::uint64_t seed = 0) {
  MeasurementConfig cfg = in;
  for (int p = 0; p < cfg.num_sources(); ++p) {
    int q = cfg.num_active(p);
    if (q_cv <= 0 || q_cv >= q)
      throw Error(ErrorCode::CvTooLarge, "CV count must satisfy 0 < Q_CV < Q");
    auto cv_idx = detail::pick_cv_indices(q, q_cv, strategy, seed + p);
    std::fill(cfg.roles[p].begin(), cfg.roles[p].end(), RxRole::Recon);
    for (int j : cv_idx) cfg.roles[p][j] = RxRole::Cv;
  }
  return cfg;
}

}  // namespace gmmv
