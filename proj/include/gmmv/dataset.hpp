// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"
#include "gmmv/measurement.hpp"

namespace gmmv {

/// Stacked scattered-field measurements. Column (p, i) of the logical data
/// matrix Y is stored in data[i].col(p), a catalog-length vector with zeros at
/// receiver slots source p never measures. Masks and roles live in `config`,
/// making the dataset self-describing.
struct ScatterDataset {
  FrequencySet freqs;
  MeasurementConfig config;
  std::vector<CMat> data;  // per frequency: catalog_size x P, holes are zero

  double noise_frob = 0.0;  // recorded ||U||_F of injected noise
  double snr_db = std::numeric_limits<double>::infinity();

  int num_freqs() const { return static_cast<int>(data.size()); }
  int num_sources() const { return config.num_sources(); }
  int num_columns() const { return num_freqs() * num_sources(); }

  /// Active measurement values of column (p, i) in active-list order.
  CVec column(int p, int i) const {
    const auto& act = config.active[p];
    CVec y(act.size());
    for (std::size_t j = 0; j < act.size(); ++j) y[j] = data[i](act[j], p);
    return y;
  }

  double frob_norm() const {
    double s = 0.0;
    for (const auto& m : data) s += m.squaredNorm();
    return std::sqrt(s);
  }

  /// Frobenius norm over one row class only.
  double frob_norm(RxRole role) const {
    double s = 0.0;
    for (int i = 0; i < num_freqs(); ++i)
      for (int p = 0; p < num_sources(); ++p)
        for (std::size_t j = 0; j < config.active[p].size(); ++j)
          if (config.roles[p][j] == role) s += std::norm(data[i](config.active[p][j], p));
    return std::sqrt(s);
  }

  void check_consistent() const {
    config.check_consistent();
    if (static_cast<int>(data.size()) != freqs.count())
      throw Error(ErrorCode::DimMismatch, "data blocks do not match frequency count");
    for (const auto& m : data)
      if (m.rows() != config.catalog_size() || m.cols() != config.num_sources())
        throw Error(ErrorCode::DimMismatch, "data block has wrong shape");
  }
};

namespace detail {

/// Deterministic standard normal pairs: splitmix64-seeded xorshift-free
/// mt19937_64 stream plus Box-Muller, so serialized noise is reproducible
/// independent of the standard library's distribution internals.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * constants::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  std::uint64_t next() {
    // splitmix64
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Circularly-symmetric complex Gaussian noise on the measured entries, sized
/// so that E||U||_F / ||Y||_F = 10^(-snr_db/20). Deterministic per seed.
inline ScatterDataset add_noise(const ScatterDataset& ds, double snr_db, std::uint64_t seed) {
  ScatterDataset out = ds;
  if (std::isinf(snr_db)) {
    out.snr_db = snr_db;
    out.noise_frob = 0.0;
    return out;
  }
  if (!std::isfinite(snr_db)) throw Error(ErrorCode::BadUnits, "snr_db must be finite or inf");
  std::int64_t n_entries = 0;
  for (int p = 0; p < ds.num_sources(); ++p) n_entries += ds.config.num_active(p);
  n_entries *= ds.num_freqs();
  const double y2 = ds.frob_norm() * ds.frob_norm();
  const double var = y2 * std::pow(10.0, -snr_db / 10.0) / static_cast<double>(n_entries);
  const double s = std::sqrt(var / 2.0);
  detail::GaussianRng rng(seed);
  double u2 = 0.0;
  for (int i = 0; i < ds.num_freqs(); ++i) {
    for (int p = 0; p < ds.num_sources(); ++p) {
      for (int q : ds.config.active[p]) {
        cplx u(s * rng.normal(), s * rng.normal());
        out.data[i](q, p) += u;
        u2 += std::norm(u);
      }
    }
  }
  out.noise_frob = std::sqrt(u2);
  out.snr_db = snr_db;
  return out;
}

/// Line-oriented ASCII dataset format, version GMMVDS/1. '#' starts a comment.
/// The header carries geometry, masks, roles, and noise metadata; records are
/// "R freq_index src_index rx_index Re Im" for every measured triple.
inline void write_dataset(const ScatterDataset& ds, std::ostream& os) {
  ds.check_consistent();
  os << "GMMVDS/1\n";
  os << "# scattered-field dataset; lengths in meters, frequencies in Hz\n";
  os << "P " << ds.num_sources() << "\n";
  os << "Q " << ds.config.catalog_size() << "\n";
  os << "I " << ds.num_freqs() << "\n";
  for (int i = 0; i < ds.num_freqs(); ++i)
    os << "FREQ " << i << " " << detail::fmt_double(ds.freqs.f[i]) << "\n";
  os << "EPSBG " << detail::fmt_double(ds.freqs.eps_bg_rel) << "\n";
  for (int p = 0; p < ds.num_sources(); ++p)
    os << "SRC " << p << " " << detail::fmt_double(ds.config.sources[p].x) << " "
       << detail::fmt_double(ds.config.sources[p].y) << "\n";
  for (int q = 0; q < ds.config.catalog_size(); ++q)
    os << "RX " << q << " " << detail::fmt_double(ds.config.receivers[q].x) << " "
       << detail::fmt_double(ds.config.receivers[q].y) << "\n";
  if (ds.config.receiver_ring) {
    const auto& r = *ds.config.receiver_ring;
    os << "RING " << detail::fmt_double(r.radius) << " " << detail::fmt_double(r.start_deg)
       << " " << detail::fmt_double(r.step_deg) << " " << r.count << "\n";
  }
  for (int p = 0; p < ds.num_sources(); ++p) {
    os << "ACTIVE " << p;
    for (int q : ds.config.active[p]) os << " " << q;
    os << "\n";
    os << "ROLES " << p;
    for (RxRole r : ds.config.roles[p]) os << " " << (r == RxRole::Cv ? 1 : 0);
    os << "\n";
  }
  os << "NOISE " << detail::fmt_double(ds.noise_frob) << " "
     << (std::isinf(ds.snr_db) ? std::string("inf") : detail::fmt_double(ds.snr_db)) << "\n";
  std::int64_t count = 0;
  for (int p = 0; p < ds.num_sources(); ++p) count += ds.config.num_active(p);
  count *= ds.num_freqs();
  os << "RECORDS " << count << "\n";
  for (int i = 0; i < ds.num_freqs(); ++i)
    for (int p = 0; p < ds.num_sources(); ++p)
      for (int q : ds.config.active[p]) {
        cplx v = ds.data[i](q, p);
        os << "R " << i << " " << p << " " << q << " " << detail::fmt_double(v.real()) << " "
           << detail::fmt_double(v.imag()) << "\n";
      }
  os << "END\n";
}

inline void write_dataset(const ScatterDataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_dataset(ds, f);
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline ScatterDataset read_dataset(std::istream& is) {
  std::string line;
  auto next_line = [&](bool required) -> bool {
    while (std::getline(is, line)) {
      std::size_t h = line.find('#');
      if (h != std::string::npos) line.erase(h);
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) return true;
    }
    if (required) throw Error(ErrorCode::CorruptRecord, "unexpected end of file");
    return false;
  };
  next_line(true);
  if (line != "GMMVDS/1")
    throw Error(ErrorCode::VersionMismatch, "expected GMMVDS/1, got '" + line + "'");

  ScatterDataset ds;
  int P = -1, Q = -1, I = -1;
  std::vector<double> freqs;
  double eps_bg = 1.0;
  std::int64_t n_records = -1;
  bool saw_end = false;
  std::set<std::int64_t> seen;
  std::int64_t got_records = 0;

  while (next_line(false)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    auto need = [&](bool ok, const char* what) {
      if (!ok) throw Error(ErrorCode::CorruptRecord, std::string("bad ") + what + ": " + line);
    };
    if (tag == "P") {
      need(static_cast<bool>(ss >> P) && P > 0, "P");
    } else if (tag == "Q") {
      need(static_cast<bool>(ss >> Q) && Q > 0, "Q");
      ds.config.receivers.assign(Q, Vec2{});
    } else if (tag == "I") {
      need(static_cast<bool>(ss >> I) && I > 0, "I");
      freqs.assign(I, 0.0);
    } else if (tag == "FREQ") {
      int i;
      double f;
      need(static_cast<bool>(ss >> i >> f) && i >= 0 && i < I, "FREQ");
      freqs[i] = f;
    } else if (tag == "EPSBG") {
      need(static_cast<bool>(ss >> eps_bg), "EPSBG");
    } else if (tag == "SRC") {
      int p;
      double x, y;
      need(static_cast<bool>(ss >> p >> x >> y) && p >= 0, "SRC");
      if (static_cast<int>(ds.config.sources.size()) <= p) ds.config.sources.resize(p + 1);
      ds.config.sources[p] = {x, y};
    } else if (tag == "RX") {
      int q;
      double x, y;
      need(static_cast<bool>(ss >> q >> x >> y) && q >= 0 && q < Q, "RX");
      ds.config.receivers[q] = {x, y};
    } else if (tag == "RING") {
      RingSpec r;
      need(static_cast<bool>(ss >> r.radius >> r.start_deg >> r.step_deg >> r.count), "RING");
      ds.config.receiver_ring = r;
    } else if (tag == "ACTIVE") {
      int p;
      need(static_cast<bool>(ss >> p) && p >= 0, "ACTIVE");
      if (static_cast<int>(ds.config.active.size()) <= p) ds.config.active.resize(p + 1);
      std::vector<int> act;
      int q;
      while (ss >> q) act.push_back(q);
      ds.config.active[p] = std::move(act);
    } else if (tag == "ROLES") {
      int p;
      need(static_cast<bool>(ss >> p) && p >= 0, "ROLES");
      if (static_cast<int>(ds.config.roles.size()) <= p) ds.config.roles.resize(p + 1);
      std::vector<RxRole> roles;
      int r;
      while (ss >> r) roles.push_back(r ? RxRole::Cv : RxRole::Recon);
      ds.config.roles[p] = std::move(roles);
    } else if (tag == "NOISE") {
      std::string snr;
      need(static_cast<bool>(ss >> ds.noise_frob >> snr), "NOISE");
      ds.snr_db = (snr == "inf") ? std::numeric_limits<double>::infinity() : std::stod(snr);
    } else if (tag == "RECORDS") {
      need(static_cast<bool>(ss >> n_records) && n_records >= 0, "RECORDS");
      if (P <= 0 || Q <= 0 || I <= 0)
        throw Error(ErrorCode::CorruptRecord, "RECORDS before header dimensions");
      ds.data.assign(I, CMat::Zero(Q, P));
    } else if (tag == "R") {
      int i, p, q;
      double re, im;
      need(static_cast<bool>(ss >> i >> p >> q >> re >> im), "record");
      need(i >= 0 && i < I && p >= 0 && p < P && q >= 0 && q < Q, "record index");
      std::int64_t key = (static_cast<std::int64_t>(i) * P + p) * Q + q;
      if (!seen.insert(key).second)
        throw Error(ErrorCode::DuplicateTriple, "duplicate (freq, src, rx) record");
      ds.data[i](q, p) = cplx(re, im);
      ++got_records;
    } else if (tag == "END") {
      saw_end = true;
      break;
    } else {
      throw Error(ErrorCode::CorruptRecord, "unknown tag '" + tag + "'");
    }
  }
  if (!saw_end) throw Error(ErrorCode::CorruptRecord, "missing END marker (truncated file)");
  if (n_records < 0 || got_records != n_records)
    throw Error(ErrorCode::CorruptRecord, "record count mismatch");
  ds.freqs = FrequencySet(freqs, eps_bg);
  ds.check_consistent();
  std::int64_t expect = 0;
  for (int p = 0; p < ds.num_sources(); ++p) expect += ds.config.num_active(p);
  expect *= ds.num_freqs();
  if (expect != n_records)
    throw Error(ErrorCode::CorruptRecord, "records do not cover every unmasked triple");
  return ds;
}

inline ScatterDataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_dataset(f);
}

}  // namespace gmmv
