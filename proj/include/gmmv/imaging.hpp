// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "gmmv/common.hpp"
#include "gmmv/grid.hpp"

namespace gmmv {

enum class ImageProvenance { Gmmv, Lsm, Other };
enum class ImageFormat { CsvGrid, Pgm8, Png };

struct ImageField {
  Grid2D grid;
  RVec values;  // gamma(n) >= 0, or dB values when is_db
  ImageProvenance provenance = ImageProvenance::Other;
  bool is_db = false;

  const char* tag() const {
    switch (provenance) {
      case ImageProvenance::Gmmv: return "GMMV";
      case ImageProvenance::Lsm: return "LSM";
      default: return "FIELD";
    }
  }
};

/// gamma_n = sum_{i,p} |J[n, (p,i)]|^2 — squared row norms of the
/// contrast-source matrix, the support indicator of the joint solve.
inline ImageField gmmv_image(const CMat& J, const Grid2D& grid) {
  if (J.rows() != grid.size())
    throw Error(ErrorCode::DimMismatch, "J rows do not match the grid");
  ImageField img;
  img.grid = grid;
  img.provenance = ImageProvenance::Gmmv;
  img.values = J.rowwise().squaredNorm();
  return img;
}

inline ImageField lsm_image_field(const RVec& gamma, const Grid2D& grid) {
  ImageField img;
  img.grid = grid;
  img.provenance = ImageProvenance::Lsm;
  img.values = gamma;
  return img;
}

/// 10 log10(gamma / max gamma); the peak maps to 0 dB.
inline ImageField to_db(const ImageField& img) {
  double mx = img.values.maxCoeff();
  if (!(mx > 0.0)) throw Error(ErrorCode::AllZeroImage, "dB scaling needs a positive maximum");
  ImageField out = img;
  out.is_db = true;
  for (Eigen::Index n = 0; n < out.values.size(); ++n) {
    double v = img.values[n];
    out.values[n] = v > 0.0 ? 10.0 * std::log10(v / mx) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

/// mask(n) = gamma_dB(n) >= level_db. Default -10 dB for metrics; figures use
/// a -25 dB display floor.
inline std::vector<bool> threshold_support(const ImageField& img_db, double level_db = -10.0) {
  std::vector<bool> mask(img_db.values.size());
  for (Eigen::Index n = 0; n < img_db.values.size(); ++n) mask[n] = img_db.values[n] >= level_db;
  return mask;
}

struct Blob {
  std::vector<int> cells;
  Vec2 centroid;
};

/// 4-connected components of a boolean mask.
inline std::vector<Blob> find_blobs(const std::vector<bool>& mask, const Grid2D& grid) {
  std::vector<Blob> blobs;
  std::vector<int> label(grid.size(), 0);
  for (int seed = 0; seed < grid.size(); ++seed) {
    if (!mask[seed] || label[seed]) continue;
    Blob b;
    std::vector<int> stack{seed};
    label[seed] = 1;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      b.cells.push_back(c);
      auto [cx, cy] = grid.unflatten(c);
      const int dx[4] = {1, -1, 0, 0};
      const int dy[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        int xx = cx + dx[d], yy = cy + dy[d];
        if (xx < 0 || yy < 0 || xx >= grid.nx || yy >= grid.ny) continue;
        int t = grid.flatten(xx, yy);
        if (mask[t] && !label[t]) {
          label[t] = 1;
          stack.push_back(t);
        }
      }
    }
    double sx = 0, sy = 0;
    for (int c : b.cells) {
      Vec2 p = grid.center(c);
      sx += p.x;
      sy += p.y;
    }
    b.centroid = {sx / b.cells.size(), sy / b.cells.size()};
    blobs.push_back(std::move(b));
  }
  return blobs;
}

struct SupportMetrics {
  double jaccard = 0.0;
  std::vector<double> centroid_errors;  // per estimated blob, to nearest truth blob [m]
  double peak_sidelobe_db = -std::numeric_limits<double>::infinity();
  double mean_exterior_db = -std::numeric_limits<double>::infinity();
  int num_blobs = 0;
  int num_truth_blobs = 0;
};

/// Overlap and sidelobe statistics of a support mask against the true target
/// support. Exterior statistics exclude a dilation of the truth by
/// dilate_radius (the resolution allowance, typically lambda_min/2).
inline SupportMetrics support_metrics(const std::vector<bool>& mask, const ContrastMap& truth,
                                      const ImageField& img_db, const BackgroundModel& bg,
                                      double dilate_radius) {
  if (!truth.grid.same_layout(img_db.grid))
    throw Error(ErrorCode::GridMismatch, "truth and image grids differ");
  if (static_cast<int>(mask.size()) != truth.grid.size())
    throw Error(ErrorCode::GridMismatch, "mask size does not match the grid");
  const Grid2D& grid = truth.grid;
  auto tsup = truth.support(bg);
  std::vector<bool> tmask(tsup.begin(), tsup.end());

  SupportMetrics sm;
  int inter = 0, uni = 0;
  for (int n = 0; n < grid.size(); ++n) {
    if (mask[n] && tmask[n]) ++inter;
    if (mask[n] || tmask[n]) ++uni;
  }
  sm.jaccard = uni > 0 ? static_cast<double>(inter) / uni : 1.0;

  auto blobs = find_blobs(mask, grid);
  auto tblobs = find_blobs(tmask, grid);
  sm.num_blobs = static_cast<int>(blobs.size());
  sm.num_truth_blobs = static_cast<int>(tblobs.size());
  for (const auto& b : blobs) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : tblobs) best = std::min(best, distance(b.centroid, t.centroid));
    sm.centroid_errors.push_back(best);
  }

  // dilated truth: any cell within dilate_radius of a truth cell
  std::vector<Vec2> tcells;
  for (int n = 0; n < grid.size(); ++n)
    if (tmask[n]) tcells.push_back(grid.center(n));
  double acc = 0.0;
  int cnt = 0;
  for (int n = 0; n < grid.size(); ++n) {
    Vec2 p = grid.center(n);
    bool exterior = true;
    for (const auto& t : tcells) {
      if (distance(p, t) <= dilate_radius) {
        exterior = false;
        break;
      }
    }
    if (!exterior) continue;
    double v = img_db.values[n];
    if (std::isfinite(v)) {
      sm.peak_sidelobe_db = std::max(sm.peak_sidelobe_db, v);
      acc += v;
      ++cnt;
    }
  }
  if (cnt > 0) sm.mean_exterior_db = acc / cnt;
  return sm;
}

namespace detail {

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline std::vector<unsigned char> quantize_8bit(const ImageField& img, double floor_db) {
  std::vector<unsigned char> px(img.values.size());
  double lo, hi;
  if (img.is_db) {
    lo = floor_db;
    hi = 0.0;
  } else {
    lo = 0.0;
    hi = img.values.maxCoeff();
    if (!(hi > 0.0)) hi = 1.0;
  }
  for (Eigen::Index n = 0; n < img.values.size(); ++n) {
    double v = std::min(hi, std::max(lo, img.values[n]));
    px[n] = static_cast<unsigned char>(std::lround((v - lo) / (hi - lo) * 255.0));
  }
  return px;
}

inline void push_be32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

inline void png_chunk(std::string& out, const char type[4], const std::string& payload) {
  push_be32(out, static_cast<std::uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                    static_cast<uInt>(body.size()));
  push_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// Deterministic image export.
///  - CSV_GRID: two '#' header lines (version; nx ny delta origin tag) then
///    ny rows of nx comma-separated values, row iy = 0 first.
///  - PGM8: binary P5, [floor_db, 0] dB mapped linearly onto [0, 255].
///  - PNG: 8-bit grayscale, same quantization as PGM8.
inline void export_field(const ImageField& img, const std::string& path, ImageFormat fmt,
                         double floor_db = -25.0) {
  const Grid2D& g = img.grid;
  if (fmt == ImageFormat::CsvGrid) {
    std::ostringstream os;
    os << "# CSVGRID/1\n";
    char hdr[256];
    std::snprintf(hdr, sizeof(hdr), "# nx=%d ny=%d delta=%.17g x0=%.17g y0=%.17g tag=%s db=%d\n",
                  g.nx, g.ny, g.delta, g.x0, g.y0, img.tag(), img.is_db ? 1 : 0);
    os << hdr;
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", img.values[g.flatten(ix, iy)]);
        os << buf << (ix + 1 < g.nx ? "," : "");
      }
      os << "\n";
    }
    detail::write_file_bytes(path, os.str());
    return;
  }
  auto px = detail::quantize_8bit(img, floor_db);
  if (fmt == ImageFormat::Pgm8) {
    std::string out = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
    out.append(reinterpret_cast<const char*>(px.data()), px.size());
    detail::write_file_bytes(path, out);
    return;
  }
  // PNG: filter byte 0 per scanline, single zlib stream
  std::string raw;
  raw.reserve(static_cast<std::size_t>(g.ny) * (g.nx + 1));
  for (int iy = 0; iy < g.ny; ++iy) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(px.data() + static_cast<std::size_t>(iy) * g.nx),
               g.nx);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string comp(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(comp.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                9) != Z_OK)
    throw Error(ErrorCode::IoError, "zlib compression failed");
  comp.resize(bound);
  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::push_be32(ihdr, static_cast<std::uint32_t>(g.nx));
  detail::push_be32(ihdr, static_cast<std::uint32_t>(g.ny));
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit grayscale
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", comp);
  detail::png_chunk(out, "IEND", "");
  detail::write_file_bytes(path, out);
}

/// Reads back a CSV_GRID file (round-trip support for tests and tooling).
inline ImageField read_csv_grid(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("# CSVGRID/1", 0) != 0)
    throw Error(ErrorCode::VersionMismatch, "not a CSVGRID/1 file");
  if (!std::getline(f, line)) throw Error(ErrorCode::CorruptRecord, "missing header");
  ImageField img;
  int nx = 0, ny = 0, db = 0;
  double delta = 0, x0 = 0, y0 = 0;
  char tag[32] = {0};
  if (std::sscanf(line.c_str(), "# nx=%d ny=%d delta=%lg x0=%lg y0=%lg tag=%31s db=%d", &nx,
                  &ny, &delta, &x0, &y0, tag, &db) < 7)
    throw Error(ErrorCode::CorruptRecord, "bad CSVGRID header");
  // tag string includes the trailing " db=" capture boundary; split it
  std::string tg(tag);
  img.grid = Grid2D(x0, y0, delta, nx, ny);
  img.is_db = db != 0;
  if (tg.rfind("GMMV", 0) == 0)
    img.provenance = ImageProvenance::Gmmv;
  else if (tg.rfind("LSM", 0) == 0)
    img.provenance = ImageProvenance::Lsm;
  img.values.resize(static_cast<Eigen::Index>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    if (!std::getline(f, line)) throw Error(ErrorCode::CorruptRecord, "missing data row");
    std::istringstream ss(line);
    std::string cell;
    for (int ix = 0; ix < nx; ++ix) {
      if (!std::getline(ss, cell, ','))
        throw Error(ErrorCode::CorruptRecord, "short data row");
      img.values[img.grid.flatten(ix, iy)] = std::stod(cell);
    }
  }
  return img;
}

}  // namespace gmmv
