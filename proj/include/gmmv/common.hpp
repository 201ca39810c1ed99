// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gmmv {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

namespace constants {
inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double c0 = 299792458.0;          // speed of light [m/s]
inline constexpr double mu0 = 4e-7 * pi;           // vacuum permeability [H/m]
inline constexpr double eps0 = 1.0 / (mu0 * c0 * c0);  // vacuum permittivity [F/m]
}  // namespace constants

enum class ErrorCode {
  MissingField,
  BadUnits,
  GeometryViolation,
  CvTooLarge,
  ShapeOutOfGrid,
  GridTooCoarse,
  SingularMatrix,
  ReceiverInPml,
  ReceiverInsideGrid,
  DimMismatch,
  UnsupportedNorm,
  NegativeRadius,
  LinesearchFailed,
  ZeroResidual,
  NonnegativeDerivative,
  MaxIterations,
  TooLargeForSpark,
  EmptyFrequency,
  SampleOnReceiver,
  AllZeroImage,
  GridMismatch,
  IoError,
  VersionMismatch,
  CorruptRecord,
  DuplicateTriple,
  NoConvergence,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingField: return "MISSING_FIELD";
    case ErrorCode::BadUnits: return "BAD_UNITS";
    case ErrorCode::GeometryViolation: return "GEOMETRY_VIOLATION";
    case ErrorCode::CvTooLarge: return "CV_TOO_LARGE";
    case ErrorCode::ShapeOutOfGrid: return "SHAPE_OUT_OF_GRID";
    case ErrorCode::GridTooCoarse: return "GRID_TOO_COARSE";
    case ErrorCode::SingularMatrix: return "SINGULAR_MATRIX";
    case ErrorCode::ReceiverInPml: return "RECEIVER_IN_PML";
    case ErrorCode::ReceiverInsideGrid: return "RECEIVER_INSIDE_GRID";
    case ErrorCode::DimMismatch: return "DIM_MISMATCH";
    case ErrorCode::UnsupportedNorm: return "UNSUPPORTED_NORM";
    case ErrorCode::NegativeRadius: return "NEGATIVE_RADIUS";
    case ErrorCode::LinesearchFailed: return "LINESEARCH_FAILED";
    case ErrorCode::ZeroResidual: return "ZERO_RESIDUAL";
    case ErrorCode::NonnegativeDerivative: return "NONNEGATIVE_DERIVATIVE";
    case ErrorCode::MaxIterations: return "MAX_ITERATIONS";
    case ErrorCode::TooLargeForSpark: return "TOO_LARGE_FOR_SPARK";
    case ErrorCode::EmptyFrequency: return "EMPTY_FREQUENCY";
    case ErrorCode::SampleOnReceiver: return "SAMPLE_ON_RECEIVER";
    case ErrorCode::AllZeroImage: return "ALL_ZERO_IMAGE";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::CorruptRecord: return "CORRUPT_RECORD";
    case ErrorCode::DuplicateTriple: return "DUPLICATE_TRIPLE";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace gmmv
