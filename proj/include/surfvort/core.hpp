#pragma once

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace surfvort {

using Vec3 = Eigen::Vector3d;
using Index = std::int64_t;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

/// Minimum separation (Euclidean on the plane, angular on the sphere) below
/// which a kernel evaluation is treated as a vortex collision.
inline constexpr double kSingularityEpsilon = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input mesh, out-of-range indices, degenerate geometry.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Two points closer than kSingularityEpsilon were passed to a kernel.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double separation)
      : Error(what), separation_(separation) {}
  double separation() const noexcept { return separation_; }

 private:
  double separation_;
};

/// Total vorticity constraint violated on a closed surface.
class VorticityError : public Error {
 public:
  using Error::Error;
};

/// Sparse linear solve failed.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A vortex system does not match the geometry it is evaluated on.
class GeometryMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace surfvort
