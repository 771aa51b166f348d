#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "surfvort/core.hpp"

namespace surfvort {

/// Point of the plane, embedded in space as (x, y, 0) with normal (0, 0, 1).
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;

  PlanePoint() = default;
  PlanePoint(double x_, double y_) : x(x_), y(y_) {}
  /// Drops the z component.
  explicit PlanePoint(const Vec3& p) : x(p.x()), y(p.y()) {}

  Vec3 embedded() const { return {x, y, 0.0}; }
};

/// Point of the unit sphere. Renormalized on construction.
class SpherePoint {
 public:
  explicit SpherePoint(const Vec3& p) : p_(p.normalized()) {}
  SpherePoint(double x, double y, double z) : SpherePoint(Vec3(x, y, z)) {}

  const Vec3& vec() const noexcept { return p_; }

 private:
  Vec3 p_;
};

inline const Vec3 kPlaneNormal{0.0, 0.0, 1.0};

// Unchecked pair kernels on raw embedded coordinates. Callers guarantee the
// separation guard; the interaction loops in dynamics use these directly.
namespace kernel {

/// Clamped great-circle angle between two unit vectors.
inline double sphere_angle(const Vec3& x, const Vec3& y) {
  return std::acos(std::clamp(x.dot(y), -1.0, 1.0));
}

/// (n x (x - y)) / |x - y|^2 for points in the z = 0 plane.
inline Vec3 plane_pair(const Vec3& x, const Vec3& y) {
  const double dx = x.x() - y.x();
  const double dy = x.y() - y.y();
  const double r2 = dx * dx + dy * dy;
  return {-dy / r2, dx / r2, 0.0};
}

/// (x x y) / (1 - x . y) for unit vectors.
inline Vec3 sphere_pair(const Vec3& x, const Vec3& y) {
  return x.cross(y) / (1.0 - x.dot(y));
}

inline double plane_separation(const Vec3& x, const Vec3& y) {
  return std::hypot(x.x() - y.x(), x.y() - y.y());
}

/// Angular separation, accurate for nearly coincident points as well.
inline double sphere_separation(const Vec3& x, const Vec3& y) {
  return 2.0 * std::asin(std::min(1.0, 0.5 * (x - y).norm()));
}

inline void check_plane(const Vec3& x, const Vec3& y) {
  const double d = plane_separation(x, y);
  if (!(d >= kSingularityEpsilon)) {
    throw SingularityError("planar kernel evaluated at separation " + std::to_string(d), d);
  }
}

inline void check_sphere(const Vec3& x, const Vec3& y) {
  const double d = sphere_separation(x, y);
  if (!(d >= kSingularityEpsilon)) {
    throw SingularityError("spherical kernel evaluated at angular separation " + std::to_string(d), d);
  }
}

}  // namespace kernel

/// Great-circle distance in radians, in [0, pi].
inline double sphere_distance(const SpherePoint& x, const SpherePoint& y) {
  return kernel::sphere_angle(x.vec(), y.vec());
}

/// Planar Green's function -ln|x - y| / (2 pi).
inline double green_plane(const PlanePoint& x, const PlanePoint& y) {
  const Vec3 a = x.embedded();
  const Vec3 b = y.embedded();
  kernel::check_plane(a, b);
  // |x - y| is computed from squared differences so both argument orders give
  // the same bits.
  const double dx = x.x - y.x;
  const double dy = x.y - y.y;
  return -std::log(std::sqrt(dx * dx + dy * dy)) / kTwoPi;
}

/// Spherical Green's function -ln(sin(d(x, y) / 2)) / (2 pi).
inline double green_sphere(const SpherePoint& x, const SpherePoint& y) {
  kernel::check_sphere(x.vec(), y.vec());
  return -std::log(std::sin(0.5 * sphere_distance(x, y))) / kTwoPi;
}

/// Symplectic gradient in x of the planar Green's function,
/// (n x (x - y)) / (2 pi |x - y|^2). Positive strengths circulate
/// counter-clockwise about +z; this is -n x grad_x G for G = -ln|x - y| / (2 pi).
inline Vec3 sgrad_green_plane(const PlanePoint& x, const PlanePoint& y) {
  const Vec3 a = x.embedded();
  const Vec3 b = y.embedded();
  kernel::check_plane(a, b);
  return kernel::plane_pair(a, b) / kTwoPi;
}

/// Symplectic gradient in x of the spherical Green's function,
/// (x x y) / (4 pi (1 - x . y)). Tangent at x; regular at the antipode.
inline Vec3 sgrad_green_sphere(const SpherePoint& x, const SpherePoint& y) {
  kernel::check_sphere(x.vec(), y.vec());
  return kernel::sphere_pair(x.vec(), y.vec()) / kFourPi;
}

}  // namespace surfvort
