#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "surfvort/core.hpp"

namespace testing {

using surfvort::Vec3;

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v;
  do {
    v = Vec3(g(rng), g(rng), g(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Vec3 random_plane_point(std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  return {u(rng), u(rng), 0.0};
}

inline double rel_err(const Vec3& a, const Vec3& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace testing

namespace testing {

/// Upper tail P(X >= x) of a chi-square variable with k degrees of freedom,
/// via the Wilson-Hilferty cube-root normal approximation (accurate to a few
/// percent of p for k >= 10).
inline double chi_square_upper_tail(double x, double k) {
  const double m = 1.0 - 2.0 / (9.0 * k);
  const double s = std::sqrt(2.0 / (9.0 * k));
  const double z = (std::cbrt(x / k) - m) / s;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace testing
