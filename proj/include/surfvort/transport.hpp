#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "surfvort/mesh.hpp"

namespace surfvort {

/// A point on a triangle mesh: triangle index plus barycentric coordinates
/// (s, t) so that p = p1 + s (p2 - p1) + t (p3 - p1).
class SurfaceLocation {
 public:
  static constexpr double kSlack = 1e-10;

  SurfaceLocation() = default;
  /// Accepts coordinates up to kSlack outside the simplex and clamps them;
  /// anything further out throws std::invalid_argument.
  SurfaceLocation(Index triangle, double s, double t);
  /// Projects arbitrary coordinates onto the simplex.
  static SurfaceLocation clamped(Index triangle, double s, double t);

  Index triangle() const noexcept { return triangle_; }
  double s() const noexcept { return s_; }
  double t() const noexcept { return t_; }
  /// Corner weights (1 - s - t, s, t).
  std::array<double, 3> weights() const noexcept { return {1.0 - s_ - t_, s_, t_}; }

  friend bool operator==(const SurfaceLocation&, const SurfaceLocation&) = default;

 private:
  Index triangle_ = 0;
  double s_ = 0.0;
  double t_ = 0.0;
};

Vec3 position_of(const TriangleMesh& mesh, const SurfaceLocation& loc);

/// Raw (s, t) of the orthogonal projection of p onto triangle t's plane.
std::array<double, 2> barycentric_coordinates(const TriangleMesh& mesh, Index t, const Vec3& p);

/// Location of p within triangle t, clamped to the simplex.
SurfaceLocation locate_in_triangle(const TriangleMesh& mesh, Index t, const Vec3& p);

enum class MapDirection { to_sphere, to_surface };

/// Piecewise-linear transport between two meshes in triangle correspondence.
/// The location itself is unchanged; only the mesh it is evaluated on
/// differs. Throws MeshError if the meshes do not correspond or the location
/// is out of range.
SurfaceLocation map_location(const SurfaceLocation& loc, MapDirection direction,
                             const TriangleMesh& surface, const TriangleMesh& sphere);

double interpolate_scalar(const TriangleMesh& mesh, std::span<const double> values,
                          const SurfaceLocation& loc);

/// Closest point of the mesh to p (exhaustive search). Ties resolve to the
/// lowest triangle index.
SurfaceLocation closest_location(const TriangleMesh& mesh, const Vec3& p);

/// Point location on a mesh whose vertices lie on (or near) the unit sphere,
/// using radial (gnomonic) projection. Precomputes triangle adjacency.
class SphereLocator {
 public:
  static constexpr double kContainmentSlack = 1e-12;

  explicit SphereLocator(TriangleMesh sphere_mesh);

  const TriangleMesh& mesh() const noexcept { return mesh_; }

  /// Walks from `hint` to the triangle whose radial cone contains p.
  /// Points on shared edges or vertices resolve to the lowest triangle index.
  /// Throws MeshError if no triangle contains p.
  SurfaceLocation locate(const Vec3& p, Index hint = 0) const;

  /// Signed distances of p to the three edge planes (through the origin) of
  /// triangle t, edges opposite corners 0, 1, 2. All >= -slack iff contained.
  std::array<double, 3> edge_tests(Index t, const Vec3& p) const;

  bool contains(Index t, const Vec3& p) const;

  /// Barycentric coordinates of the radial projection of p into triangle t.
  SurfaceLocation gnomonic_location(Index t, const Vec3& p) const;

  /// Triangle across the edge opposite corner k, or -1 on a boundary.
  Index neighbor(Index t, int k) const { return neighbors_[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)]; }

 private:
  Index lowest_containing(Index t, const Vec3& p) const;
  Index exhaustive_search(Index start, const Vec3& p) const;

  TriangleMesh mesh_;
  std::vector<std::array<Index, 3>> neighbors_;
  std::vector<std::vector<Index>> vertex_triangles_;
};

inline SurfaceLocation relocate_on_sphere_mesh(const Vec3& p, Index hint, const SphereLocator& locator) {
  return locator.locate(p, hint);
}

/// Draws `count` locations on the sphere mesh. A triangle is chosen with
/// probability proportional to `source_areas` (the areas of the corresponding
/// triangles on the original surface); the point is uniform within it.
/// Deterministic for a given seed on every platform.
std::vector<SurfaceLocation> sample_points(const TriangleMesh& sphere_mesh,
                                           std::span<const double> source_areas,
                                           std::size_t count, std::uint64_t seed);

}  // namespace surfvort
