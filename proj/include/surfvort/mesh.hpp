#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "surfvort/core.hpp"

namespace surfvort {

using Triangle = std::array<Index, 3>;

/// Indexed triangle mesh. Triangles are counter-clockwise seen from outside.
/// Immutable after construction; vertex indices are range-checked on entry.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  std::size_t vertex_count() const noexcept { return vertices_.size(); }
  std::size_t triangle_count() const noexcept { return triangles_.size(); }
  const Vec3& vertex(Index v) const { return vertices_[static_cast<std::size_t>(v)]; }
  const Triangle& triangle(Index t) const { return triangles_[static_cast<std::size_t>(t)]; }

  /// Corner positions of triangle t.
  std::array<Vec3, 3> corners(Index t) const;

  /// Same connectivity, new vertex positions.
  TriangleMesh with_vertices(std::vector<Vec3> vertices) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
};

struct TopologyReport {
  std::size_t vertex_count = 0;
  std::size_t edge_count = 0;
  std::size_t face_count = 0;
  long euler_characteristic = 0;
  std::size_t boundary_edge_count = 0;
  std::size_t nonmanifold_edge_count = 0;
  bool is_oriented = false;
  double min_triangle_area = 0.0;
  std::size_t degenerate_triangle_count = 0;

  /// Accepted by the conformal pipeline: closed, oriented, genus zero, no
  /// degenerate triangles.
  bool closed_genus_zero() const noexcept {
    return euler_characteristic == 2 && boundary_edge_count == 0 &&
           nonmanifold_edge_count == 0 && is_oriented && degenerate_triangle_count == 0;
  }
};

/// Counts vertices, undirected edges and faces and checks edge manifoldness and
/// consistent orientation. Never throws.
TopologyReport validate_closed_genus0(const TriangleMesh& mesh);

double face_area(const TriangleMesh& mesh, Index t);
/// Unit normal; throws MeshError for degenerate triangles.
Vec3 face_normal(const TriangleMesh& mesh, Index t);
double total_area(const TriangleMesh& mesh);
std::vector<double> face_areas(const TriangleMesh& mesh);
double bounding_box_diagonal(const TriangleMesh& mesh);

/// Area threshold below which a triangle counts as degenerate:
/// 1e-12 * (bounding-box diagonal)^2.
double degenerate_area_threshold(const TriangleMesh& mesh);

// Wavefront OBJ. Faces are 1-based; negative indices are relative to the
// current vertex count. Polygons are fan-triangulated.
TriangleMesh read_obj(std::istream& in);
TriangleMesh load_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const TriangleMesh& mesh);
void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace surfvort
