#include "surfvort/primitives.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace surfvort {

namespace {

struct IcoBuilder {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::map<std::pair<Index, Index>, Index> midpoints;

  Index midpoint(Index a, Index b) {
    const auto key = std::minmax(a, b);
    if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
    const Vec3 m = (vertices[static_cast<std::size_t>(a)] + vertices[static_cast<std::size_t>(b)]).normalized();
    vertices.push_back(m);
    const auto idx = static_cast<Index>(vertices.size() - 1);
    midpoints.emplace(key, idx);
    return idx;
  }
};

}  // namespace

TriangleMesh make_icosphere(int subdivisions, double radius) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  IcoBuilder b;
  for (const Vec3& v : {Vec3(-1, phi, 0), Vec3(1, phi, 0), Vec3(-1, -phi, 0), Vec3(1, -phi, 0),
                        Vec3(0, -1, phi), Vec3(0, 1, phi), Vec3(0, -1, -phi), Vec3(0, 1, -phi),
                        Vec3(phi, 0, -1), Vec3(phi, 0, 1), Vec3(-phi, 0, -1), Vec3(-phi, 0, 1)}) {
    b.vertices.push_back(v.normalized());
  }
  b.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::vector<Triangle> next;
    next.reserve(4 * b.triangles.size());
    b.midpoints.clear();
    for (const Triangle& t : b.triangles) {
      const Index ab = b.midpoint(t[0], t[1]);
      const Index bc = b.midpoint(t[1], t[2]);
      const Index ca = b.midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    b.triangles = std::move(next);
  }
  for (Vec3& v : b.vertices) v *= radius;
  return TriangleMesh(std::move(b.vertices), std::move(b.triangles));
}

TriangleMesh make_ellipsoid(int subdivisions, double a, double b, double c) {
  const TriangleMesh sphere = make_icosphere(subdivisions);
  std::vector<Vec3> v = sphere.vertices();
  for (Vec3& p : v) p = Vec3(a * p.x(), b * p.y(), c * p.z());
  return sphere.with_vertices(std::move(v));
}

TriangleMesh make_tetrahedron() {
  std::vector<Vec3> v = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
  std::vector<Triangle> t = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return TriangleMesh(std::move(v), std::move(t));
}

TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments) {
  std::vector<Vec3> v;
  std::vector<Triangle> t;
  for (int i = 0; i < major_segments; ++i) {
    const double u = kTwoPi * i / major_segments;
    for (int j = 0; j < minor_segments; ++j) {
      const double w = kTwoPi * j / minor_segments;
      const double rho = major_radius + minor_radius * std::cos(w);
      v.emplace_back(rho * std::cos(u), rho * std::sin(u), minor_radius * std::sin(w));
    }
  }
  auto id = [&](int i, int j) {
    return static_cast<Index>((i % major_segments) * minor_segments + (j % minor_segments));
  };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriangleMesh(std::move(v), std::move(t));
}

TriangleMesh make_blob(int subdivisions) {
  const TriangleMesh sphere = make_icosphere(subdivisions);
  struct Lobe {
    Vec3 center;
    double height;
    double width;
  };
  const Lobe lobes[] = {
      {Vec3(0.35, 0.25, 0.9).normalized(), 0.7, 0.30},    // ear
      {Vec3(0.35, -0.25, 0.9).normalized(), 0.7, 0.30},   // ear
      {Vec3(-1.0, 0.0, 0.2).normalized(), 0.25, 0.35},    // tail
      {Vec3(0.9, 0.0, -0.3).normalized(), 0.35, 0.55},    // snout
  };
  std::vector<Vec3> v = sphere.vertices();
  for (Vec3& p : v) {
    double r = 1.0;
    for (const Lobe& lobe : lobes) {
      const double d2 = (p - lobe.center).squaredNorm();
      r += lobe.height * std::exp(-d2 / (lobe.width * lobe.width));
    }
    p = Vec3(1.3 * p.x(), 1.0 * p.y(), 0.9 * p.z()) * r;
  }
  return sphere.with_vertices(std::move(v));
}

}  // namespace surfvort
