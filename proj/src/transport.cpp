#include "surfvort/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace surfvort {

SurfaceLocation::SurfaceLocation(Index triangle, double s, double t) : triangle_(triangle) {
  if (!(s >= -kSlack && t >= -kSlack && s + t <= 1.0 + kSlack)) {
    throw std::invalid_argument("barycentric coordinates (" + std::to_string(s) + ", " +
                                std::to_string(t) + ") outside the triangle");
  }
  *this = clamped(triangle, s, t);
}

SurfaceLocation SurfaceLocation::clamped(Index triangle, double s, double t) {
  SurfaceLocation loc;
  loc.triangle_ = triangle;
  s = std::max(0.0, s);
  t = std::max(0.0, t);
  if (const double sum = s + t; sum > 1.0) {
    s /= sum;
    t /= sum;
  }
  loc.s_ = s;
  loc.t_ = t;
  return loc;
}

namespace {

void check_triangle(const TriangleMesh& mesh, Index t) {
  if (t < 0 || static_cast<std::size_t>(t) >= mesh.triangle_count()) {
    throw MeshError("triangle index " + std::to_string(t) + " out of range");
  }
}

}  // namespace

Vec3 position_of(const TriangleMesh& mesh, const SurfaceLocation& loc) {
  check_triangle(mesh, loc.triangle());
  const auto [a, b, c] = mesh.corners(loc.triangle());
  return a + loc.s() * (b - a) + loc.t() * (c - a);
}

std::array<double, 2> barycentric_coordinates(const TriangleMesh& mesh, Index t, const Vec3& p) {
  check_triangle(mesh, t);
  const auto [a, b, c] = mesh.corners(t);
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 d = p - a;
  const double g11 = e1.dot(e1);
  const double g12 = e1.dot(e2);
  const double g22 = e2.dot(e2);
  const double r1 = d.dot(e1);
  const double r2 = d.dot(e2);
  const double det = g11 * g22 - g12 * g12;
  return {(g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det};
}

SurfaceLocation locate_in_triangle(const TriangleMesh& mesh, Index t, const Vec3& p) {
  const auto [s, u] = barycentric_coordinates(mesh, t, p);
  return SurfaceLocation::clamped(t, s, u);
}

SurfaceLocation map_location(const SurfaceLocation& loc, MapDirection /*direction*/,
                             const TriangleMesh& surface, const TriangleMesh& sphere) {
  if (surface.triangle_count() != sphere.triangle_count()) {
    throw MeshError("map_location: meshes are not in triangle correspondence");
  }
  check_triangle(surface, loc.triangle());
  return loc;
}

double interpolate_scalar(const TriangleMesh& mesh, std::span<const double> values,
                          const SurfaceLocation& loc) {
  check_triangle(mesh, loc.triangle());
  const Triangle& tri = mesh.triangle(loc.triangle());
  const auto w = loc.weights();
  return w[0] * values[static_cast<std::size_t>(tri[0])] + w[1] * values[static_cast<std::size_t>(tri[1])] +
         w[2] * values[static_cast<std::size_t>(tri[2])];
}

namespace {

// Closest point on triangle abc to p, as barycentric (v, w) on (b, c).
std::array<double, 2> closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {0.0, 0.0};
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {1.0, 0.0};
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return {d1 / (d1 - d3), 0.0};
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {0.0, 1.0};
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return {0.0, d2 / (d2 - d6)};
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {1.0 - w, w};
  }
  const double denom = 1.0 / (va + vb + vc);
  return {vb * denom, vc * denom};
}

}  // namespace

SurfaceLocation closest_location(const TriangleMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  SurfaceLocation result;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto [a, b, c] = mesh.corners(static_cast<Index>(t));
    const auto [s, u] = closest_on_triangle(p, a, b, c);
    const double d2 = (a + s * (b - a) + u * (c - a) - p).squaredNorm();
    if (d2 < best) {
      best = d2;
      result = SurfaceLocation::clamped(static_cast<Index>(t), s, u);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// SphereLocator
// ---------------------------------------------------------------------------

SphereLocator::SphereLocator(TriangleMesh sphere_mesh) : mesh_(std::move(sphere_mesh)) {
  const std::size_t nt = mesh_.triangle_count();
  neighbors_.assign(nt, {-1, -1, -1});
  vertex_triangles_.assign(mesh_.vertex_count(), {});
  const auto nv = static_cast<std::uint64_t>(mesh_.vertex_count());
  // directed edge (a -> b) -> (triangle, corner opposite the edge)
  std::unordered_map<std::uint64_t, std::pair<Index, int>> half_edges;
  half_edges.reserve(3 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const Triangle& tri = mesh_.triangle(static_cast<Index>(t));
    for (int k = 0; k < 3; ++k) {
      vertex_triangles_[static_cast<std::size_t>(tri[k])].push_back(static_cast<Index>(t));
      const Index a = tri[(k + 1) % 3];
      const Index b = tri[(k + 2) % 3];
      half_edges[static_cast<std::uint64_t>(a) * nv + static_cast<std::uint64_t>(b)] = {static_cast<Index>(t), k};
    }
  }
  for (std::size_t t = 0; t < nt; ++t) {
    const Triangle& tri = mesh_.triangle(static_cast<Index>(t));
    for (int k = 0; k < 3; ++k) {
      const Index a = tri[(k + 1) % 3];
      const Index b = tri[(k + 2) % 3];
      auto it = half_edges.find(static_cast<std::uint64_t>(b) * nv + static_cast<std::uint64_t>(a));
      if (it != half_edges.end()) neighbors_[t][static_cast<std::size_t>(k)] = it->second.first;
    }
  }
}

std::array<double, 3> SphereLocator::edge_tests(Index t, const Vec3& p) const {
  const auto c = mesh_.corners(t);
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const Vec3 n = c[static_cast<std::size_t>((k + 1) % 3)].cross(c[static_cast<std::size_t>((k + 2) % 3)]);
    out[static_cast<std::size_t>(k)] = p.dot(n) / n.norm();
  }
  return out;
}

bool SphereLocator::contains(Index t, const Vec3& p) const {
  const auto d = edge_tests(t, p);
  return d[0] >= -kContainmentSlack && d[1] >= -kContainmentSlack && d[2] >= -kContainmentSlack;
}

SurfaceLocation SphereLocator::gnomonic_location(Index t, const Vec3& p) const {
  const auto [a, b, c] = mesh_.corners(t);
  // Volumes of the tetrahedra (origin, p, edge) are proportional to the
  // barycentric coordinates of the radial projection of p onto the plane abc.
  const double wa = p.dot(b.cross(c));
  const double wb = p.dot(c.cross(a));
  const double wc = p.dot(a.cross(b));
  const double sum = wa + wb + wc;
  return SurfaceLocation::clamped(t, wb / sum, wc / sum);
}

Index SphereLocator::lowest_containing(Index t, const Vec3& p) const {
  const auto d = edge_tests(t, p);
  if (std::min({d[0], d[1], d[2]}) > kContainmentSlack) return t;
  Index best = t;
  for (Index v : mesh_.triangle(t)) {
    for (Index other : vertex_triangles_[static_cast<std::size_t>(v)]) {
      if (other < best && contains(other, p)) best = other;
    }
  }
  return best;
}

Index SphereLocator::exhaustive_search(Index start, const Vec3& p) const {
  // Breadth-first over the adjacency graph, so every connected triangle is
  // visited once.
  std::vector<char> seen(mesh_.triangle_count(), 0);
  std::deque<Index> queue{start};
  seen[static_cast<std::size_t>(start)] = 1;
  while (!queue.empty()) {
    const Index t = queue.front();
    queue.pop_front();
    if (contains(t, p)) return t;
    for (Index n : neighbors_[static_cast<std::size_t>(t)]) {
      if (n >= 0 && !seen[static_cast<std::size_t>(n)]) {
        seen[static_cast<std::size_t>(n)] = 1;
        queue.push_back(n);
      }
    }
  }
  return -1;
}

SurfaceLocation SphereLocator::locate(const Vec3& p, Index hint) const {
  const auto nt = static_cast<Index>(mesh_.triangle_count());
  Index t = (hint >= 0 && hint < nt) ? hint : 0;
  const Index max_steps = 2 * nt;
  Index found = -1;
  for (Index step = 0; step < max_steps; ++step) {
    const auto d = edge_tests(t, p);
    const auto worst = static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
    if (d[static_cast<std::size_t>(worst)] >= -kContainmentSlack) {
      found = t;
      break;
    }
    const Index next = neighbors_[static_cast<std::size_t>(t)][static_cast<std::size_t>(worst)];
    if (next < 0) break;
    t = next;
  }
  if (found < 0) found = exhaustive_search(t, p);
  if (found < 0) {
    throw MeshError("sphere point location failed; the sphere mesh does not cover the point");
  }
  found = lowest_containing(found, p);
  return gnomonic_location(found, p);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::vector<SurfaceLocation> sample_points(const TriangleMesh& sphere_mesh,
                                           std::span<const double> source_areas,
                                           std::size_t count, std::uint64_t seed) {
  if (source_areas.size() != sphere_mesh.triangle_count()) {
    throw MeshError("sample_points: one source area per triangle required");
  }
  std::vector<double> cumulative(source_areas.size());
  double running = 0.0;
  for (std::size_t i = 0; i < source_areas.size(); ++i) {
    if (!(source_areas[i] > 0.0)) throw MeshError("sample_points: triangle areas must be positive");
    running += source_areas[i];
    cumulative[i] = running;
  }

  std::mt19937_64 rng(seed);
  // 53 random mantissa bits -> [0, 1), independent of the standard library's
  // distribution implementations.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<SurfaceLocation> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double target = uniform() * running;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto t = static_cast<Index>(it - cumulative.begin());
    const double r1 = std::sqrt(uniform());
    const double r2 = uniform();
    out.push_back(SurfaceLocation::clamped(t, r1 * (1.0 - r2), r1 * r2));
  }
  return out;
}

}  // namespace surfvort
