#include "surfvort/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>

#include "surfvort/format.hpp"

namespace surfvort {

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (vertices_.empty() || triangles_.empty()) {
    throw MeshError("mesh has no vertices or no triangles");
  }
  const auto n = static_cast<Index>(vertices_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (Index v : triangles_[t]) {
      if (v < 0 || v >= n) {
        throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(v) + " out of range [0, " + std::to_string(n) + ")");
      }
    }
  }
}

std::array<Vec3, 3> TriangleMesh::corners(Index t) const {
  const Triangle& tri = triangle(t);
  return {vertex(tri[0]), vertex(tri[1]), vertex(tri[2])};
}

TriangleMesh TriangleMesh::with_vertices(std::vector<Vec3> vertices) const {
  if (vertices.size() != vertices_.size()) {
    throw MeshError("with_vertices: vertex count mismatch");
  }
  return TriangleMesh(std::move(vertices), triangles_);
}

namespace {

Vec3 twice_area_vector(const TriangleMesh& mesh, Index t) {
  const auto [a, b, c] = mesh.corners(t);
  return (b - a).cross(c - a);
}

}  // namespace

double face_area(const TriangleMesh& mesh, Index t) {
  return 0.5 * twice_area_vector(mesh, t).norm();
}

Vec3 face_normal(const TriangleMesh& mesh, Index t) {
  const Vec3 n = twice_area_vector(mesh, t);
  const double len = n.norm();
  if (0.5 * len < degenerate_area_threshold(mesh)) {
    throw MeshError("face_normal: triangle " + std::to_string(t) + " is degenerate");
  }
  return n / len;
}

std::vector<double> face_areas(const TriangleMesh& mesh) {
  std::vector<double> areas(mesh.triangle_count());
  for (std::size_t t = 0; t < areas.size(); ++t) areas[t] = face_area(mesh, static_cast<Index>(t));
  return areas;
}

double total_area(const TriangleMesh& mesh) {
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) sum += face_area(mesh, static_cast<Index>(t));
  return sum;
}

double bounding_box_diagonal(const TriangleMesh& mesh) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& v : mesh.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

double degenerate_area_threshold(const TriangleMesh& mesh) {
  const double d = bounding_box_diagonal(mesh);
  return 1e-12 * d * d;
}

TopologyReport validate_closed_genus0(const TriangleMesh& mesh) {
  TopologyReport report;
  report.vertex_count = mesh.vertex_count();
  report.face_count = mesh.triangle_count();

  const auto nv = static_cast<std::uint64_t>(mesh.vertex_count());
  auto key = [nv](Index a, Index b) {
    return static_cast<std::uint64_t>(a) * nv + static_cast<std::uint64_t>(b);
  };

  // Per undirected edge: number of incident faces; per directed edge: multiplicity.
  std::unordered_map<std::uint64_t, int> undirected;
  std::unordered_map<std::uint64_t, int> directed;
  undirected.reserve(3 * mesh.triangle_count());
  directed.reserve(3 * mesh.triangle_count());

  const double threshold = degenerate_area_threshold(mesh);
  report.min_triangle_area = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Triangle& tri = mesh.triangle(static_cast<Index>(t));
    for (int k = 0; k < 3; ++k) {
      const Index a = tri[k];
      const Index b = tri[(k + 1) % 3];
      ++directed[key(a, b)];
      ++undirected[key(std::min(a, b), std::max(a, b))];
    }
    const double area = face_area(mesh, static_cast<Index>(t));
    report.min_triangle_area = std::min(report.min_triangle_area, area);
    if (area < threshold) ++report.degenerate_triangle_count;
  }

  report.edge_count = undirected.size();
  for (const auto& [edge, count] : undirected) {
    if (count == 1) ++report.boundary_edge_count;
    if (count > 2) ++report.nonmanifold_edge_count;
  }
  report.is_oriented = std::all_of(directed.begin(), directed.end(),
                                   [](const auto& kv) { return kv.second == 1; });
  report.euler_characteristic = static_cast<long>(report.vertex_count) -
                                static_cast<long>(report.edge_count) +
                                static_cast<long>(report.face_count);
  return report;
}

// ---------------------------------------------------------------------------
// OBJ I/O
// ---------------------------------------------------------------------------

namespace {

Index parse_face_index(const std::string& token, std::size_t vertex_count, std::size_t line_no) {
  // Accepts "i", "i/t", "i//n", "i/t/n"; only the position index matters.
  const std::string head = token.substr(0, token.find('/'));
  long long raw = 0;
  try {
    std::size_t used = 0;
    raw = std::stoll(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw MeshError("OBJ line " + std::to_string(line_no) + ": malformed face index '" + token + "'");
  }
  const auto n = static_cast<long long>(vertex_count);
  long long idx = raw > 0 ? raw - 1 : n + raw;
  if (raw == 0 || idx < 0 || idx >= n) {
    throw MeshError("OBJ line " + std::to_string(line_no) + ": face index " + std::to_string(raw) +
                    " out of range for " + std::to_string(n) + " vertices");
  }
  return static_cast<Index>(idx);
}

}  // namespace

TriangleMesh read_obj(std::istream& in) {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw MeshError("OBJ line " + std::to_string(line_no) + ": malformed vertex record");
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<Index> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(parse_face_index(tok, vertices.size(), line_no));
      if (poly.size() < 3) {
        throw MeshError("OBJ line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        triangles.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
    // vn, vt, o, g, s, usemtl, mtllib: ignored
  }
  if (vertices.empty() || triangles.empty()) throw MeshError("OBJ file contains an empty mesh");
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open OBJ file " + path.string());
  return read_obj(in);
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  for (const Vec3& v : mesh.vertices()) {
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
        << format_double(v.z()) << '\n';
  }
  for (const Triangle& t : mesh.triangles()) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MeshError("cannot write OBJ file " + path.string());
  write_obj(out, mesh);
}

}  // namespace surfvort
