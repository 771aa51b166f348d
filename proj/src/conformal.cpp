#include "surfvort/conformal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include <Eigen/SparseCholesky>

#include "surfvort/format.hpp"

namespace surfvort {

namespace {

std::size_t idx(Index i) { return static_cast<std::size_t>(i); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

void require_nondegenerate(const TriangleMesh& mesh) {
  const double threshold = degenerate_area_threshold(mesh);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (face_area(mesh, static_cast<Index>(t)) < threshold) {
      throw MeshError("triangle " + std::to_string(t) + " is degenerate");
    }
  }
}

Vec3 area_centroid(const TriangleMesh& mesh) {
  Vec3 c = Vec3::Zero();
  double area = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto [a, b, cc] = mesh.corners(static_cast<Index>(t));
    const double at = 0.5 * (b - a).cross(cc - a).norm();
    c += at * (a + b + cc) / 3.0;
    area += at;
  }
  return c / area;
}

// Recenters at the area centroid and scales to the given total area.
TriangleMesh normalized(const TriangleMesh& mesh, double area) {
  const Vec3 c = area_centroid(mesh);
  const double scale = std::sqrt(area / total_area(mesh));
  std::vector<Vec3> v = mesh.vertices();
  for (Vec3& p : v) p = (p - c) * scale;
  return mesh.with_vertices(std::move(v));
}

}  // namespace

Eigen::VectorXd lumped_mass(const TriangleMesh& mesh) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertex_count()));
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const double a3 = face_area(mesh, static_cast<Index>(t)) / 3.0;
    for (Index v : mesh.triangle(static_cast<Index>(t))) mass[v] += a3;
  }
  return mass;
}

Eigen::VectorXd voronoi_mass(const TriangleMesh& mesh) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertex_count()));
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Triangle& tri = mesh.triangle(static_cast<Index>(t));
    const auto c = mesh.corners(static_cast<Index>(t));
    const double area = face_area(mesh, static_cast<Index>(t));
    std::array<double, 3> cot{};
    bool obtuse = false;
    std::size_t obtuse_corner = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const Vec3 e1 = c[(k + 1) % 3] - c[k];
      const Vec3 e2 = c[(k + 2) % 3] - c[k];
      const double d = e1.dot(e2);
      cot[k] = d / e1.cross(e2).norm();
      if (d < 0.0) {
        obtuse = true;
        obtuse_corner = k;
      }
    }
    for (std::size_t k = 0; k < 3; ++k) {
      double share;
      if (obtuse) {
        share = k == obtuse_corner ? area / 2.0 : area / 4.0;
      } else {
        // Voronoi region of corner k: edges to the other two corners, each
        // weighted by the cotangent of the opposite angle.
        const std::size_t j = (k + 1) % 3;
        const std::size_t m = (k + 2) % 3;
        share = ((c[j] - c[k]).squaredNorm() * cot[m] + (c[m] - c[k]).squaredNorm() * cot[j]) / 8.0;
      }
      mass[tri[k]] += share;
    }
  }
  return mass;
}

Eigen::SparseMatrix<double> consistent_mass(const TriangleMesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const double a = face_area(mesh, static_cast<Index>(t));
    const Triangle& tri = mesh.triangle(static_cast<Index>(t));
    for (Index i : tri) {
      for (Index j : tri) triplets.emplace_back(i, j, i == j ? a / 6.0 : a / 12.0);
    }
  }
  Eigen::SparseMatrix<double> mass(n, n);
  mass.setFromTriplets(triplets.begin(), triplets.end());
  mass.makeCompressed();
  return mass;
}

SparseOperator cotan_laplacian(const TriangleMesh& mesh) {
  require_nondegenerate(mesh);
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(12 * mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Triangle& tri = mesh.triangle(static_cast<Index>(t));
    const auto c = mesh.corners(static_cast<Index>(t));
    for (int k = 0; k < 3; ++k) {
      // angle at corner k faces edge (i, j)
      const Index i = tri[static_cast<std::size_t>((k + 1) % 3)];
      const Index j = tri[static_cast<std::size_t>((k + 2) % 3)];
      const Vec3 e1 = c[static_cast<std::size_t>((k + 1) % 3)] - c[static_cast<std::size_t>(k)];
      const Vec3 e2 = c[static_cast<std::size_t>((k + 2) % 3)] - c[static_cast<std::size_t>(k)];
      const double w = 0.5 * e1.dot(e2) / e1.cross(e2).norm();
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
      triplets.emplace_back(i, i, -w);
      triplets.emplace_back(j, j, -w);
    }
  }
  SparseOperator op;
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  op.stiffness.makeCompressed();
  op.mass = lumped_mass(mesh);
  return op;
}

double sphericity_residual(const TriangleMesh& mesh) {
  const Vec3 c = area_centroid(mesh);
  std::vector<double> radii;
  radii.reserve(mesh.vertex_count());
  double mean = 0.0;
  for (const Vec3& v : mesh.vertices()) {
    radii.push_back((v - c).norm());
    mean += radii.back();
  }
  mean /= static_cast<double>(radii.size());
  double worst = 0.0;
  for (double r : radii) worst = std::max(worst, std::abs(r / mean - 1.0));
  return worst;
}

CmcfResult cmcf_to_sphere(const TriangleMesh& mesh, const CmcfParams& params) {
  const double area = params.normalization == CmcfParams::Normalization::unit_area ? 1.0 : kFourPi;
  TriangleMesh current = normalized(mesh, area);
  const Eigen::SparseMatrix<double> stiffness = cotan_laplacian(current).stiffness;
  const auto n = static_cast<Eigen::Index>(mesh.vertex_count());

  CmcfResult result;
  result.sphericity_residual = sphericity_residual(current);
  result.residual_history.push_back(result.sphericity_residual);
  result.converged = result.sphericity_residual < params.tol;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analyzed = false;
  Eigen::MatrixXd x(n, 3);
  while (!result.converged && result.iterations < params.max_iters) {
    for (Eigen::Index v = 0; v < n; ++v) x.row(v) = current.vertex(v).transpose();
    Eigen::SparseMatrix<double> mass;
    if (params.mass == CmcfParams::Mass::consistent) {
      mass = consistent_mass(current);
    } else {
      const Eigen::VectorXd lumped =
          params.mass == CmcfParams::Mass::voronoi ? voronoi_mass(current) : lumped_mass(current);
      mass.resize(n, n);
      std::vector<Eigen::Triplet<double>> diag;
      for (Eigen::Index v = 0; v < n; ++v) diag.emplace_back(v, v, lumped[v]);
      mass.setFromTriplets(diag.begin(), diag.end());
    }
    const Eigen::SparseMatrix<double> system = mass - params.delta * stiffness;
    if (!analyzed) {
      solver.analyzePattern(system);
      analyzed = true;
    }
    solver.factorize(system);
    if (solver.info() != Eigen::Success) {
      throw SolverError("cMCF: factorization failed at iteration " +
                        std::to_string(result.iterations + 1));
    }
    const Eigen::MatrixXd rhs = mass * x;
    const Eigen::MatrixXd next = solver.solve(rhs);
    const double rel = (system * next - rhs).norm() / rhs.norm();
    if (solver.info() != Eigen::Success || !(rel < 1e-10)) {
      throw SolverError("cMCF: linear solve residual " + std::to_string(rel) + " at iteration " +
                        std::to_string(result.iterations + 1));
    }
    std::vector<Vec3> positions(mesh.vertex_count());
    for (Eigen::Index v = 0; v < n; ++v) positions[idx(v)] = next.row(v).transpose();
    current = normalized(current.with_vertices(std::move(positions)), area);
    ++result.iterations;
    result.sphericity_residual = sphericity_residual(current);
    result.residual_history.push_back(result.sphericity_residual);
    result.converged = result.sphericity_residual < params.tol;
  }

  const Vec3 c = area_centroid(current);
  result.sphere_positions.reserve(mesh.vertex_count());
  result.flow_positions.reserve(mesh.vertex_count());
  for (const Vec3& v : current.vertices()) {
    result.flow_positions.push_back(v - c);
    result.sphere_positions.push_back((v - c).normalized());
  }
  return result;
}

std::vector<double> conformal_log_factors(const TriangleMesh& surface,
                                          std::span<const Vec3> sphere_positions) {
  if (sphere_positions.size() != surface.vertex_count()) {
    throw MeshError("conformal_log_factors: vertex count mismatch");
  }
  const double tiny = std::sqrt(degenerate_area_threshold(surface));
  std::vector<double> sum(surface.vertex_count(), 0.0);
  std::vector<int> count(surface.vertex_count(), 0);
  auto sphere = [&](Index v) -> const Vec3& { return sphere_positions[idx(v)]; };
  for (const Triangle& tri : surface.triangles()) {
    for (int k = 0; k < 3; ++k) {
      const Index i = tri[static_cast<std::size_t>(k)];
      const Index j = tri[static_cast<std::size_t>((k + 1) % 3)];
      const Index m = tri[static_cast<std::size_t>((k + 2) % 3)];
      const double Lij = (surface.vertex(j) - surface.vertex(i)).norm();
      const double Lki = (surface.vertex(i) - surface.vertex(m)).norm();
      const double Ljk = (surface.vertex(m) - surface.vertex(j)).norm();
      const double lij = (sphere(j) - sphere(i)).norm();
      const double lki = (sphere(i) - sphere(m)).norm();
      const double ljk = (sphere(m) - sphere(j)).norm();
      if (std::min({Lij, Lki, Ljk}) <= tiny || std::min({lij, lki, ljk}) <= 1e-15) {
        throw MeshError("conformal_log_factors: degenerate edge length");
      }
      sum[idx(i)] += std::log(Lij) + std::log(Lki) + std::log(ljk) - std::log(lij) -
                     std::log(lki) - std::log(Ljk);
      ++count[idx(i)];
    }
  }
  std::vector<double> u(surface.vertex_count(), 0.0);
  for (std::size_t v = 0; v < u.size(); ++v) {
    if (count[v] > 0) u[v] = sum[v] / count[v];
  }
  return u;
}

std::vector<Vec3> triangle_gradient(const TriangleMesh& mesh, std::span<const double> values) {
  if (values.size() != mesh.vertex_count()) {
    throw MeshError("triangle_gradient: one value per vertex required");
  }
  std::vector<Vec3> grad(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const Triangle& tri = mesh.triangle(static_cast<Index>(t));
    const auto c = mesh.corners(static_cast<Index>(t));
    const Vec3 n = face_normal(mesh, static_cast<Index>(t));
    const double area = face_area(mesh, static_cast<Index>(t));
    Vec3 g = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      const Vec3 edge = c[static_cast<std::size_t>((k + 2) % 3)] - c[static_cast<std::size_t>((k + 1) % 3)];
      g += values[idx(tri[static_cast<std::size_t>(k)])] * n.cross(edge);
    }
    grad[t] = g / (2.0 * area);
  }
  return grad;
}

ConformalAtlas build_conformal_atlas(const TriangleMesh& surface, const CmcfParams& params) {
  const TopologyReport report = validate_closed_genus0(surface);
  if (!report.closed_genus_zero()) {
    throw TopologyError("surface is not a closed, oriented, non-degenerate genus-zero mesh (chi = " +
                            std::to_string(report.euler_characteristic) + ", boundary edges = " +
                            std::to_string(report.boundary_edge_count) + ")",
                        report);
  }
  CmcfResult flow = cmcf_to_sphere(surface, params);

  ConformalAtlas atlas;
  atlas.source_mesh = surface;
  atlas.sphere_mesh = surface.with_vertices(flow.sphere_positions);
  atlas.log_factors = conformal_log_factors(surface, flow.sphere_positions);
  atlas.factors.resize(atlas.log_factors.size());
  std::transform(atlas.log_factors.begin(), atlas.log_factors.end(), atlas.factors.begin(),
                 [](double u) { return std::exp(u); });
  atlas.triangle_grad_h = triangle_gradient(atlas.sphere_mesh, atlas.factors);
  atlas.iterations_used = flow.iterations;
  atlas.sphericity_residual = flow.sphericity_residual;
  atlas.converged = flow.converged;
  return atlas;
}

ConformalAtlas make_identity_atlas(const TriangleMesh& sphere_mesh) {
  ConformalAtlas atlas;
  atlas.source_mesh = sphere_mesh;
  atlas.sphere_mesh = sphere_mesh;
  atlas.log_factors.assign(sphere_mesh.vertex_count(), 0.0);
  atlas.factors.assign(sphere_mesh.vertex_count(), 1.0);
  atlas.triangle_grad_h.assign(sphere_mesh.triangle_count(), Vec3::Zero());
  atlas.sphericity_residual = sphericity_residual(sphere_mesh);
  return atlas;
}

ConformalQuality assess_conformal_map(const ConformalAtlas& atlas) {
  const TriangleMesh& m = atlas.source_mesh;
  const TriangleMesh& s = atlas.sphere_mesh;
  ConformalQuality q;

  std::vector<double> edge_residuals;
  edge_residuals.reserve(3 * m.triangle_count());
  std::vector<double> angle_errors;
  angle_errors.reserve(m.triangle_count());
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    const Triangle& tri = m.triangle(static_cast<Index>(t));
    const auto cm = m.corners(static_cast<Index>(t));
    const auto cs = s.corners(static_cast<Index>(t));
    double worst_angle = 0.0;
    for (int k = 0; k < 3; ++k) {
      const auto a = static_cast<std::size_t>(k);
      const auto b = static_cast<std::size_t>((k + 1) % 3);
      const auto c = static_cast<std::size_t>((k + 2) % 3);
      // Each undirected edge is visited from both sides; count it once.
      if (tri[a] < tri[b]) {
        const double L = (cm[b] - cm[a]).norm();
        const double l = (cs[b] - cs[a]).norm();
        const double predicted =
            std::exp(0.5 * (atlas.log_factors[idx(tri[a])] + atlas.log_factors[idx(tri[b])])) * l;
        edge_residuals.push_back(std::abs(L - predicted) / L);
      }
      auto angle = [&](const std::array<Vec3, 3>& corner) {
        const Vec3 e1 = corner[b] - corner[a];
        const Vec3 e2 = corner[c] - corner[a];
        return std::atan2(e1.cross(e2).norm(), e1.dot(e2));
      };
      worst_angle = std::max(worst_angle, std::abs(angle(cm) - angle(cs)));
    }
    angle_errors.push_back(worst_angle * 180.0 / kPi);
    const Vec3 centroid = (cs[0] + cs[1] + cs[2]) / 3.0;
    if ((cs[1] - cs[0]).cross(cs[2] - cs[0]).dot(centroid) <= 0.0) ++q.inverted_triangles;
  }
  q.edge_residual_median = median(edge_residuals);
  q.edge_residual_max = edge_residuals.empty() ? 0.0 : *std::max_element(edge_residuals.begin(), edge_residuals.end());
  q.angle_distortion_median_deg = median(angle_errors);
  const auto [lo, hi] = std::minmax_element(atlas.factors.begin(), atlas.factors.end());
  q.factor_min = *lo;
  q.factor_max = *hi;
  return q;
}

void write_conformal_report(std::ostream& out, const ConformalAtlas& atlas,
                            const ConformalQuality& quality) {
  out << "vertices: " << atlas.source_mesh.vertex_count() << '\n'
      << "triangles: " << atlas.source_mesh.triangle_count() << '\n'
      << "iterations: " << atlas.iterations_used << '\n'
      << "converged: " << (atlas.converged ? "true" : "false") << '\n'
      << "sphericity_residual: " << format_double(atlas.sphericity_residual) << '\n'
      << "edge_residual_median: " << format_double(quality.edge_residual_median) << '\n'
      << "edge_residual_max: " << format_double(quality.edge_residual_max) << '\n'
      << "angle_distortion_median_deg: " << format_double(quality.angle_distortion_median_deg) << '\n'
      << "inverted_triangles: " << quality.inverted_triangles << '\n'
      << "factor_min: " << format_double(quality.factor_min) << '\n'
      << "factor_max: " << format_double(quality.factor_max) << '\n';
}

}  // namespace surfvort
