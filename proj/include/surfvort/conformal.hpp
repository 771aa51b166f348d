#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "surfvort/mesh.hpp"
#include "surfvort/transport.hpp"

namespace surfvort {

/// Input surface failed the closed / oriented / genus-zero check.
class TopologyError : public MeshError {
 public:
  TopologyError(const std::string& what, TopologyReport report)
      : MeshError(what), report_(report) {}
  const TopologyReport& report() const noexcept { return report_; }

 private:
  TopologyReport report_;
};

/// Cotangent stiffness (off-diagonal weight (cot a + cot b) / 2, rows summing
/// to zero, negative semi-definite) and lumped barycentric mass (area / 3 per
/// incident triangle).
struct SparseOperator {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd mass;
};

SparseOperator cotan_laplacian(const TriangleMesh& mesh);
Eigen::VectorXd lumped_mass(const TriangleMesh& mesh);

/// Mixed Voronoi vertex areas: circumcentric Voronoi cells in non-obtuse
/// triangles, A/2 to the obtuse corner and A/4 to the others otherwise.
Eigen::VectorXd voronoi_mass(const TriangleMesh& mesh);

/// Piecewise-linear FEM mass matrix: A/6 on the diagonal and A/12 between the
/// vertices of each triangle.
Eigen::SparseMatrix<double> consistent_mass(const TriangleMesh& mesh);

struct CmcfParams {
  enum class Mass { lumped, voronoi, consistent };
  enum class Normalization { unit_area, sphere_area };
  double delta = 0.1;   ///< implicit flow step, relative to the normalized area
  double tol = 1e-3;    ///< sphericity residual at which the flow stops
  int max_iters = 200;
  Mass mass = Mass::voronoi;
  Normalization normalization = Normalization::unit_area;
};

struct CmcfResult {
  std::vector<Vec3> sphere_positions;  ///< unit vectors, one per vertex
  std::vector<Vec3> flow_positions;    ///< last iterate, centered, before projection
  int iterations = 0;
  double sphericity_residual = 0.0;  ///< before the final radial projection
  bool converged = false;
  std::vector<double> residual_history;
};

/// max_v | |v - c| / mean_radius - 1 | with c the area-weighted centroid.
double sphericity_residual(const TriangleMesh& mesh);

/// Conformalized mean-curvature flow: repeatedly solves
/// (D_k - delta L_0) x_{k+1} = D_k x_k with the initial stiffness L_0 fixed and
/// the mass D_k of the current embedding, recentering and rescaling to the
/// normalized area after each step. Stops the first time the sphericity
/// residual drops below tol. Does not check topology.
CmcfResult cmcf_to_sphere(const TriangleMesh& mesh, const CmcfParams& params = {});

/// Per-vertex log conformal factor u: each triangle corner i estimates
/// e^{u_i} = (L_ij L_ki l_jk) / (l_ij l_ki L_jk) from surface lengths L and
/// sphere lengths l; corner estimates of u are averaged per vertex.
std::vector<double> conformal_log_factors(const TriangleMesh& surface,
                                          std::span<const Vec3> sphere_positions);

/// Piecewise-linear gradient of a per-vertex scalar, constant per triangle:
/// (1 / 2A) sum_k value_k (n x e_k), e_k the counter-clockwise edge opposite
/// corner k. Throws MeshError on degenerate triangles.
std::vector<Vec3> triangle_gradient(const TriangleMesh& mesh, std::span<const double> values);

/// The discrete conformal map M -> S^2 and its factor h = e^u, the length
/// ratio |M| / |S^2|. Triangle t of the source mesh corresponds to triangle
/// t of the sphere mesh.
struct ConformalAtlas {
  TriangleMesh source_mesh;
  TriangleMesh sphere_mesh;
  std::vector<double> log_factors;
  std::vector<double> factors;
  std::vector<Vec3> triangle_grad_h;  ///< gradient of h on the sphere mesh
  int iterations_used = 0;
  double sphericity_residual = 0.0;
  bool converged = true;
};

/// Validates topology (throws TopologyError), runs the flow, and derives
/// factors and their gradients. A non-converged flow is reported through
/// `converged`, not by throwing.
ConformalAtlas build_conformal_atlas(const TriangleMesh& surface, const CmcfParams& params = {});

/// Atlas of a unit-sphere mesh onto itself with h stored as exactly 1 and
/// zero gradients.
ConformalAtlas make_identity_atlas(const TriangleMesh& sphere_mesh);

struct ConformalQuality {
  double edge_residual_median = 0.0;  ///< median |L - e^{(u_i+u_j)/2} l| / L
  double edge_residual_max = 0.0;
  double angle_distortion_median_deg = 0.0;  ///< per-triangle max corner angle change
  std::size_t inverted_triangles = 0;  ///< sphere triangles facing inwards
  double factor_min = 0.0;
  double factor_max = 0.0;
};

ConformalQuality assess_conformal_map(const ConformalAtlas& atlas);

/// Text report used by the conformal-map command.
void write_conformal_report(std::ostream& out, const ConformalAtlas& atlas,
                            const ConformalQuality& quality);

}  // namespace surfvort
