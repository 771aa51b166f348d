#pragma once

#include <optional>
#include <span>
#include <vector>

#include "surfvort/conformal.hpp"
#include "surfvort/kernels.hpp"
#include "surfvort/transport.hpp"

namespace surfvort {

enum class Geometry { plane, sphere, closed_surface };

const char* to_string(Geometry g);

/// Point vortices in the embedded representation: (x, y, 0) on the plane,
/// unit vectors on the sphere, and unit vectors on S^2 (the images of the
/// vortices under the conformal map) for closed surfaces.
struct VortexSystem {
  Geometry geometry = Geometry::plane;
  std::vector<Vec3> positions;
  std::vector<double> strengths;

  std::size_t size() const noexcept { return positions.size(); }
  void add(const Vec3& position, double strength) {
    positions.push_back(position);
    strengths.push_back(strength);
  }
};

/// Checks finite strengths, geometry invariants (z = 0 on the plane, unit norm
/// on the sphere) and pairwise separation. Throws SingularityError for
/// coincident pairs and GeometryMismatchError otherwise.
void validate(const VortexSystem& sys);

/// Sum of strengths, compensated.
double total_vorticity(const VortexSystem& sys);

/// |sum w| <= 1e-12 * sum |w|.
bool is_balanced(const VortexSystem& sys);

/// Throws VorticityError unless is_balanced(sys).
void require_balanced(const VortexSystem& sys);

// Plane ---------------------------------------------------------------------

/// u(p_j) = 1/(2 pi) sum_{i != j} w_i n x (p_j - p_i) / |p_j - p_i|^2.
std::vector<Vec3> planar_vortex_velocities(const VortexSystem& sys);

/// Full sum over all vortices at a passive point.
Vec3 planar_field_velocity(const PlanePoint& x, const VortexSystem& sys);

// Sphere --------------------------------------------------------------------

/// u(p_j) = 1/(4 pi) sum_{i != j} w_i (p_j x p_i) / (1 - p_j . p_i).
std::vector<Vec3> sphere_vortex_velocities(const VortexSystem& sys);

Vec3 sphere_field_velocity(const SpherePoint& x, const VortexSystem& sys);

// Closed surfaces -----------------------------------------------------------

/// Conformal factor data at one point of S^2.
struct ConformalSample {
  SurfaceLocation location;  ///< on the sphere mesh (and, by index, on M)
  double h = 1.0;
  Vec3 grad_h = Vec3::Zero();
};

/// A conformal atlas with point location, for evaluating h and grad h at
/// arbitrary points of S^2. Immutable.
class AtlasField {
 public:
  explicit AtlasField(ConformalAtlas atlas);

  const ConformalAtlas& atlas() const noexcept { return atlas_; }
  const SphereLocator& locator() const noexcept { return locator_; }

  /// h interpolated barycentrically; grad h constant on the containing triangle.
  ConformalSample sample(const Vec3& p, Index hint = 0) const;
  ConformalSample sample(const SurfaceLocation& loc) const;

  /// Position on the original surface of a location on S^2.
  Vec3 surface_position(const SurfaceLocation& loc) const;

 private:
  ConformalAtlas atlas_;
  SphereLocator locator_;
};

/// u(p_j) = 1/(4 pi h_j^2) [ sum_{i != j} w_i (p_j x p_i)/(1 - p_j . p_i)
///                           + sign * (w_j / h_j) p_j x grad h_j ].
/// `samples[j]` holds h and grad h at vortex j. Requires zero total vorticity.
std::vector<Vec3> surface_vortex_velocities(const VortexSystem& sys,
                                            std::span<const ConformalSample> samples,
                                            double self_term_sign);

/// As above, locating every vortex on the atlas (walks start at `hints[j]`
/// when given).
std::vector<Vec3> surface_vortex_velocities(const VortexSystem& sys, const AtlasField& field,
                                            double self_term_sign,
                                            std::span<const Index> hints = {});

/// u(x) = 1/(4 pi h(x)^2) sum_i w_i (x x p_i)/(1 - x . p_i). No self term.
Vec3 surface_field_velocity(const SpherePoint& x, const VortexSystem& sys,
                            const ConformalSample& at_x);
Vec3 surface_field_velocity(const SpherePoint& x, const VortexSystem& sys, const AtlasField& field,
                            Index hint = 0);

// Scalars -------------------------------------------------------------------

/// psi(x) = sum_i w_i G(x, p_i) with the plane or sphere kernel. Closed
/// surfaces have no stream function; GeometryMismatchError.
double stream_function(const Vec3& x, const VortexSystem& sys);

/// E = -sum_{i<j} w_i w_j G(p_i, p_j). Closed surfaces use the sphere kernel
/// on the vortex images.
double kinetic_energy(const VortexSystem& sys);

/// H~ = H - 1/(4 pi) sum_i w_i^2 log h(p_i), given h at each vortex.
double metric_hamiltonian(const VortexSystem& sys, std::span<const double> h_at_vortices);
double metric_hamiltonian(const VortexSystem& sys, const AtlasField& field,
                          std::span<const Index> hints = {});

struct EnergyDiagnostics {
  double kinetic_excess = 0.0;
  double metric_hamiltonian = 0.0;  ///< equals kinetic_excess off closed surfaces
  double total_vorticity = 0.0;
};

// Vorticity balance ---------------------------------------------------------

struct BalanceMode {
  enum class Kind { reject, counter_vortex };
  Kind kind = Kind::reject;
  Vec3 location = Vec3::Zero();  ///< used by counter_vortex

  static BalanceMode reject() { return {}; }
  static BalanceMode counter_vortex(const Vec3& at) { return {Kind::counter_vortex, at}; }
};

/// reject: throws VorticityError unless balanced. counter_vortex: appends a
/// vortex of strength -sum w at the given location (no-op when balanced);
/// throws SingularityError if it coincides with an existing vortex.
VortexSystem balance_vorticity(const VortexSystem& sys, const BalanceMode& mode);

}  // namespace surfvort
