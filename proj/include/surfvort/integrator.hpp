#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surfvort/dynamics.hpp"

namespace surfvort {

enum class Advection { planar, rotational };

/// How RK4 stages are composed on the sphere.
enum class SphereStageRule {
  /// Stage points by rotation from the base point along the stage tangent
  /// projected at the base point; the weighted average tangent, projected at
  /// the base point, drives one final rotation.
  projected_tangents,
  /// Runge-Kutta-Munthe-Kaas: stages and update in the rotation algebra with
  /// commutator corrections. Fourth order on the sphere.
  lie_group,
};

struct IntegratorConfig {
  double dt = 1e-2;
  std::size_t steps = 0;
  Advection advection = Advection::planar;
  SphereStageRule sphere_rule = SphereStageRule::lie_group;
  std::size_t record_every = 1;       ///< keep every k-th state (and the last)
  std::size_t diagnostics_every = 1;  ///< energy snapshot every k-th step (and the last)
};

/// Moves p along the great circle in direction u for arc length |u| dt: a
/// rotation about (p x u) / |p x u|. The result is renormalized.
Vec3 advect_sphere(const Vec3& p, const Vec3& u, double dt);

/// Rotation of p by the rotation vector `axis_angle` (Rodrigues).
Vec3 rotate(const Vec3& p, const Vec3& axis_angle);

/// Velocity evaluator for one geometry. Implementations are immutable and
/// may be shared between concurrent runs.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;

  virtual Geometry geometry() const = 0;

  /// Velocity of every vortex. `hints` are the triangles the vortices
  /// occupied at the start of the step (closed surfaces only).
  virtual std::vector<Vec3> velocities(const VortexSystem& sys, std::span<const Index> hints) const = 0;

  virtual EnergyDiagnostics diagnostics(const VortexSystem& sys, std::span<const Index> hints) const;

  /// Closed surfaces: location of every vortex on the sphere mesh. Empty for
  /// the plane and sphere.
  virtual std::vector<SurfaceLocation> locate(const VortexSystem& sys, std::span<const Index> hints) const;

  /// Closed surfaces: position on M of a location. Other geometries return
  /// the location unchanged and never call this.
  virtual Vec3 surface_position(const SurfaceLocation& loc) const;
};

class PlanarModel final : public VelocityModel {
 public:
  Geometry geometry() const override { return Geometry::plane; }
  std::vector<Vec3> velocities(const VortexSystem& sys, std::span<const Index> hints) const override;
};

class SphereModel final : public VelocityModel {
 public:
  Geometry geometry() const override { return Geometry::sphere; }
  std::vector<Vec3> velocities(const VortexSystem& sys, std::span<const Index> hints) const override;
};

class ClosedSurfaceModel final : public VelocityModel {
 public:
  ClosedSurfaceModel(std::shared_ptr<const AtlasField> field, double self_term_sign);

  Geometry geometry() const override { return Geometry::closed_surface; }
  std::vector<Vec3> velocities(const VortexSystem& sys, std::span<const Index> hints) const override;
  EnergyDiagnostics diagnostics(const VortexSystem& sys, std::span<const Index> hints) const override;
  std::vector<SurfaceLocation> locate(const VortexSystem& sys, std::span<const Index> hints) const override;
  Vec3 surface_position(const SurfaceLocation& loc) const override;

  const AtlasField& field() const noexcept { return *field_; }
  double self_term_sign() const noexcept { return sign_; }

 private:
  std::shared_ptr<const AtlasField> field_;
  double sign_;
};

/// One classical RK4 step. Planar advection moves along straight lines;
/// rotational advection composes stages on the sphere per cfg.sphere_rule.
/// SingularityError from the velocity model propagates.
VortexSystem rk4_step(const VortexSystem& sys, const VelocityModel& model, const IntegratorConfig& cfg,
                      std::span<const Index> hints = {});

struct TrajectoryRecord {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<Vec3> positions;          ///< plane / S^2 positions
  std::vector<Vec3> surface_positions;  ///< on M (closed surfaces), else equal to positions
  std::optional<EnergyDiagnostics> diagnostics;
};

struct RunResult {
  std::vector<TrajectoryRecord> records;
  VortexSystem final_state;
  bool collided = false;
  std::size_t collision_step = 0;  ///< step that failed to complete
  std::string message;
};

using Observer = std::function<void(const TrajectoryRecord&)>;

/// Integrates cfg.steps steps. Every kept record is passed to `observer`;
/// records are also returned when `keep_records` is set. A collision aborts
/// the run and returns the partial trajectory with `collided` set.
RunResult run(const VortexSystem& initial, const VelocityModel& model, const IntegratorConfig& cfg,
              const Observer& observer = {}, bool keep_records = true);

}  // namespace surfvort
