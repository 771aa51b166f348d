#include "surfvort/integrator.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace surfvort {

Vec3 rotate(const Vec3& p, const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle == 0.0) return p;
  const Vec3 k = axis_angle / angle;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return p * c + k.cross(p) * s + k * (k.dot(p) * (1.0 - c));
}

Vec3 advect_sphere(const Vec3& p, const Vec3& u, double dt) {
  const Vec3 axis = p.cross(u);
  const double len = axis.norm();
  if (len == 0.0) return p;
  // For tangent u, |p x u| = |u|, so the rotation angle is the arc length.
  return rotate(p, axis * (u.norm() * dt / len)).normalized();
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

EnergyDiagnostics VelocityModel::diagnostics(const VortexSystem& sys, std::span<const Index>) const {
  EnergyDiagnostics d;
  d.kinetic_excess = kinetic_energy(sys);
  d.metric_hamiltonian = d.kinetic_excess;
  d.total_vorticity = total_vorticity(sys);
  return d;
}

std::vector<SurfaceLocation> VelocityModel::locate(const VortexSystem&, std::span<const Index>) const {
  return {};
}

Vec3 VelocityModel::surface_position(const SurfaceLocation&) const {
  throw GeometryMismatchError("surface positions exist only on closed surfaces");
}

std::vector<Vec3> PlanarModel::velocities(const VortexSystem& sys, std::span<const Index>) const {
  return planar_vortex_velocities(sys);
}

std::vector<Vec3> SphereModel::velocities(const VortexSystem& sys, std::span<const Index>) const {
  return sphere_vortex_velocities(sys);
}

ClosedSurfaceModel::ClosedSurfaceModel(std::shared_ptr<const AtlasField> field, double self_term_sign)
    : field_(std::move(field)), sign_(self_term_sign) {
  if (!field_) throw std::invalid_argument("ClosedSurfaceModel requires an atlas");
  if (sign_ != 1.0 && sign_ != -1.0) throw std::invalid_argument("self_term_sign must be +1 or -1");
}

std::vector<Vec3> ClosedSurfaceModel::velocities(const VortexSystem& sys, std::span<const Index> hints) const {
  return surface_vortex_velocities(sys, *field_, sign_, hints);
}

EnergyDiagnostics ClosedSurfaceModel::diagnostics(const VortexSystem& sys, std::span<const Index> hints) const {
  EnergyDiagnostics d;
  d.kinetic_excess = kinetic_energy(sys);
  d.metric_hamiltonian = metric_hamiltonian(sys, *field_, hints);
  d.total_vorticity = total_vorticity(sys);
  return d;
}

std::vector<SurfaceLocation> ClosedSurfaceModel::locate(const VortexSystem& sys,
                                                        std::span<const Index> hints) const {
  std::vector<SurfaceLocation> out(sys.size());
  for (std::size_t j = 0; j < sys.size(); ++j) {
    out[j] = field_->locator().locate(sys.positions[j], hints.empty() ? 0 : hints[j]);
  }
  return out;
}

Vec3 ClosedSurfaceModel::surface_position(const SurfaceLocation& loc) const {
  return field_->surface_position(loc);
}

// ---------------------------------------------------------------------------
// RK4
// ---------------------------------------------------------------------------

namespace {

VortexSystem with_positions(const VortexSystem& base, std::vector<Vec3> positions) {
  VortexSystem out;
  out.geometry = base.geometry;
  out.positions = std::move(positions);
  out.strengths = base.strengths;
  return out;
}

VortexSystem planar_step(const VortexSystem& sys, const VelocityModel& model, double dt,
                         std::span<const Index> hints) {
  const std::size_t n = sys.size();
  auto stage = [&](const std::vector<Vec3>& k, double c) {
    std::vector<Vec3> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = sys.positions[j] + c * dt * k[j];
    return with_positions(sys, std::move(p));
  };
  const auto k1 = model.velocities(sys, hints);
  const auto k2 = model.velocities(stage(k1, 0.5), hints);
  const auto k3 = model.velocities(stage(k2, 0.5), hints);
  const auto k4 = model.velocities(stage(k3, 1.0), hints);
  std::vector<Vec3> next(n);
  for (std::size_t j = 0; j < n; ++j) {
    next[j] = sys.positions[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return with_positions(sys, std::move(next));
}

Vec3 tangent_at(const Vec3& p, const Vec3& v) { return v - v.dot(p) * p; }

VortexSystem projected_step(const VortexSystem& sys, const VelocityModel& model, double dt,
                            std::span<const Index> hints) {
  const std::size_t n = sys.size();
  auto stage = [&](const std::vector<Vec3>& k, double c) {
    std::vector<Vec3> p(n);
    for (std::size_t j = 0; j < n; ++j) {
      p[j] = advect_sphere(sys.positions[j], tangent_at(sys.positions[j], k[j]), c * dt);
    }
    return with_positions(sys, std::move(p));
  };
  const auto k1 = model.velocities(sys, hints);
  const auto k2 = model.velocities(stage(k1, 0.5), hints);
  const auto k3 = model.velocities(stage(k2, 0.5), hints);
  const auto k4 = model.velocities(stage(k3, 1.0), hints);
  std::vector<Vec3> next(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec3 avg = (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
    next[j] = advect_sphere(sys.positions[j], tangent_at(sys.positions[j], avg), dt);
  }
  return with_positions(sys, std::move(next));
}

VortexSystem lie_group_step(const VortexSystem& sys, const VelocityModel& model, double dt,
                            std::span<const Index> hints) {
  const std::size_t n = sys.size();
  // Angular velocity lift a(p) = p x u(p), scaled by dt: rotating p by a moves
  // it with velocity u.
  auto lift = [&](const VortexSystem& at) {
    const auto u = model.velocities(at, hints);
    std::vector<Vec3> k(n);
    for (std::size_t j = 0; j < n; ++j) k[j] = dt * at.positions[j].cross(u[j]);
    return k;
  };
  auto stage = [&](auto&& theta) {
    std::vector<Vec3> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = rotate(sys.positions[j], theta(j)).normalized();
    return with_positions(sys, std::move(p));
  };
  const auto k1 = lift(sys);
  const auto k2 = lift(stage([&](std::size_t j) { return Vec3(0.5 * k1[j]); }));
  const auto k3 = lift(stage([&](std::size_t j) { return Vec3(0.5 * k2[j] - k1[j].cross(k2[j]) / 8.0); }));
  const auto k4 = lift(stage([&](std::size_t j) { return k3[j]; }));
  std::vector<Vec3> next(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec3 theta = (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0 - k1[j].cross(k4[j]) / 12.0;
    next[j] = rotate(sys.positions[j], theta).normalized();
  }
  return with_positions(sys, std::move(next));
}

}  // namespace

VortexSystem rk4_step(const VortexSystem& sys, const VelocityModel& model, const IntegratorConfig& cfg,
                      std::span<const Index> hints) {
  if (model.geometry() != sys.geometry) {
    throw GeometryMismatchError(std::string("velocity model for ") + to_string(model.geometry()) +
                                " applied to a " + to_string(sys.geometry) + " system");
  }
  if (cfg.advection == Advection::planar) {
    if (sys.geometry != Geometry::plane) {
      throw GeometryMismatchError("planar advection requires plane geometry");
    }
    return planar_step(sys, model, cfg.dt, hints);
  }
  if (sys.geometry == Geometry::plane) {
    throw GeometryMismatchError("rotational advection requires sphere or closed-surface geometry");
  }
  return cfg.sphere_rule == SphereStageRule::lie_group ? lie_group_step(sys, model, cfg.dt, hints)
                                                       : projected_step(sys, model, cfg.dt, hints);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

RunResult run(const VortexSystem& initial, const VelocityModel& model, const IntegratorConfig& cfg,
              const Observer& observer, bool keep_records) {
  if (!(cfg.dt > 0.0) && cfg.steps > 0) throw std::invalid_argument("dt must be positive");
  const std::size_t record_every = std::max<std::size_t>(1, cfg.record_every);
  const std::size_t diagnostics_every = std::max<std::size_t>(1, cfg.diagnostics_every);

  RunResult result;
  VortexSystem state = initial;
  std::vector<SurfaceLocation> locations = model.locate(state, {});
  std::vector<Index> hints(locations.size());
  for (std::size_t j = 0; j < locations.size(); ++j) hints[j] = locations[j].triangle();
  const double vorticity = total_vorticity(initial);

  auto emit = [&](std::size_t step) {
    const bool last = step == cfg.steps;
    if (step % record_every != 0 && !last) return;
    TrajectoryRecord rec;
    rec.step = step;
    rec.time = static_cast<double>(step) * cfg.dt;
    rec.positions = state.positions;
    if (locations.empty()) {
      rec.surface_positions = state.positions;
    } else {
      rec.surface_positions.reserve(locations.size());
      for (const auto& loc : locations) rec.surface_positions.push_back(model.surface_position(loc));
    }
    if (step % diagnostics_every == 0 || last) rec.diagnostics = model.diagnostics(state, hints);
    if (observer) observer(rec);
    if (keep_records) result.records.push_back(std::move(rec));
  };

  emit(0);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    try {
      state = rk4_step(state, model, cfg, hints);
      locations = model.locate(state, hints);
    } catch (const SingularityError& e) {
      result.collided = true;
      result.collision_step = step;
      result.message = "vortex collision at step " + std::to_string(step) + ": " + e.what();
      break;
    }
    for (std::size_t j = 0; j < locations.size(); ++j) hints[j] = locations[j].triangle();
    assert(total_vorticity(state) == vorticity);
    (void)vorticity;
    emit(step);
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace surfvort
