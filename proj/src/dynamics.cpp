#include "surfvort/dynamics.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include "surfvort/compensated.hpp"

namespace surfvort {

const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::plane: return "plane";
    case Geometry::sphere: return "sphere";
    case Geometry::closed_surface: return "closed_surface";
  }
  return "unknown";
}

namespace {

std::size_t idx(Index i) { return static_cast<std::size_t>(i); }

// Runs body(j) for j in [0, n), in parallel when built with OpenMP. The first
// exception thrown by any iteration is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (count > 64)
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    try {
      body(static_cast<std::size_t>(j));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

void require_geometry(const VortexSystem& sys, Geometry expected) {
  if (sys.geometry != expected) {
    throw GeometryMismatchError(std::string("expected a ") + to_string(expected) +
                                " vortex system, got " + to_string(sys.geometry));
  }
}

bool on_sphere(Geometry g) { return g == Geometry::sphere || g == Geometry::closed_surface; }

void check_pair(Geometry g, const Vec3& a, const Vec3& b) {
  if (g == Geometry::plane) {
    kernel::check_plane(a, b);
  } else {
    kernel::check_sphere(a, b);
  }
}

// Sum over i != j of w_i * pair(p_j, p_i), compensated.
template <typename Pair>
Vec3 interaction_sum(const VortexSystem& sys, std::size_t j, Pair&& pair) {
  CompensatedVec3 sum;
  const Vec3& pj = sys.positions[j];
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (i == j) continue;
    check_pair(sys.geometry, pj, sys.positions[i]);
    sum += sys.strengths[i] * pair(pj, sys.positions[i]);
  }
  return sum.value();
}

template <typename Pair>
Vec3 field_sum(const VortexSystem& sys, const Vec3& x, Pair&& pair) {
  CompensatedVec3 sum;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    check_pair(sys.geometry, x, sys.positions[i]);
    sum += sys.strengths[i] * pair(x, sys.positions[i]);
  }
  return sum.value();
}

}  // namespace

void validate(const VortexSystem& sys) {
  if (sys.positions.size() != sys.strengths.size()) {
    throw GeometryMismatchError("vortex system has mismatched position and strength counts");
  }
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (!std::isfinite(sys.strengths[i])) {
      throw GeometryMismatchError("vortex " + std::to_string(i) + " has a non-finite strength");
    }
    const Vec3& p = sys.positions[i];
    if (!p.allFinite()) throw GeometryMismatchError("vortex " + std::to_string(i) + " has a non-finite position");
    if (sys.geometry == Geometry::plane && p.z() != 0.0) {
      throw GeometryMismatchError("planar vortex " + std::to_string(i) + " has nonzero z");
    }
    if (on_sphere(sys.geometry) && std::abs(p.norm() - 1.0) > 1e-9) {
      throw GeometryMismatchError("spherical vortex " + std::to_string(i) + " is not a unit vector");
    }
  }
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.size(); ++j) check_pair(sys.geometry, sys.positions[i], sys.positions[j]);
  }
}

double total_vorticity(const VortexSystem& sys) {
  CompensatedSum sum;
  for (double w : sys.strengths) sum += w;
  return sum.value();
}

bool is_balanced(const VortexSystem& sys) {
  CompensatedSum magnitude;
  for (double w : sys.strengths) magnitude += std::abs(w);
  return std::abs(total_vorticity(sys)) <= 1e-12 * magnitude.value();
}

void require_balanced(const VortexSystem& sys) {
  if (!is_balanced(sys)) {
    throw VorticityError("total vorticity " + std::to_string(total_vorticity(sys)) +
                         " must vanish on a closed surface");
  }
}

std::vector<Vec3> planar_vortex_velocities(const VortexSystem& sys) {
  require_geometry(sys, Geometry::plane);
  std::vector<Vec3> u(sys.size());
  parallel_for(sys.size(), [&](std::size_t j) {
    u[j] = interaction_sum(sys, j, kernel::plane_pair) / kTwoPi;
  });
  return u;
}

Vec3 planar_field_velocity(const PlanePoint& x, const VortexSystem& sys) {
  require_geometry(sys, Geometry::plane);
  return field_sum(sys, x.embedded(), kernel::plane_pair) / kTwoPi;
}

std::vector<Vec3> sphere_vortex_velocities(const VortexSystem& sys) {
  require_geometry(sys, Geometry::sphere);
  std::vector<Vec3> u(sys.size());
  parallel_for(sys.size(), [&](std::size_t j) {
    u[j] = interaction_sum(sys, j, kernel::sphere_pair) / kFourPi;
  });
  return u;
}

Vec3 sphere_field_velocity(const SpherePoint& x, const VortexSystem& sys) {
  require_geometry(sys, Geometry::sphere);
  return field_sum(sys, x.vec(), kernel::sphere_pair) / kFourPi;
}

// ---------------------------------------------------------------------------
// Closed surfaces
// ---------------------------------------------------------------------------

AtlasField::AtlasField(ConformalAtlas atlas)
    : atlas_(std::move(atlas)), locator_(atlas_.sphere_mesh) {}

ConformalSample AtlasField::sample(const SurfaceLocation& loc) const {
  ConformalSample out;
  out.location = loc;
  out.h = interpolate_scalar(atlas_.sphere_mesh, atlas_.factors, loc);
  out.grad_h = atlas_.triangle_grad_h[idx(loc.triangle())];
  return out;
}

ConformalSample AtlasField::sample(const Vec3& p, Index hint) const {
  return sample(locator_.locate(p, hint));
}

Vec3 AtlasField::surface_position(const SurfaceLocation& loc) const {
  return position_of(atlas_.source_mesh, loc);
}

std::vector<Vec3> surface_vortex_velocities(const VortexSystem& sys,
                                            std::span<const ConformalSample> samples,
                                            double self_term_sign) {
  require_geometry(sys, Geometry::closed_surface);
  require_balanced(sys);
  if (samples.size() != sys.size()) {
    throw GeometryMismatchError("one conformal sample per vortex required");
  }
  std::vector<Vec3> u(sys.size());
  parallel_for(sys.size(), [&](std::size_t j) {
    const ConformalSample& s = samples[j];
    const Vec3& p = sys.positions[j];
    const Vec3 self = (self_term_sign * sys.strengths[j] / s.h) * p.cross(s.grad_h);
    u[j] = (interaction_sum(sys, j, kernel::sphere_pair) + self) / (kFourPi * s.h * s.h);
  });
  return u;
}

namespace {

std::vector<ConformalSample> sample_vortices(const VortexSystem& sys, const AtlasField& field,
                                             std::span<const Index> hints) {
  if (!hints.empty() && hints.size() != sys.size()) {
    throw GeometryMismatchError("one triangle hint per vortex required");
  }
  std::vector<ConformalSample> samples(sys.size());
  for (std::size_t j = 0; j < sys.size(); ++j) {
    samples[j] = field.sample(sys.positions[j], hints.empty() ? 0 : hints[j]);
  }
  return samples;
}

}  // namespace

std::vector<Vec3> surface_vortex_velocities(const VortexSystem& sys, const AtlasField& field,
                                            double self_term_sign, std::span<const Index> hints) {
  require_geometry(sys, Geometry::closed_surface);
  require_balanced(sys);
  const auto samples = sample_vortices(sys, field, hints);
  return surface_vortex_velocities(sys, samples, self_term_sign);
}

Vec3 surface_field_velocity(const SpherePoint& x, const VortexSystem& sys, const ConformalSample& at_x) {
  require_geometry(sys, Geometry::closed_surface);
  require_balanced(sys);
  return field_sum(sys, x.vec(), kernel::sphere_pair) / (kFourPi * at_x.h * at_x.h);
}

Vec3 surface_field_velocity(const SpherePoint& x, const VortexSystem& sys, const AtlasField& field,
                            Index hint) {
  return surface_field_velocity(x, sys, field.sample(x.vec(), hint));
}

// ---------------------------------------------------------------------------
// Scalars
// ---------------------------------------------------------------------------

double stream_function(const Vec3& x, const VortexSystem& sys) {
  CompensatedSum psi;
  switch (sys.geometry) {
    case Geometry::plane: {
      const PlanePoint px(x);
      for (std::size_t i = 0; i < sys.size(); ++i) {
        psi += sys.strengths[i] * green_plane(px, PlanePoint(sys.positions[i]));
      }
      break;
    }
    case Geometry::sphere: {
      const SpherePoint sx(x);
      for (std::size_t i = 0; i < sys.size(); ++i) {
        psi += sys.strengths[i] * green_sphere(sx, SpherePoint(sys.positions[i]));
      }
      break;
    }
    case Geometry::closed_surface:
      throw GeometryMismatchError("the stream function is not available on a general closed surface");
  }
  return psi.value();
}

double kinetic_energy(const VortexSystem& sys) {
  CompensatedSum energy;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.size(); ++j) {
      const double g = sys.geometry == Geometry::plane
                           ? green_plane(PlanePoint(sys.positions[i]), PlanePoint(sys.positions[j]))
                           : green_sphere(SpherePoint(sys.positions[i]), SpherePoint(sys.positions[j]));
      energy += -sys.strengths[i] * sys.strengths[j] * g;
    }
  }
  return energy.value();
}

double metric_hamiltonian(const VortexSystem& sys, std::span<const double> h_at_vortices) {
  require_geometry(sys, Geometry::closed_surface);
  require_balanced(sys);
  if (h_at_vortices.size() != sys.size()) {
    throw GeometryMismatchError("one conformal factor per vortex required");
  }
  CompensatedSum correction;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    correction += sys.strengths[i] * sys.strengths[i] * std::log(h_at_vortices[i]);
  }
  return kinetic_energy(sys) - correction.value() / kFourPi;
}

double metric_hamiltonian(const VortexSystem& sys, const AtlasField& field,
                          std::span<const Index> hints) {
  require_geometry(sys, Geometry::closed_surface);
  const auto samples = sample_vortices(sys, field, hints);
  std::vector<double> h(samples.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = samples[i].h;
  return metric_hamiltonian(sys, h);
}

VortexSystem balance_vorticity(const VortexSystem& sys, const BalanceMode& mode) {
  if (is_balanced(sys)) return sys;
  if (mode.kind == BalanceMode::Kind::reject) {
    throw VorticityError("total vorticity " + std::to_string(total_vorticity(sys)) +
                         " is not zero and balancing is set to reject");
  }
  Vec3 at = mode.location;
  if (on_sphere(sys.geometry)) at.normalize();
  if (sys.geometry == Geometry::plane) at.z() = 0.0;
  for (const Vec3& p : sys.positions) check_pair(sys.geometry, at, p);
  VortexSystem out = sys;
  out.add(at, -total_vorticity(sys));
  return out;
}

}  // namespace surfvort
