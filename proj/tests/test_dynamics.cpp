#include <memory>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "surfvort/dynamics.hpp"
#include "surfvort/primitives.hpp"

using namespace surfvort;
using testing::random_plane_point;
using testing::random_unit;
using testing::rel_err;

namespace {

VortexSystem plane_system(std::initializer_list<std::pair<Vec3, double>> vortices) {
  VortexSystem s;
  s.geometry = Geometry::plane;
  for (const auto& [p, w] : vortices) s.add(p, w);
  return s;
}

VortexSystem sphere_system(std::initializer_list<std::pair<Vec3, double>> vortices,
                           Geometry g = Geometry::sphere) {
  VortexSystem s;
  s.geometry = g;
  for (const auto& [p, w] : vortices) s.add(p.normalized(), w);
  return s;
}

VortexSystem random_system(std::mt19937_64& rng, Geometry g, std::size_t n, bool balanced) {
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  VortexSystem s;
  s.geometry = g;
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double strength = w(rng);
    if (std::abs(strength) < 0.1) strength = 0.5;
    if (balanced && k + 1 == n) strength = -total;
    total += strength;
    s.add(g == Geometry::plane ? random_plane_point(rng) : random_unit(rng), strength);
  }
  return s;
}

// Minimum pair separation, used to skip near-collisions in random draws.
double min_separation(const VortexSystem& s) {
  double d = 1e300;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) d = std::min(d, (s.positions[i] - s.positions[j]).norm());
  }
  return d;
}

}  // namespace

TEST_CASE("planar vortex velocities: opposite pair, single vortex, co-rotating pair") {
  const auto kimura = planar_vortex_velocities(plane_system({{Vec3(1, 0, 0), -1.0}, {Vec3(-1, 0, 0), 1.0}}));
  for (const Vec3& u : kimura) CHECK((u - Vec3(0, 1.0 / kFourPi, 0)).norm() < 1e-15);

  CHECK(planar_vortex_velocities(plane_system({{Vec3(0.3, 0.2, 0), 2.0}}))[0] == Vec3::Zero());

  const auto co = planar_vortex_velocities(plane_system({{Vec3(1, 0, 0), 1.0}, {Vec3(-1, 0, 0), 1.0}}));
  CHECK((co[0] - Vec3(0, 1.0 / kFourPi, 0)).norm() < 1e-15);
  CHECK((co[1] - Vec3(0, -1.0 / kFourPi, 0)).norm() < 1e-15);

  CHECK_THROWS_AS(planar_vortex_velocities(plane_system({{Vec3(0, 0, 0), 1.0}, {Vec3(1e-10, 0, 0), 1.0}})),
                  SingularityError);
  CHECK_THROWS_AS(planar_vortex_velocities(sphere_system({{Vec3(1, 0, 0), 1.0}})), GeometryMismatchError);
}

TEST_CASE("planar field velocity") {
  const VortexSystem single = plane_system({{Vec3(0, 0, 0), 1.0}});
  CHECK((planar_field_velocity({1, 0}, single) - Vec3(0, 1.0 / kTwoPi, 0)).norm() < 1e-15);

  std::mt19937_64 rng(41);
  for (int k = 0; k < 100; ++k) {
    const Vec3 x = random_plane_point(rng, 5.0);
    const double r = x.norm();
    CHECK(planar_field_velocity(PlanePoint(x), single).norm() == doctest::Approx(1.0 / (kTwoPi * r)).epsilon(1e-12));
  }

  // On the perpendicular bisector of an opposite pair the flow is along the bisector.
  const VortexSystem pair = plane_system({{Vec3(1, 0, 0), -1.0}, {Vec3(-1, 0, 0), 1.0}});
  for (double y : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
    const Vec3 u = planar_field_velocity({0, y}, pair);
    CHECK(std::abs(u.x()) < 1e-16);
    CHECK(u.y() != 0.0);
  }
  CHECK_THROWS_AS(planar_field_velocity({1, 0}, pair), SingularityError);
}

TEST_CASE("sphere vortex velocities") {
  const auto u = sphere_vortex_velocities(sphere_system({{Vec3(1, 0, 0), -1.0}, {Vec3(0, 1, 0), 1.0}}));
  const Vec3 expected = Vec3(1, 0, 0).cross(Vec3(0, 1, 0)) / kFourPi;
  CHECK(rel_err(u[0], expected) < 1e-15);
  CHECK(rel_err(u[1], expected) < 1e-15);

  CHECK(sphere_vortex_velocities(sphere_system({{Vec3(0, 0, 1), 3.0}}))[0] == Vec3::Zero());

  // Close opposite pair: both move in the same direction, along +-(p1 x p2).
  const Vec3 p1 = Vec3(1, 0, 0.05).normalized(), p2 = Vec3(1, 0, -0.05).normalized();
  const auto close = sphere_vortex_velocities(sphere_system({{p1, 1.0}, {p2, -1.0}}));
  const Vec3 dir = p2.cross(p1).normalized();
  CHECK(rel_err(close[0], close[1]) < 1e-12);
  CHECK(std::abs(close[0].normalized().dot(dir)) == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(42);
  for (int k = 0; k < 100; ++k) {
    const VortexSystem s = random_system(rng, Geometry::sphere, 5, false);
    const auto v = sphere_vortex_velocities(s);
    for (std::size_t j = 0; j < s.size(); ++j) CHECK(std::abs(v[j].dot(s.positions[j])) < 1e-10);
  }
}

TEST_CASE("sphere field velocity") {
  const Vec3 p(0, 0, 1), x(1, 0, 0);
  const VortexSystem single = sphere_system({{p, 1.0}});
  CHECK(rel_err(sphere_field_velocity(SpherePoint(x), single), Vec3(x.cross(p) / kFourPi)) < 1e-15);

  // Two equal vortices at the poles: their contributions on the equator cancel.
  const VortexSystem poles = sphere_system({{Vec3(0, 0, 1), 1.0}, {Vec3(0, 0, -1), 1.0}});
  const Vec3 e = Vec3(0.6, 0.8, 0);
  const Vec3 u = sphere_field_velocity(SpherePoint(e), poles);
  CHECK(std::abs(u.z()) < 1e-16);
  CHECK(std::abs(u.dot(e)) < 1e-16);

  // Mirror-image vortices about the equator plane: the in-plane parts cancel
  // and the flow at (0, 1, 0) is purely meridional, -2a / (4 pi) along z.
  const Vec3 q = Vec3(0.3, 0, 1).normalized();
  const VortexSystem tilted = sphere_system({{q, 1.0}, {Vec3(q.x(), 0, -q.z()), 1.0}});
  const Vec3 ut = sphere_field_velocity(SpherePoint(0, 1, 0), tilted);
  CHECK(std::abs(ut.x()) < 1e-16);
  CHECK(std::abs(ut.y()) < 1e-16);
  CHECK(ut.z() == doctest::Approx(-2.0 * q.x() / kFourPi).epsilon(1e-14));

  CHECK_THROWS_AS(sphere_field_velocity(SpherePoint(p), single), SingularityError);
}

TEST_CASE("field velocities are linear in the vortex set") {
  std::mt19937_64 rng(43);
  for (Geometry g : {Geometry::plane, Geometry::sphere}) {
    for (int k = 0; k < 50; ++k) {
      const VortexSystem a = random_system(rng, g, 4, false);
      const VortexSystem b = random_system(rng, g, 3, false);
      VortexSystem both = a;
      for (std::size_t i = 0; i < b.size(); ++i) both.add(b.positions[i], b.strengths[i]);
      const Vec3 x = g == Geometry::plane ? random_plane_point(rng) : random_unit(rng);
      auto field = [&](const VortexSystem& s) {
        return g == Geometry::plane ? planar_field_velocity(PlanePoint(x), s) : sphere_field_velocity(SpherePoint(x), s);
      };
      const Vec3 sum = field(a) + field(b);
      CHECK((field(both) - sum).norm() <= 1e-12 * std::max(1.0, sum.norm()));
    }
  }
}

TEST_CASE("velocities are minus the symplectic gradient of the energy over the strength") {
  // Finite differences of E in p_k, rotated with the kernel's symplectic
  // operator: -n x on the plane and p x on the sphere.
  std::mt19937_64 rng(44);
  const double h = 1e-6;
  double worst = 0.0;
  for (Geometry g : {Geometry::plane, Geometry::sphere}) {
    int tested = 0;
    while (tested < 100) {
      VortexSystem s = random_system(rng, g, 3 + rng() % 3, false);
      if (min_separation(s) < 0.05) continue;
      ++tested;
      const auto u = g == Geometry::plane ? planar_vortex_velocities(s) : sphere_vortex_velocities(s);
      for (std::size_t k = 0; k < s.size(); ++k) {
        const Vec3 p = s.positions[k];
        Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY();
        if (g == Geometry::sphere) {
          const Vec3 seed = std::abs(p.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
          e1 = (seed - seed.dot(p) * p).normalized();
          e2 = p.cross(e1);
        }
        Vec3 grad = Vec3::Zero();
        for (const Vec3& e : {e1, e2}) {
          VortexSystem plus = s, minus = s;
          plus.positions[k] = p + h * e;
          minus.positions[k] = p - h * e;
          if (g == Geometry::sphere) {
            plus.positions[k].normalize();
            minus.positions[k].normalize();
          }
          grad += e * (kinetic_energy(plus) - kinetic_energy(minus)) / (2 * h);
        }
        const Vec3 sgrad = g == Geometry::plane ? Vec3(-kPlaneNormal.cross(grad)) : Vec3(p.cross(grad));
        worst = std::max(worst, rel_err(u[k], Vec3(-sgrad / s.strengths[k])));
      }
    }
  }
  MESSAGE("worst relative error " << worst);
  CHECK(worst < 1e-5);
}

TEST_CASE("stream function") {
  const VortexSystem single = plane_system({{Vec3(0.5, 0.5, 0), 1.0}});
  CHECK(stream_function(Vec3(1.5, 0.5, 0), single) == 0.0);
  const VortexSystem pair = plane_system({{Vec3(1, 0, 0), -1.0}, {Vec3(-1, 0, 0), 1.0}});
  CHECK(std::abs(stream_function(Vec3(0, 0.8, 0), pair)) < 1e-16);
  const VortexSystem on_sphere = sphere_system({{Vec3(0, 0, 1), 1.0}});
  CHECK(stream_function(Vec3(1, 0, 0), on_sphere) == doctest::Approx(std::log(2.0) / kFourPi).epsilon(1e-14));
  CHECK_THROWS_AS(stream_function(Vec3(0.5, 0.5, 0), single), SingularityError);
  VortexSystem surface = on_sphere;
  surface.geometry = Geometry::closed_surface;
  CHECK_THROWS_AS(stream_function(Vec3(1, 0, 0), surface), GeometryMismatchError);
}

TEST_CASE("kinetic energy") {
  CHECK(kinetic_energy(plane_system({{Vec3(0.5, 0, 0), 1.0}, {Vec3(-0.5, 0, 0), -1.0}})) == 0.0);
  CHECK(kinetic_energy(plane_system({{Vec3(1, 0, 0), -1.0}, {Vec3(-1, 0, 0), 1.0}})) ==
        doctest::Approx(-0.1103178).epsilon(1e-7));
  CHECK(kinetic_energy(plane_system({{Vec3(1, 0, 0), -1.0}})) == 0.0);
  CHECK(kinetic_energy(sphere_system({{Vec3(1, 0, 0), 2.0}, {Vec3(0, 1, 0), 3.0}})) ==
        doctest::Approx(-6.0 * std::log(2.0) / kFourPi).epsilon(1e-14));
}

TEST_CASE("total vorticity is summed with compensation") {
  VortexSystem s = plane_system({{Vec3(0, 0, 0), 1e16}, {Vec3(1, 0, 0), 1.0}, {Vec3(2, 0, 0), -1e16}});
  CHECK(total_vorticity(s) == 1.0);
  // Balance is relative to the total magnitude, so this counts as balanced.
  CHECK(is_balanced(s));
  CHECK_FALSE(is_balanced(plane_system({{Vec3(0, 0, 0), 1.0}, {Vec3(1, 0, 0), -1.0 + 1e-9}})));
  CHECK(is_balanced(plane_system({{Vec3(0, 0, 0), 0.1}, {Vec3(1, 0, 0), 0.2}, {Vec3(2, 0, 0), -0.3}})));
}

TEST_CASE("validate") {
  CHECK_NOTHROW(validate(plane_system({{Vec3(0, 0, 0), 1.0}, {Vec3(1, 0, 0), 1.0}})));
  CHECK_THROWS_AS(validate(plane_system({{Vec3(0, 0, 1), 1.0}})), GeometryMismatchError);
  CHECK_THROWS_AS(validate(plane_system({{Vec3(0, 0, 0), std::nan("")}})), GeometryMismatchError);
  CHECK_THROWS_AS(validate(plane_system({{Vec3(0, 0, 0), 1.0}, {Vec3(0, 0, 0), 1.0}})), SingularityError);
  VortexSystem s;
  s.geometry = Geometry::sphere;
  s.add(Vec3(2, 0, 0), 1.0);
  CHECK_THROWS_AS(validate(s), GeometryMismatchError);
  s.strengths.push_back(2.0);
  CHECK_THROWS_AS(validate(s), GeometryMismatchError);
}

TEST_CASE("balance_vorticity") {
  const VortexSystem zero = sphere_system({{Vec3(1, 0, 0), 1.0}, {Vec3(0, 1, 0), -1.0}});
  CHECK(balance_vorticity(zero, BalanceMode::reject()).strengths == zero.strengths);
  CHECK(balance_vorticity(zero, BalanceMode::counter_vortex(Vec3(0, 0, 1))).size() == 2);

  const VortexSystem taylor = sphere_system({{Vec3(1, 0, 0), 0.2}, {Vec3(1, 0.1, 0), 0.3}, {Vec3(1, 0, 0.1), 0.5}});
  const VortexSystem balanced = balance_vorticity(taylor, BalanceMode::counter_vortex(Vec3(-2, 0, 0)));
  REQUIRE(balanced.size() == 4);
  CHECK(balanced.strengths[3] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(balanced.positions[3] == Vec3(-1, 0, 0));
  CHECK(is_balanced(balanced));

  CHECK_THROWS_AS(balance_vorticity(sphere_system({{Vec3(1, 0, 0), 1.0}}), BalanceMode::reject()), VorticityError);
  CHECK_THROWS_AS(balance_vorticity(taylor, BalanceMode::counter_vortex(Vec3(2, 0, 0))), SingularityError);
}

TEST_CASE("closed-surface velocities reduce to the sphere with the identity atlas") {
  const AtlasField field(make_identity_atlas(make_icosphere(3)));
  std::mt19937_64 rng(45);
  for (int k = 0; k < 20; ++k) {
    VortexSystem s = random_system(rng, Geometry::closed_surface, 5, true);
    REQUIRE(is_balanced(s));
    VortexSystem on_sphere = s;
    on_sphere.geometry = Geometry::sphere;
    const auto expected = sphere_vortex_velocities(on_sphere);
    for (double sign : {1.0, -1.0}) {
      const auto u = surface_vortex_velocities(s, field, sign);
      for (std::size_t j = 0; j < s.size(); ++j) {
        CHECK((u[j] - expected[j]).norm() < 1e-12);
        CHECK(std::abs(u[j].dot(s.positions[j])) < 1e-10);
      }
    }
    const Vec3 x = random_unit(rng);
    CHECK((surface_field_velocity(SpherePoint(x), s, field) - sphere_field_velocity(SpherePoint(x), on_sphere)).norm() <
          1e-12);
    CHECK(metric_hamiltonian(s, field) == kinetic_energy(on_sphere));
  }
}

TEST_CASE("closed-surface velocities on a radius-2 sphere are scaled by 1/h^2") {
  const AtlasField field(build_conformal_atlas(make_icosphere(4, 2.0)));
  std::mt19937_64 rng(46);
  for (int k = 0; k < 10; ++k) {
    VortexSystem s = random_system(rng, Geometry::closed_surface, 4, true);
    VortexSystem on_sphere = s;
    on_sphere.geometry = Geometry::sphere;
    const auto expected = sphere_vortex_velocities(on_sphere);
    const auto u = surface_vortex_velocities(s, field, 1.0);
    for (std::size_t j = 0; j < s.size(); ++j) CHECK(rel_err(u[j], Vec3(expected[j] / 4.0)) < 1e-9);

    const Vec3 x = random_unit(rng);
    const Vec3 uf = surface_field_velocity(SpherePoint(x), s, field);
    CHECK(rel_err(uf, Vec3(sphere_field_velocity(SpherePoint(x), on_sphere) / 4.0)) < 1e-9);
    CHECK(std::abs(uf.dot(x)) < 1e-12);

    double w2 = 0.0;
    for (double w : s.strengths) w2 += w * w;
    CHECK(metric_hamiltonian(s, field) ==
          doctest::Approx(kinetic_energy(on_sphere) - std::log(2.0) * w2 / kFourPi).epsilon(1e-9));
  }
}

TEST_CASE("closed-surface self term and guards") {
  VortexSystem s = sphere_system({{Vec3(1, 0, 0), 1.0}, {Vec3(0, 1, 0), -1.0}}, Geometry::closed_surface);
  ConformalSample a, b;
  a.h = 1.5;
  a.grad_h = Vec3(0, 0, 0.2);
  b.h = 0.8;
  const std::vector<ConformalSample> samples{a, b};
  const auto plus = surface_vortex_velocities(s, samples, 1.0);
  const auto minus = surface_vortex_velocities(s, samples, -1.0);
  const Vec3 pair = kernel::sphere_pair(s.positions[0], s.positions[1]) * s.strengths[1];
  const Vec3 self = (1.0 / 1.5) * s.positions[0].cross(a.grad_h);
  CHECK(rel_err(plus[0], Vec3((pair + self) / (kFourPi * 1.5 * 1.5))) < 1e-15);
  CHECK(rel_err(minus[0], Vec3((pair - self) / (kFourPi * 1.5 * 1.5))) < 1e-15);
  CHECK(rel_err(plus[1], minus[1]) < 1e-15);

  std::vector<double> h{2.0, 2.0};
  CHECK(metric_hamiltonian(s, h) == doctest::Approx(kinetic_energy(s) - 2.0 * std::log(2.0) / kFourPi));

  VortexSystem unbalanced = s;
  unbalanced.strengths[1] = -0.5;
  CHECK_THROWS_AS(surface_vortex_velocities(unbalanced, samples, 1.0), VorticityError);
  CHECK_THROWS_AS(metric_hamiltonian(unbalanced, h), VorticityError);
  CHECK_THROWS_AS(surface_field_velocity(SpherePoint(0, 0, 1), unbalanced, a), VorticityError);
  CHECK_THROWS_AS(surface_field_velocity(SpherePoint(1, 0, 0), s, a), SingularityError);
  CHECK_THROWS_AS(surface_vortex_velocities(s, std::vector<ConformalSample>{a}, 1.0), GeometryMismatchError);
}
