#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "surfvort/conformal.hpp"
#include "surfvort/dynamics.hpp"
#include "surfvort/integrator.hpp"

namespace surfvort {

/// Malformed or inconsistent scenario input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A mesh given either as an OBJ path or as a built-in primitive.
struct MeshSpec {
  std::filesystem::path path;  ///< empty for primitives
  std::string primitive;       ///< icosphere | ellipsoid | blob | tetrahedron
  int subdivisions = 4;
  double radius = 1.0;
  std::array<double, 3> axes{1.0, 1.0, 1.0};

  std::string describe() const;
};

TriangleMesh load_mesh(const MeshSpec& spec);

struct StrengthLaw {
  enum class Kind { constant, uniform };
  Kind kind = Kind::constant;
  double value = 1.0;
  double low = 0.0;
  double high = 0.0;
};

/// One explicit vortex. On a mesh, `position` is a point of M (snapped to the
/// closest surface point) unless `triangle` is set, in which case (s, t) are
/// barycentric coordinates in that triangle.
struct PointVortexSpec {
  Vec3 position = Vec3::Zero();
  std::optional<Index> triangle;
  double s = 0.0;
  double t = 0.0;
  double strength = 0.0;
};

/// `count` vortices uniform in a disc (plane) or spherical cap of angular
/// radius `radius` (sphere; on a mesh the cap is taken on S^2 around the image
/// of `center`).
struct CloudSpec {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
  std::size_t count = 0;
  StrengthLaw strength;
  std::uint64_t seed = 0;
};

/// Area-weighted samples on the whole mesh (mesh geometry only).
struct SurfaceSampleSpec {
  std::size_t count = 0;
  StrengthLaw strength;
  std::uint64_t seed = 0;
};

struct BalanceSpec {
  enum class Kind { reject, counter_vortex, antipode };
  Kind kind = Kind::reject;
  Vec3 position = Vec3::Zero();  ///< counter_vortex: point of the plane, S^2 or M
};

struct OutputSpec {
  bool trajectories = true;
  bool energy = true;
  bool sphere_map = true;  ///< sphere.obj (mesh geometry)
  bool factors = true;     ///< factors.csv and grad_h.csv (mesh geometry)
  std::size_t record_every = 1;
  std::string field_grid;  ///< empty: no field.csv during `run`
};

enum class ScenarioGeometry { plane, sphere, mesh };

struct Scenario {
  std::string name;
  ScenarioGeometry geometry = ScenarioGeometry::plane;
  std::optional<MeshSpec> mesh;
  std::vector<PointVortexSpec> vortices;
  std::vector<CloudSpec> clouds;
  std::vector<SurfaceSampleSpec> surface_samples;
  BalanceSpec balance;
  IntegratorConfig integrator;
  CmcfParams conformal;
  double self_term_sign = 1.0;
  OutputSpec outputs;
};

/// Parses and validates a scenario document. Relative mesh paths are resolved
/// against `base_dir`. Throws ConfigError.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Strength of the k-th vortex of a sampler.
double draw_strength(const StrengthLaw& law, std::uint64_t raw);

/// Uniform in [0, 1) from a 64-bit draw (53 significant bits).
double unit_uniform(std::uint64_t raw);

/// Cloud positions: uniform in a disc (z = 0) or a spherical cap.
std::vector<Vec3> cloud_positions(const CloudSpec& cloud, bool on_sphere, std::uint64_t seed);

/// Everything `run` and `field` need once the scenario has been resolved.
struct PreparedScenario {
  Scenario scenario;
  Geometry geometry = Geometry::plane;
  std::optional<TriangleMesh> mesh;   ///< the surface M (mesh geometry)
  std::string mesh_sha1;              ///< git blob hash of the OBJ bytes
  std::shared_ptr<const AtlasField> field;
  VortexSystem system;
  std::unique_ptr<VelocityModel> model;
};

/// Loads the mesh, validates its topology (TopologyError), builds the
/// conformal atlas, places and balances the vortices. Non-convergence of the
/// flow is reported through `field->atlas().converged`; callers decide.
PreparedScenario prepare_scenario(const Scenario& scenario);

/// Stage 1 of prepare_scenario for mesh scenarios: mesh + atlas only.
struct PreparedMesh {
  TriangleMesh mesh;
  std::string sha1;
  ConformalAtlas atlas;
};
PreparedMesh prepare_mesh(const MeshSpec& spec, const CmcfParams& params);

/// Builds the vortex system (placement + balance) on a prepared geometry.
VortexSystem place_vortices(const Scenario& scenario, Geometry geometry, const AtlasField* field);

}  // namespace surfvort
