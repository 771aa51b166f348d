#include "surfvort/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "surfvort/format.hpp"
#include "surfvort/hash.hpp"
#include "surfvort/primitives.hpp"

namespace surfvort {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : obj.items()) {
    if (!allowed.contains(item.key())) fail(where, "unknown key \"" + item.key() + "\"");
  }
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "must be finite");
  return x;
}

std::uint64_t get_count(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(where, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

Vec3 get_point(const json& v, const std::string& where) {
  if (!v.is_array() || (v.size() != 2 && v.size() != 3)) fail(where, "expected [x, y] or [x, y, z]");
  Vec3 p = Vec3::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = get_number(v[i], where);
  return p;
}

StrengthLaw get_strength(const json& v, const std::string& where) {
  StrengthLaw law;
  if (v.is_number()) {
    law.value = get_number(v, where);
    return law;
  }
  allow_keys(v, where, {"uniform"});
  const json& range = v.at("uniform");
  if (!range.is_array() || range.size() != 2) fail(where + ".uniform", "expected [low, high]");
  law.kind = StrengthLaw::Kind::uniform;
  law.low = get_number(range[0], where + ".uniform");
  law.high = get_number(range[1], where + ".uniform");
  if (!(law.low <= law.high)) fail(where + ".uniform", "low must not exceed high");
  return law;
}

MeshSpec get_mesh(const json& v, const std::filesystem::path& base_dir) {
  MeshSpec spec;
  if (v.is_string()) {
    spec.path = v.get<std::string>();
    if (spec.path.is_relative()) spec.path = base_dir / spec.path;
    if (!std::filesystem::exists(spec.path)) fail("mesh", "file not found: " + spec.path.string());
    return spec;
  }
  allow_keys(v, "mesh", {"primitive", "subdivisions", "radius", "axes"});
  if (!v.contains("primitive")) fail("mesh", "expected a path or an object with \"primitive\"");
  spec.primitive = get_string(v.at("primitive"), "mesh.primitive");
  static const std::set<std::string> known{"icosphere", "ellipsoid", "blob", "tetrahedron"};
  if (!known.contains(spec.primitive)) fail("mesh.primitive", "unknown primitive \"" + spec.primitive + "\"");
  if (v.contains("subdivisions")) {
    const auto n = get_count(v.at("subdivisions"), "mesh.subdivisions");
    if (n > 7) fail("mesh.subdivisions", "at most 7");
    spec.subdivisions = static_cast<int>(n);
  }
  if (v.contains("radius")) {
    spec.radius = get_number(v.at("radius"), "mesh.radius");
    if (!(spec.radius > 0.0)) fail("mesh.radius", "must be positive");
  }
  if (v.contains("axes")) {
    const Vec3 a = get_point(v.at("axes"), "mesh.axes");
    if (!(a.minCoeff() > 0.0)) fail("mesh.axes", "must be positive");
    spec.axes = {a.x(), a.y(), a.z()};
  }
  return spec;
}

}  // namespace

std::string MeshSpec::describe() const {
  if (!path.empty()) return path.string();
  std::string out = primitive + "(subdivisions=" + std::to_string(subdivisions);
  if (primitive == "icosphere") out += ", radius=" + format_double(radius);
  if (primitive == "ellipsoid") {
    out += ", axes=" + format_double(axes[0]) + "," + format_double(axes[1]) + "," + format_double(axes[2]);
  }
  return out + ")";
}

TriangleMesh load_mesh(const MeshSpec& spec) {
  if (!spec.path.empty()) return load_obj(spec.path);
  if (spec.primitive == "icosphere") return make_icosphere(spec.subdivisions, spec.radius);
  if (spec.primitive == "ellipsoid") {
    return make_ellipsoid(spec.subdivisions, spec.axes[0], spec.axes[1], spec.axes[2]);
  }
  if (spec.primitive == "blob") return make_blob(spec.subdivisions);
  if (spec.primitive == "tetrahedron") return make_tetrahedron();
  throw ConfigError("unknown mesh primitive \"" + spec.primitive + "\"");
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  allow_keys(doc, "scenario",
             {"name", "geometry", "mesh", "vortices", "clouds", "surface_samples", "balance", "integrator",
              "conformal", "self_term_sign", "diagnostics_every", "outputs"});
  Scenario sc;
  if (doc.contains("name")) sc.name = get_string(doc.at("name"), "name");

  if (!doc.contains("geometry")) fail("scenario", "missing \"geometry\"");
  const std::string geometry = get_string(doc.at("geometry"), "geometry");
  if (geometry == "plane") {
    sc.geometry = ScenarioGeometry::plane;
  } else if (geometry == "sphere") {
    sc.geometry = ScenarioGeometry::sphere;
  } else if (geometry == "mesh") {
    sc.geometry = ScenarioGeometry::mesh;
  } else {
    fail("geometry", "expected \"plane\", \"sphere\" or \"mesh\"");
  }
  if (doc.contains("mesh")) {
    if (sc.geometry != ScenarioGeometry::mesh) fail("mesh", "only valid with geometry \"mesh\"");
    sc.mesh = get_mesh(doc.at("mesh"), base_dir);
  } else if (sc.geometry == ScenarioGeometry::mesh) {
    fail("scenario", "geometry \"mesh\" requires \"mesh\"");
  }

  if (doc.contains("vortices")) {
    const json& list = doc.at("vortices");
    if (!list.is_array()) fail("vortices", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "vortices[" + std::to_string(i) + "]";
      const json& v = list[i];
      allow_keys(v, where, {"position", "triangle", "bary", "strength"});
      PointVortexSpec spec;
      if (!v.contains("strength")) fail(where, "missing \"strength\"");
      spec.strength = get_number(v.at("strength"), where + ".strength");
      if (v.contains("triangle")) {
        if (sc.geometry != ScenarioGeometry::mesh) fail(where, "\"triangle\" is only valid on a mesh");
        if (v.contains("position")) fail(where, "give either \"position\" or \"triangle\", not both");
        spec.triangle = static_cast<Index>(get_count(v.at("triangle"), where + ".triangle"));
        if (!v.contains("bary")) fail(where, "\"triangle\" requires \"bary\": [s, t]");
        const json& b = v.at("bary");
        if (!b.is_array() || b.size() != 2) fail(where + ".bary", "expected [s, t]");
        spec.s = get_number(b[0], where + ".bary");
        spec.t = get_number(b[1], where + ".bary");
      } else {
        if (!v.contains("position")) fail(where, "missing \"position\"");
        if (v.contains("bary")) fail(where, "\"bary\" requires \"triangle\"");
        spec.position = get_point(v.at("position"), where + ".position");
      }
      sc.vortices.push_back(spec);
    }
  }

  if (doc.contains("clouds")) {
    const json& list = doc.at("clouds");
    if (!list.is_array()) fail("clouds", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "clouds[" + std::to_string(i) + "]";
      const json& v = list[i];
      allow_keys(v, where, {"center", "radius", "count", "strength", "seed"});
      for (const char* key : {"center", "radius", "count", "strength"}) {
        if (!v.contains(key)) fail(where, std::string("missing \"") + key + "\"");
      }
      CloudSpec cloud;
      cloud.center = get_point(v.at("center"), where + ".center");
      cloud.radius = get_number(v.at("radius"), where + ".radius");
      if (!(cloud.radius > 0.0)) fail(where + ".radius", "must be positive");
      cloud.count = get_count(v.at("count"), where + ".count");
      cloud.strength = get_strength(v.at("strength"), where + ".strength");
      if (v.contains("seed")) cloud.seed = get_count(v.at("seed"), where + ".seed");
      sc.clouds.push_back(cloud);
    }
  }

  if (doc.contains("surface_samples")) {
    if (sc.geometry != ScenarioGeometry::mesh) fail("surface_samples", "only valid with geometry \"mesh\"");
    const json& list = doc.at("surface_samples");
    if (!list.is_array()) fail("surface_samples", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "surface_samples[" + std::to_string(i) + "]";
      const json& v = list[i];
      allow_keys(v, where, {"count", "strength", "seed"});
      if (!v.contains("count") || !v.contains("strength")) fail(where, "requires \"count\" and \"strength\"");
      SurfaceSampleSpec spec;
      spec.count = get_count(v.at("count"), where + ".count");
      spec.strength = get_strength(v.at("strength"), where + ".strength");
      if (v.contains("seed")) spec.seed = get_count(v.at("seed"), where + ".seed");
      sc.surface_samples.push_back(spec);
    }
  }

  if (doc.contains("balance")) {
    const json& b = doc.at("balance");
    if (b.is_string()) {
      const std::string mode = b.get<std::string>();
      if (mode == "reject") {
        sc.balance.kind = BalanceSpec::Kind::reject;
      } else if (mode == "antipode") {
        if (sc.geometry == ScenarioGeometry::plane) fail("balance", "\"antipode\" needs a sphere or mesh");
        sc.balance.kind = BalanceSpec::Kind::antipode;
      } else {
        fail("balance", "expected \"reject\", \"antipode\" or {\"counter_vortex\": [x, y, z]}");
      }
    } else {
      allow_keys(b, "balance", {"counter_vortex"});
      sc.balance.kind = BalanceSpec::Kind::counter_vortex;
      sc.balance.position = get_point(b.at("counter_vortex"), "balance.counter_vortex");
    }
  }

  if (doc.contains("integrator")) {
    const json& v = doc.at("integrator");
    allow_keys(v, "integrator", {"dt", "steps", "sphere_rule"});
    if (v.contains("dt")) sc.integrator.dt = get_number(v.at("dt"), "integrator.dt");
    if (v.contains("steps")) sc.integrator.steps = get_count(v.at("steps"), "integrator.steps");
    if (v.contains("sphere_rule")) {
      const std::string rule = get_string(v.at("sphere_rule"), "integrator.sphere_rule");
      if (rule == "lie_group") {
        sc.integrator.sphere_rule = SphereStageRule::lie_group;
      } else if (rule == "projected_tangents") {
        sc.integrator.sphere_rule = SphereStageRule::projected_tangents;
      } else {
        fail("integrator.sphere_rule", "expected \"lie_group\" or \"projected_tangents\"");
      }
    }
  }
  if (!(sc.integrator.dt > 0.0)) fail("integrator.dt", "must be positive");
  sc.integrator.advection = sc.geometry == ScenarioGeometry::plane ? Advection::planar : Advection::rotational;

  if (doc.contains("conformal")) {
    const json& v = doc.at("conformal");
    allow_keys(v, "conformal", {"delta", "tol", "max_iters", "mass"});
    if (v.contains("delta")) sc.conformal.delta = get_number(v.at("delta"), "conformal.delta");
    if (v.contains("tol")) sc.conformal.tol = get_number(v.at("tol"), "conformal.tol");
    if (v.contains("max_iters")) {
      sc.conformal.max_iters = static_cast<int>(get_count(v.at("max_iters"), "conformal.max_iters"));
    }
    if (v.contains("mass")) {
      const std::string mass = get_string(v.at("mass"), "conformal.mass");
      if (mass == "voronoi") {
        sc.conformal.mass = CmcfParams::Mass::voronoi;
      } else if (mass == "lumped") {
        sc.conformal.mass = CmcfParams::Mass::lumped;
      } else if (mass == "consistent") {
        sc.conformal.mass = CmcfParams::Mass::consistent;
      } else {
        fail("conformal.mass", "expected \"voronoi\", \"lumped\" or \"consistent\"");
      }
    }
  }
  if (!(sc.conformal.delta > 0.0)) fail("conformal.delta", "must be positive");
  if (!(sc.conformal.tol > 0.0)) fail("conformal.tol", "must be positive");

  if (doc.contains("self_term_sign")) {
    sc.self_term_sign = get_number(doc.at("self_term_sign"), "self_term_sign");
    if (sc.self_term_sign != 1.0 && sc.self_term_sign != -1.0) fail("self_term_sign", "must be +1 or -1");
  }
  if (doc.contains("diagnostics_every")) {
    sc.integrator.diagnostics_every = get_count(doc.at("diagnostics_every"), "diagnostics_every");
    if (sc.integrator.diagnostics_every == 0) fail("diagnostics_every", "must be at least 1");
  }

  if (doc.contains("outputs")) {
    const json& v = doc.at("outputs");
    allow_keys(v, "outputs", {"trajectories", "energy", "sphere_map", "factors", "record_every", "field_grid"});
    if (v.contains("trajectories")) sc.outputs.trajectories = get_bool(v.at("trajectories"), "outputs.trajectories");
    if (v.contains("energy")) sc.outputs.energy = get_bool(v.at("energy"), "outputs.energy");
    if (v.contains("sphere_map")) sc.outputs.sphere_map = get_bool(v.at("sphere_map"), "outputs.sphere_map");
    if (v.contains("factors")) sc.outputs.factors = get_bool(v.at("factors"), "outputs.factors");
    if (v.contains("record_every")) {
      sc.outputs.record_every = get_count(v.at("record_every"), "outputs.record_every");
      if (sc.outputs.record_every == 0) fail("outputs.record_every", "must be at least 1");
    }
    if (v.contains("field_grid")) sc.outputs.field_grid = get_string(v.at("field_grid"), "outputs.field_grid");
  }
  sc.integrator.record_every = sc.outputs.record_every;

  if (sc.vortices.empty() && sc.clouds.empty() && sc.surface_samples.empty()) {
    fail("scenario", "no vortices");
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return parse_scenario(doc, path.parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

double unit_uniform(std::uint64_t raw) { return static_cast<double>(raw >> 11) * 0x1.0p-53; }

double draw_strength(const StrengthLaw& law, std::uint64_t raw) {
  if (law.kind == StrengthLaw::Kind::constant) return law.value;
  return law.low + (law.high - law.low) * unit_uniform(raw);
}

std::vector<Vec3> cloud_positions(const CloudSpec& cloud, bool on_sphere, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec3> out;
  out.reserve(cloud.count);
  if (!on_sphere) {
    for (std::size_t k = 0; k < cloud.count; ++k) {
      const double r = cloud.radius * std::sqrt(unit_uniform(rng()));
      const double phi = kTwoPi * unit_uniform(rng());
      out.emplace_back(cloud.center.x() + r * std::cos(phi), cloud.center.y() + r * std::sin(phi), 0.0);
    }
    return out;
  }
  const Vec3 c = cloud.center.normalized();
  const Vec3 a = std::abs(c.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = (a - a.dot(c) * c).normalized();
  const Vec3 e2 = c.cross(e1);
  const double cap = std::min(cloud.radius, kPi);
  for (std::size_t k = 0; k < cloud.count; ++k) {
    const double z = 1.0 - unit_uniform(rng()) * (1.0 - std::cos(cap));
    const double phi = kTwoPi * unit_uniform(rng());
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    out.push_back((z * c + rho * (std::cos(phi) * e1 + std::sin(phi) * e2)).normalized());
  }
  return out;
}

PreparedMesh prepare_mesh(const MeshSpec& spec, const CmcfParams& params) {
  PreparedMesh out;
  std::string bytes;
  if (!spec.path.empty()) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mesh " + spec.path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    bytes = buf.str();
    std::istringstream text(bytes);
    out.mesh = read_obj(text);
  } else {
    out.mesh = load_mesh(spec);
    std::ostringstream buf;
    write_obj(buf, out.mesh);
    bytes = buf.str();
  }
  out.sha1 = git_blob_sha1(bytes);
  out.atlas = build_conformal_atlas(out.mesh, params);
  return out;
}

namespace {

// Image on S^2 of a point of M: closest surface point, same barycentric
// location on the sphere mesh, radially projected.
Vec3 surface_point_to_sphere(const AtlasField& field, const Vec3& p) {
  const SurfaceLocation loc = closest_location(field.atlas().source_mesh, p);
  return position_of(field.atlas().sphere_mesh, loc).normalized();
}

}  // namespace

VortexSystem place_vortices(const Scenario& sc, Geometry geometry, const AtlasField* field) {
  VortexSystem sys;
  sys.geometry = geometry;
  const bool on_sphere = geometry != Geometry::plane;

  for (std::size_t i = 0; i < sc.vortices.size(); ++i) {
    const PointVortexSpec& v = sc.vortices[i];
    const std::string where = "vortices[" + std::to_string(i) + "]";
    Vec3 p;
    if (geometry == Geometry::closed_surface) {
      if (v.triangle) {
        const auto& sphere = field->atlas().sphere_mesh;
        if (*v.triangle >= static_cast<Index>(sphere.triangle_count())) fail(where, "triangle out of range");
        try {
          p = position_of(sphere, SurfaceLocation(*v.triangle, v.s, v.t)).normalized();
        } catch (const std::invalid_argument& e) {
          fail(where, e.what());
        }
      } else {
        p = surface_point_to_sphere(*field, v.position);
      }
    } else if (on_sphere) {
      if (v.position.norm() == 0.0) fail(where, "position must be nonzero on the sphere");
      p = v.position.normalized();
    } else {
      if (v.position.z() != 0.0) fail(where, "planar positions need z = 0");
      p = v.position;
    }
    sys.add(p, v.strength);
  }

  for (std::size_t i = 0; i < sc.clouds.size(); ++i) {
    CloudSpec cloud = sc.clouds[i];
    if (geometry == Geometry::closed_surface) cloud.center = surface_point_to_sphere(*field, cloud.center);
    if (on_sphere && cloud.center.norm() == 0.0) fail("clouds[" + std::to_string(i) + "]", "center must be nonzero");
    const auto points = cloud_positions(cloud, on_sphere, cloud.seed);
    std::mt19937_64 strengths(cloud.seed ^ 0x9e3779b97f4a7c15ULL);
    for (const Vec3& p : points) sys.add(p, draw_strength(cloud.strength, strengths()));
  }

  for (const SurfaceSampleSpec& spec : sc.surface_samples) {
    const auto& atlas = field->atlas();
    const auto areas = face_areas(atlas.source_mesh);
    const auto locs = sample_points(atlas.sphere_mesh, areas, spec.count, spec.seed);
    std::mt19937_64 strengths(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    for (const auto& loc : locs) {
      sys.add(position_of(atlas.sphere_mesh, loc).normalized(), draw_strength(spec.strength, strengths()));
    }
  }

  switch (sc.balance.kind) {
    case BalanceSpec::Kind::reject:
      break;
    case BalanceSpec::Kind::counter_vortex: {
      Vec3 at = sc.balance.position;
      if (geometry == Geometry::closed_surface) at = surface_point_to_sphere(*field, at);
      if (on_sphere && at.norm() == 0.0) fail("balance.counter_vortex", "must be nonzero on the sphere");
      try {
        sys = balance_vorticity(sys, BalanceMode::counter_vortex(at));
      } catch (const SingularityError&) {
        fail("balance.counter_vortex", "coincides with a vortex");
      }
      break;
    }
    case BalanceSpec::Kind::antipode: {
      Vec3 mean = Vec3::Zero();
      for (std::size_t i = 0; i < sys.size(); ++i) mean += std::abs(sys.strengths[i]) * sys.positions[i];
      if (mean.norm() == 0.0) fail("balance", "antipode undefined: vortices have no mean direction");
      try {
        sys = balance_vorticity(sys, BalanceMode::counter_vortex(-mean.normalized()));
      } catch (const SingularityError&) {
        fail("balance", "antipode coincides with a vortex");
      }
      break;
    }
  }

  if (geometry == Geometry::closed_surface && !is_balanced(sys)) {
    throw ConfigError("total vorticity " + format_double(total_vorticity(sys)) +
                      " must vanish on a closed surface; use a counter-vortex balance");
  }
  try {
    validate(sys);
  } catch (const SingularityError& e) {
    throw ConfigError(std::string("initial vortices coincide: ") + e.what());
  } catch (const GeometryMismatchError& e) {
    throw ConfigError(e.what());
  }
  return sys;
}

PreparedScenario prepare_scenario(const Scenario& sc) {
  PreparedScenario out;
  out.scenario = sc;
  switch (sc.geometry) {
    case ScenarioGeometry::plane:
      out.geometry = Geometry::plane;
      out.model = std::make_unique<PlanarModel>();
      break;
    case ScenarioGeometry::sphere:
      out.geometry = Geometry::sphere;
      out.model = std::make_unique<SphereModel>();
      break;
    case ScenarioGeometry::mesh: {
      out.geometry = Geometry::closed_surface;
      PreparedMesh pm = prepare_mesh(*sc.mesh, sc.conformal);
      out.mesh = std::move(pm.mesh);
      out.mesh_sha1 = std::move(pm.sha1);
      out.field = std::make_shared<const AtlasField>(std::move(pm.atlas));
      out.model = std::make_unique<ClosedSurfaceModel>(out.field, sc.self_term_sign);
      break;
    }
  }
  out.system = place_vortices(sc, out.geometry, out.field.get());
  return out;
}

}  // namespace surfvort
