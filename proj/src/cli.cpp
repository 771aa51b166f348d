#include "surfvort/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "surfvort/format.hpp"
#include "surfvort/hash.hpp"
#include "surfvort/output.hpp"
#include "surfvort/primitives.hpp"
#include "surfvort/scenario.hpp"

namespace surfvort::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

const char* status_name(int code) {
  switch (code) {
    case kOk: return "ok";
    case kConfigError: return "config_error";
    case kTopologyRejected: return "topology_rejected";
    case kNotConverged: return "cmcf_not_converged";
    case kCollision: return "collision";
  }
  return "error";
}

ordered_json cmcf_json(const CmcfParams& p) {
  ordered_json j;
  j["delta"] = p.delta;
  j["tol"] = p.tol;
  j["max_iters"] = p.max_iters;
  j["mass"] = p.mass == CmcfParams::Mass::voronoi ? "voronoi"
              : p.mass == CmcfParams::Mass::lumped ? "lumped"
                                                   : "consistent";
  return j;
}

ordered_json atlas_json(const ConformalAtlas& atlas) {
  ordered_json j;
  j["iterations"] = atlas.iterations_used;
  j["sphericity_residual"] = atlas.sphericity_residual;
  j["converged"] = atlas.converged;
  return j;
}

void write_manifest(const fs::path& dir, const ordered_json& manifest) {
  std::ofstream out = open_output(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

void write_conformal_outputs(const fs::path& dir, const ConformalAtlas& atlas, bool sphere_map, bool factors) {
  if (sphere_map) {
    std::ofstream out = open_output(dir / "sphere.obj");
    write_obj(out, atlas.sphere_mesh);
  }
  if (factors) {
    std::ofstream f = open_output(dir / "factors.csv");
    write_factors_csv(f, atlas);
    std::ofstream g = open_output(dir / "grad_h.csv");
    write_grad_h_csv(g, atlas);
  }
}

double relative_drift(double initial, double final_value) {
  const double diff = std::abs(final_value - initial);
  return initial == 0.0 ? diff : diff / std::abs(initial);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string scenario;
  std::string out_dir = "surfvort_out";
  std::optional<int> self_term_sign;
};

int command_run(const RunOptions& opt, std::ostream& err) {
  const fs::path dir = opt.out_dir;
  ordered_json manifest;
  manifest["tool"] = "surfvort";
  manifest["version"] = kVersion;
  manifest["command"] = "run";
  manifest["scenario"] = opt.scenario;

  auto finish = [&](int code, const std::string& message) {
    manifest["status"] = status_name(code);
    manifest["exit_code"] = code;
    if (!message.empty()) manifest["message"] = message;
    try {
      write_manifest(dir, manifest);
    } catch (const std::exception& e) {
      err << "surfvort: " << e.what() << '\n';
    }
    if (!message.empty()) err << "surfvort: " << message << '\n';
    return code;
  };

  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    err << "surfvort: cannot create output directory: " << e.what() << '\n';
    return kConfigError;
  }

  Scenario sc;
  try {
    sc = load_scenario(opt.scenario);
    if (opt.self_term_sign) {
      if (*opt.self_term_sign != 1 && *opt.self_term_sign != -1) {
        throw ConfigError("--self-term-sign must be +1 or -1");
      }
      sc.self_term_sign = *opt.self_term_sign;
    }
  } catch (const ConfigError& e) {
    return finish(kConfigError, e.what());
  }
  if (!sc.name.empty()) manifest["name"] = sc.name;
  manifest["geometry"] = sc.geometry == ScenarioGeometry::plane    ? "plane"
                         : sc.geometry == ScenarioGeometry::sphere ? "sphere"
                                                                   : "mesh";
  ordered_json params;
  params["dt"] = sc.integrator.dt;
  params["steps"] = sc.integrator.steps;
  params["sphere_rule"] =
      sc.integrator.sphere_rule == SphereStageRule::lie_group ? "lie_group" : "projected_tangents";
  params["diagnostics_every"] = sc.integrator.diagnostics_every;
  params["record_every"] = sc.integrator.record_every;
  if (sc.geometry == ScenarioGeometry::mesh) {
    params["conformal"] = cmcf_json(sc.conformal);
    params["self_term_sign"] = static_cast<int>(sc.self_term_sign);
  }
  manifest["parameters"] = params;

  Geometry geometry = Geometry::plane;
  std::shared_ptr<const AtlasField> field;
  std::unique_ptr<VelocityModel> model;
  try {
    switch (sc.geometry) {
      case ScenarioGeometry::plane:
        model = std::make_unique<PlanarModel>();
        break;
      case ScenarioGeometry::sphere:
        geometry = Geometry::sphere;
        model = std::make_unique<SphereModel>();
        break;
      case ScenarioGeometry::mesh: {
        geometry = Geometry::closed_surface;
        PreparedMesh pm;
        try {
          pm = prepare_mesh(*sc.mesh, sc.conformal);
        } catch (const TopologyError& e) {
          return finish(kTopologyRejected, e.what());
        } catch (const SolverError& e) {
          return finish(kNotConverged, e.what());
        } catch (const MeshError& e) {
          // Parse errors are malformed input; geometric rejections (degenerate
          // triangles) happen after a successful parse.
          const std::string what = e.what();
          return finish(what.find("degenerate") != std::string::npos ? kTopologyRejected : kConfigError, what);
        }
        ordered_json mesh;
        mesh["source"] = sc.mesh->describe();
        mesh["sha1"] = pm.sha1;
        mesh["vertices"] = pm.mesh.vertex_count();
        mesh["triangles"] = pm.mesh.triangle_count();
        manifest["mesh"] = mesh;
        manifest["conformal"] = atlas_json(pm.atlas);
        write_conformal_outputs(dir, pm.atlas, sc.outputs.sphere_map, sc.outputs.factors);
        if (!pm.atlas.converged) {
          return finish(kNotConverged, "conformal flow did not converge in " +
                                           std::to_string(pm.atlas.iterations_used) +
                                           " iterations (sphericity residual " +
                                           format_double(pm.atlas.sphericity_residual) + ")");
        }
        field = std::make_shared<const AtlasField>(std::move(pm.atlas));
        model = std::make_unique<ClosedSurfaceModel>(field, sc.self_term_sign);
        break;
      }
    }
  } catch (const ConfigError& e) {
    return finish(kConfigError, e.what());
  }

  VortexSystem sys;
  try {
    sys = place_vortices(sc, geometry, field.get());
  } catch (const ConfigError& e) {
    return finish(kConfigError, e.what());
  }
  manifest["vortices"] = sys.size();
  manifest["total_vorticity"] = total_vorticity(sys);

  std::optional<std::ofstream> traj;
  std::optional<std::ofstream> energy;
  try {
    if (sc.outputs.trajectories) {
      traj = open_output(dir / "trajectories.csv");
      write_trajectory_header(*traj);
    }
    if (sc.outputs.energy) {
      energy = open_output(dir / "energy.csv");
      write_energy_header(*energy);
    }
    if (!sc.outputs.field_grid.empty()) {
      const auto points = parse_grid(sc.outputs.field_grid, geometry);
      std::ofstream f = open_output(dir / "field.csv");
      write_field_csv(f, geometry, sample_field(sys, points, field.get()));
    }
  } catch (const ConfigError& e) {
    return finish(kConfigError, e.what());
  } catch (const std::invalid_argument& e) {
    return finish(kConfigError, e.what());
  }

  std::optional<EnergyDiagnostics> first;
  std::optional<EnergyDiagnostics> last;
  std::size_t last_step = 0;
  const Observer observer = [&](const TrajectoryRecord& rec) {
    if (traj) write_trajectory_rows(*traj, rec);
    if (energy) write_energy_row(*energy, rec);
    if (rec.diagnostics) {
      if (!first) first = rec.diagnostics;
      last = rec.diagnostics;
    }
    last_step = rec.step;
  };
  const RunResult result = run(sys, *model, sc.integrator, observer, false);
  if (traj) traj->flush();
  if (energy) energy->flush();

  ordered_json energy_json;
  if (first && last) {
    energy_json["initial_E"] = first->kinetic_excess;
    energy_json["final_E"] = last->kinetic_excess;
    energy_json["initial_H_tilde"] = first->metric_hamiltonian;
    energy_json["final_H_tilde"] = last->metric_hamiltonian;
    energy_json["relative_drift"] = relative_drift(first->metric_hamiltonian, last->metric_hamiltonian);
  }
  manifest["energy"] = energy_json;
  manifest["steps_completed"] = result.collided ? result.collision_step - 1 : sc.integrator.steps;
  manifest["last_recorded_step"] = last_step;
  if (result.collided) {
    manifest["collision_step"] = result.collision_step;
    return finish(kCollision, result.message + " (partial outputs kept)");
  }
  return finish(kOk, "");
}

// ---------------------------------------------------------------------------
// conformal-map, sample, field, generate-mesh
// ---------------------------------------------------------------------------

struct MeshOptions {
  std::string mesh;
  CmcfParams params;
  std::string mass = "voronoi";
};

CmcfParams resolve_params(const MeshOptions& opt) {
  CmcfParams p = opt.params;
  if (opt.mass == "voronoi") {
    p.mass = CmcfParams::Mass::voronoi;
  } else if (opt.mass == "lumped") {
    p.mass = CmcfParams::Mass::lumped;
  } else if (opt.mass == "consistent") {
    p.mass = CmcfParams::Mass::consistent;
  } else {
    throw ConfigError("--mass must be voronoi, lumped or consistent");
  }
  if (!(p.delta > 0.0) || !(p.tol > 0.0) || p.max_iters < 0) throw ConfigError("invalid flow parameters");
  return p;
}

// Loads and maps a mesh; returns an exit code, or kOk with `out` filled.
int map_mesh(const MeshOptions& opt, PreparedMesh& out, std::ostream& err) {
  try {
    MeshSpec spec;
    spec.path = opt.mesh;
    if (!fs::exists(spec.path)) throw ConfigError("mesh not found: " + opt.mesh);
    out = prepare_mesh(spec, resolve_params(opt));
  } catch (const ConfigError& e) {
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  } catch (const TopologyError& e) {
    err << "surfvort: " << e.what() << '\n';
    return kTopologyRejected;
  } catch (const SolverError& e) {
    err << "surfvort: " << e.what() << '\n';
    return kNotConverged;
  } catch (const MeshError& e) {
    err << "surfvort: " << e.what() << '\n';
    return std::string(e.what()).find("degenerate") != std::string::npos ? kTopologyRejected : kConfigError;
  }
  return kOk;
}

struct ConformalOptions {
  MeshOptions mesh;
  std::string out_dir = "surfvort_conformal";
};

int command_conformal_map(const ConformalOptions& opt, std::ostream& out, std::ostream& err) {
  PreparedMesh pm;
  if (const int code = map_mesh(opt.mesh, pm, err); code != kOk) return code;
  const fs::path dir = opt.out_dir;
  try {
    fs::create_directories(dir);
    write_conformal_outputs(dir, pm.atlas, true, true);
    const ConformalQuality quality = assess_conformal_map(pm.atlas);
    std::ofstream report = open_output(dir / "report.txt");
    report << "mesh: " << opt.mesh.mesh << '\n' << "mesh_sha1: " << pm.sha1 << '\n';
    write_conformal_report(report, pm.atlas, quality);
    out << "mesh_sha1: " << pm.sha1 << '\n';
    write_conformal_report(out, pm.atlas, quality);
  } catch (const std::exception& e) {
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  }
  if (!pm.atlas.converged) {
    err << "surfvort: conformal flow did not converge in " << pm.atlas.iterations_used
        << " iterations (sphericity residual " << format_double(pm.atlas.sphericity_residual) << ")\n";
    return kNotConverged;
  }
  return kOk;
}

struct SampleOptions {
  MeshOptions mesh;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string out_file = "-";
};

int command_sample(const SampleOptions& opt, std::ostream& out, std::ostream& err) {
  PreparedMesh pm;
  if (const int code = map_mesh(opt.mesh, pm, err); code != kOk) return code;
  if (!pm.atlas.converged) {
    err << "surfvort: conformal flow did not converge\n";
    return kNotConverged;
  }
  const auto areas = face_areas(pm.atlas.source_mesh);
  const auto samples = sample_points(pm.atlas.sphere_mesh, areas, opt.count, opt.seed);
  if (opt.out_file == "-") {
    write_samples_csv(out, pm.atlas, samples);
  } else {
    try {
      std::ofstream f = open_output(opt.out_file);
      write_samples_csv(f, pm.atlas, samples);
    } catch (const ConfigError& e) {
      err << "surfvort: " << e.what() << '\n';
      return kConfigError;
    }
  }
  return kOk;
}

struct FieldOptions {
  std::string scenario;
  std::string grid;
  std::string out_file = "-";
};

int command_field(const FieldOptions& opt, std::ostream& out, std::ostream& err) {
  Scenario sc;
  std::vector<Vec3> points;
  Geometry geometry = Geometry::plane;
  try {
    sc = load_scenario(opt.scenario);
    geometry = sc.geometry == ScenarioGeometry::plane    ? Geometry::plane
               : sc.geometry == ScenarioGeometry::sphere ? Geometry::sphere
                                                         : Geometry::closed_surface;
    points = parse_grid(opt.grid, geometry);
  } catch (const ConfigError& e) {
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  }

  std::shared_ptr<const AtlasField> field;
  if (geometry == Geometry::closed_surface) {
    PreparedMesh pm;
    try {
      pm = prepare_mesh(*sc.mesh, sc.conformal);
    } catch (const TopologyError& e) {
      err << "surfvort: " << e.what() << '\n';
      return kTopologyRejected;
    } catch (const SolverError& e) {
      err << "surfvort: " << e.what() << '\n';
      return kNotConverged;
    } catch (const MeshError& e) {
      err << "surfvort: " << e.what() << '\n';
      return std::string(e.what()).find("degenerate") != std::string::npos ? kTopologyRejected : kConfigError;
    } catch (const ConfigError& e) {
      err << "surfvort: " << e.what() << '\n';
      return kConfigError;
    }
    if (!pm.atlas.converged) {
      err << "surfvort: conformal flow did not converge\n";
      return kNotConverged;
    }
    field = std::make_shared<const AtlasField>(std::move(pm.atlas));
  }

  VortexSystem sys;
  try {
    sys = place_vortices(sc, geometry, field.get());
  } catch (const ConfigError& e) {
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  }
  const auto samples = sample_field(sys, points, field.get());
  const auto skipped = std::count_if(samples.begin(), samples.end(), [](const FieldSample& f) { return !f.ok; });
  if (skipped > 0) err << "surfvort: " << skipped << " grid point(s) coincide with a vortex and were skipped\n";
  if (opt.out_file == "-") {
    write_field_csv(out, geometry, samples);
  } else {
    try {
      std::ofstream f = open_output(opt.out_file);
      write_field_csv(f, geometry, samples);
    } catch (const ConfigError& e) {
      err << "surfvort: " << e.what() << '\n';
      return kConfigError;
    }
  }
  return kOk;
}

struct GenerateOptions {
  std::string kind;
  std::string out_file;
  int subdivisions = 4;
  double radius = 1.0;
  double minor_radius = 0.3;
  std::vector<double> axes{1.0, 1.0, 1.0};
};

int command_generate(const GenerateOptions& opt, std::ostream& err) {
  try {
    TriangleMesh mesh = [&] {
      if (opt.kind == "torus") return make_torus(opt.radius, opt.minor_radius, 32, 16);
      MeshSpec spec;
      spec.primitive = opt.kind;
      spec.subdivisions = opt.subdivisions;
      spec.radius = opt.radius;
      if (opt.axes.size() != 3) throw ConfigError("--axes needs three values");
      spec.axes = {opt.axes[0], opt.axes[1], opt.axes[2]};
      return load_mesh(spec);
    }();
    save_obj(opt.out_file, mesh);
  } catch (const std::exception& e) {
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"surfvort: point vortex dynamics on the plane, the sphere and closed genus-zero meshes"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run_cmd = app.add_subcommand("run", "integrate a scenario and write trajectories, energy and a manifest");
  run_cmd->add_option("scenario", run_opt.scenario, "scenario JSON file")->required();
  run_cmd->add_option("--out", run_opt.out_dir, "output directory")->capture_default_str();
  run_cmd->add_option("--self-term-sign", run_opt.self_term_sign, "override the self-term sign (+1 or -1)");

  ConformalOptions conf_opt;
  auto add_flow_options = [](CLI::App* cmd, MeshOptions& m) {
    cmd->add_option("--delta", m.params.delta, "flow step")->capture_default_str();
    cmd->add_option("--tol", m.params.tol, "sphericity tolerance")->capture_default_str();
    cmd->add_option("--max-iters", m.params.max_iters, "iteration cap")->capture_default_str();
    cmd->add_option("--mass", m.mass, "mass matrix: voronoi, lumped or consistent")->capture_default_str();
  };
  auto* conf_cmd = app.add_subcommand("conformal-map", "map a closed genus-zero mesh to the unit sphere");
  conf_cmd->add_option("mesh", conf_opt.mesh.mesh, "OBJ mesh")->required();
  conf_cmd->add_option("--out", conf_opt.out_dir, "output directory")->capture_default_str();
  add_flow_options(conf_cmd, conf_opt.mesh);

  FieldOptions field_opt;
  auto* field_cmd = app.add_subcommand("field", "sample the velocity field of a scenario's initial vortices");
  field_cmd->add_option("scenario", field_opt.scenario, "scenario JSON file")->required();
  field_cmd->add_option("--grid", field_opt.grid,
                        "ring:cx,cy,r,n | grid:x0,x1,nx,y0,y1,ny | latlon:nlat,nlon | points:x,y,z;...")
      ->required();
  field_cmd->add_option("--out", field_opt.out_file, "output CSV ('-' for stdout)")->capture_default_str();

  SampleOptions sample_opt;
  auto* sample_cmd = app.add_subcommand("sample", "draw area-weighted surface points");
  sample_cmd->add_option("mesh", sample_opt.mesh.mesh, "OBJ mesh")->required();
  sample_cmd->add_option("--count", sample_opt.count, "number of samples")->required();
  sample_cmd->add_option("--seed", sample_opt.seed, "random seed")->required();
  sample_cmd->add_option("--out", sample_opt.out_file, "output CSV ('-' for stdout)")->capture_default_str();
  add_flow_options(sample_cmd, sample_opt.mesh);

  GenerateOptions gen_opt;
  auto* gen_cmd = app.add_subcommand("generate-mesh", "write a built-in mesh as OBJ");
  gen_cmd->add_option("kind", gen_opt.kind, "icosphere | ellipsoid | blob | tetrahedron | torus")
      ->required()
      ->check(CLI::IsMember({"icosphere", "ellipsoid", "blob", "tetrahedron", "torus"}));
  gen_cmd->add_option("--out", gen_opt.out_file, "output OBJ")->required();
  gen_cmd->add_option("--subdivisions", gen_opt.subdivisions, "icosphere subdivision level")
      ->capture_default_str()
      ->check(CLI::Range(0, 7));
  gen_cmd->add_option("--radius", gen_opt.radius, "icosphere radius or torus major radius")->capture_default_str();
  gen_cmd->add_option("--minor-radius", gen_opt.minor_radius, "torus minor radius")->capture_default_str();
  gen_cmd->add_option("--axes", gen_opt.axes, "ellipsoid semi-axes a b c")->expected(3);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "surfvort: " << e.what() << '\n';
    return kConfigError;
  }

  if (*run_cmd) return command_run(run_opt, err);
  if (*conf_cmd) return command_conformal_map(conf_opt, out, err);
  if (*field_cmd) return command_field(field_opt, out, err);
  if (*sample_cmd) return command_sample(sample_opt, out, err);
  if (*gen_cmd) return command_generate(gen_opt, err);
  return kConfigError;
}

}  // namespace surfvort::cli
