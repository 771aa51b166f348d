#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "surfvort/cli.hpp"
#include "surfvort/core.hpp"

namespace fs = std::filesystem;
using surfvort::kTwoPi;

namespace {

// Fresh scratch directory, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("surfvort_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = surfvort::cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

nlohmann::json read_manifest(const std::string& dir) { return nlohmann::json::parse(read_file(dir + "/manifest.json")); }

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

const char* kPair = R"({"name": "pair", "geometry": "plane",
  "vortices": [{"position": [1, 0], "strength": -1}, {"position": [-1, 0], "strength": 1}],
  "integrator": {"dt": 0.01, "steps": 50}, "diagnostics_every": 5})";

}  // namespace

TEST_CASE("help and version exit 0") {
  const Result help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("conformal-map") != std::string::npos);
  const Result version = run({"--version"});
  CHECK(version.code == 0);
  CHECK(!version.out.empty());
  // No subcommand is a usage error.
  CHECK(run({}).code == 1);
}

TEST_CASE("usage and configuration errors exit 1") {
  TempDir tmp;
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"run"}).code == 1);
  CHECK(run({"run", tmp / "missing.json", "--out", tmp / "o"}).code == 1);

  const std::vector<std::string> bad{
      "{not json",
      R"({"geometry": "torus"})",
      R"({"geometry": "plane", "vortices": [{"position": [0, 0]}]})",
      R"({"geometry": "plane", "colour": 3})",
      R"({"geometry": "plane", "vortices": [], "integrator": {"dt": 0}})",
      R"({"geometry": "plane", "vortices": [{"position": [0, 0], "strength": 1}, {"position": [0, 0], "strength": 1}]})",
      R"({"geometry": "mesh", "mesh": {"primitive": "icosphere", "subdivisions": 1},
          "vortices": [{"position": [0, 0, 1], "strength": 1}], "balance": "reject"})",
      R"({"geometry": "mesh"})",
      R"({"geometry": "mesh", "mesh": "nowhere.obj"})",
  };
  int k = 0;
  for (const std::string& doc : bad) {
    const std::string path = tmp / ("bad" + std::to_string(k++) + ".json");
    write_file(path, doc);
    const Result r = run({"run", path, "--out", tmp / "o"});
    CAPTURE(doc);
    CHECK(r.code == 1);
    CHECK(r.err.find("surfvort:") != std::string::npos);
  }
  write_file(tmp / "ok.json", kPair);
  CHECK(run({"run", tmp / "ok.json", "--out", tmp / "o", "--self-term-sign", "2"}).code == 1);
  CHECK(run({"field", tmp / "ok.json", "--grid", "ring:0,0,1"}).code == 1);
  CHECK(run({"field", tmp / "ok.json", "--grid", "latlon:3,4"}).code == 1);
}

TEST_CASE("run writes a manifest and deterministic outputs") {
  TempDir tmp;
  write_file(tmp / "pair.json", kPair);
  const Result a = run({"run", tmp / "pair.json", "--out", tmp / "a"});
  REQUIRE(a.code == 0);
  const Result b = run({"run", tmp / "pair.json", "--out", tmp / "b"});
  REQUIRE(b.code == 0);

  const auto m = read_manifest(tmp / "a");
  CHECK(m["status"] == "ok");
  CHECK(m["exit_code"] == 0);
  CHECK(m["steps_completed"] == 50);
  CHECK(m["geometry"] == "plane");
  CHECK(m["vortices"] == 2);
  CHECK(std::abs(m["energy"]["relative_drift"].get<double>()) < 1e-10);

  const std::string traj = read_file(tmp / "a/trajectories.csv");
  CHECK(traj == read_file(tmp / "b/trajectories.csv"));
  CHECK(read_file(tmp / "a/energy.csv") == read_file(tmp / "b/energy.csv"));
  const auto rows = data_lines(traj);
  REQUIRE(rows.size() == 1 + 51 * 2);
  CHECK(rows[0] == "step,time,id,mx,my,mz,sx,sy,sz");
  // Final row: vortex 1 has translated 0.5 / (4 pi) along y.
  const auto last = split(rows.back());
  CHECK(std::stod(last[3]) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::stod(last[4]) == doctest::Approx(0.5 / (2 * kTwoPi)).epsilon(1e-12));
  CHECK(data_lines(read_file(tmp / "a/energy.csv")).size() == 1 + 11);
}

TEST_CASE("a near-coincident pair is reported as a collision with exit 4") {
  // An opposite pair 1.2e-9 apart moves at ~1e8; rounding of the large
  // displacement pushes the separation under the singularity guard.
  TempDir tmp;
  write_file(tmp / "near.json", R"({"geometry": "plane",
    "vortices": [{"position": [0, 0], "strength": 1}, {"position": [8.5e-10, 8.5e-10], "strength": -1}],
    "integrator": {"dt": 0.01, "steps": 100}})");
  const Result r = run({"run", tmp / "near.json", "--out", tmp / "o"});
  CHECK(r.code == 4);
  CHECK(r.err.find("collision") != std::string::npos);
  const auto m = read_manifest(tmp / "o");
  CHECK(m["status"] == "collision");
  CHECK(m["exit_code"] == 4);
  REQUIRE(m.contains("collision_step"));
  CHECK(m["steps_completed"].get<int>() == m["collision_step"].get<int>() - 1);
  CHECK(fs::exists(tmp / "o/trajectories.csv"));
}

TEST_CASE("topology rejections exit 2") {
  TempDir tmp;
  REQUIRE(run({"generate-mesh", "torus", "--out", tmp / "torus.obj"}).code == 0);
  CHECK(run({"conformal-map", tmp / "torus.obj", "--out", tmp / "t"}).code == 2);
  CHECK(run({"sample", tmp / "torus.obj", "--count", "5", "--seed", "1"}).code == 2);

  write_file(tmp / "open.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK(run({"conformal-map", tmp / "open.obj", "--out", tmp / "t"}).code == 2);

  write_file(tmp / "torus_run.json", R"({"geometry": "mesh", "mesh": "torus.obj",
    "vortices": [{"position": [1, 0, 0], "strength": 1}, {"position": [-1, 0, 0], "strength": -1}]})");
  const Result r = run({"run", tmp / "torus_run.json", "--out", tmp / "o"});
  CHECK(r.code == 2);
  const auto m = read_manifest(tmp / "o");
  CHECK(m["exit_code"] == 2);
  CHECK(m["status"] == "topology_rejected");

  CHECK(run({"conformal-map", tmp / "missing.obj"}).code == 1);
  write_file(tmp / "garbage.obj", "v 0 0\nf 1 2 3\n");
  CHECK(run({"conformal-map", tmp / "garbage.obj"}).code == 1);
}

TEST_CASE("conformal flow without enough iterations exits 3") {
  TempDir tmp;
  REQUIRE(run({"generate-mesh", "ellipsoid", "--out", tmp / "e.obj", "--subdivisions", "2", "--axes", "1", "1", "1.5"})
              .code == 0);
  CHECK(run({"conformal-map", tmp / "e.obj", "--max-iters", "0", "--out", tmp / "c"}).code == 3);
  CHECK(run({"sample", tmp / "e.obj", "--count", "3", "--seed", "1", "--max-iters", "0"}).code == 3);

  write_file(tmp / "e.json", R"({"geometry": "mesh", "mesh": "e.obj", "conformal": {"max_iters": 0},
    "vortices": [{"position": [1, 0, 0], "strength": 1}, {"position": [-1, 0, 0], "strength": -1}]})");
  CHECK(run({"run", tmp / "e.json", "--out", tmp / "o"}).code == 3);
  const auto m = read_manifest(tmp / "o");
  CHECK(m["status"] == "cmcf_not_converged");
  CHECK(m["exit_code"] == 3);
}

TEST_CASE("conformal-map outputs") {
  TempDir tmp;
  REQUIRE(run({"generate-mesh", "icosphere", "--subdivisions", "3", "--radius", "2", "--out", tmp / "s.obj"}).code == 0);
  const Result r = run({"conformal-map", tmp / "s.obj", "--out", tmp / "c"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("mesh_sha1: ", 0) == 0);
  for (const char* name : {"sphere.obj", "factors.csv", "grad_h.csv", "report.txt"}) CHECK(fs::exists(tmp.path / "c" / name));

  const auto rows = data_lines(read_file(tmp / "c/factors.csv"));
  REQUIRE(rows.size() == 1 + 642);
  CHECK(rows[0] == "vertex_index,u,h");
  double worst = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) worst = std::max(worst, std::abs(std::stod(split(rows[k])[2]) - 2.0));
  MESSAGE("radius-2 icosphere: max |h - 2| = " << worst);
  CHECK(worst < 1e-3);

  // The same mesh hashes the same way twice.
  const Result again = run({"conformal-map", tmp / "s.obj", "--out", tmp / "d"});
  CHECK(again.out.substr(0, 52) == r.out.substr(0, 52));
}

TEST_CASE("field output: planar ring around a single vortex") {
  TempDir tmp;
  write_file(tmp / "one.json", R"({"geometry": "plane", "vortices": [{"position": [0, 0], "strength": 1}]})");
  const Result r = run({"field", tmp / "one.json", "--grid", "ring:0,0,1,16"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# stream_function: supported\n", 0) == 0);
  const auto rows = data_lines(r.out);
  REQUIRE(rows.size() == 17);
  CHECK(rows[0] == "index,mx,my,mz,x,y,z,ux,uy,uz,psi,status");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto c = split(rows[k]);
    const double speed = std::hypot(std::stod(c[7]), std::stod(c[8]));
    CHECK(speed == doctest::Approx(1.0 / kTwoPi).epsilon(1e-12));
    CHECK(std::abs(std::stod(c[10])) < 1e-15);
    CHECK(c[11] == "ok");
  }

  const Result hit = run({"field", tmp / "one.json", "--grid", "points:0,0;1,0"});
  CHECK(hit.code == 0);
  CHECK(data_lines(hit.out)[1].find("coincident") != std::string::npos);
}

TEST_CASE("field output on a mesh has no stream function") {
  TempDir tmp;
  write_file(tmp / "m.json", R"({"geometry": "mesh", "mesh": {"primitive": "icosphere", "subdivisions": 2},
    "vortices": [{"position": [1, 0, 0], "strength": 1}, {"position": [-1, 0, 0], "strength": -1}]})");
  const std::string out = tmp / "f.csv";
  REQUIRE(run({"field", tmp / "m.json", "--grid", "latlon:4,6", "--out", out}).code == 0);
  const std::string text = read_file(out);
  CHECK(text.rfind("# stream_function: unsupported (closed surface)\n", 0) == 0);
  const auto rows = data_lines(text);
  CHECK(rows.size() == 1 + 24);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(split(rows[k])[10].empty());
}

TEST_CASE("sample output is seeded and reproducible") {
  TempDir tmp;
  REQUIRE(run({"generate-mesh", "icosphere", "--subdivisions", "2", "--out", tmp / "s.obj"}).code == 0);
  const Result a = run({"sample", tmp / "s.obj", "--count", "200", "--seed", "7"});
  const Result b = run({"sample", tmp / "s.obj", "--count", "200", "--seed", "7"});
  const Result c = run({"sample", tmp / "s.obj", "--count", "200", "--seed", "8"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  CHECK(data_lines(a.out).size() == 201);
  const Result none = run({"sample", tmp / "s.obj", "--count", "0", "--seed", "7"});
  CHECK(none.code == 0);
  CHECK(none.out == "index,triangle,s,t,mx,my,mz,sx,sy,sz\n");
}

TEST_CASE("generate-mesh") {
  TempDir tmp;
  CHECK(run({"generate-mesh", "tetrahedron", "--out", tmp / "t.obj"}).code == 0);
  const std::string obj = read_file(tmp / "t.obj");
  int v = 0, f = 0;
  std::istringstream in(obj);
  std::string line;
  while (std::getline(in, line)) {
    v += line.rfind("v ", 0) == 0;
    f += line.rfind("f ", 0) == 0;
  }
  CHECK(v == 4);
  CHECK(f == 4);
  CHECK(run({"generate-mesh", "cube", "--out", tmp / "c.obj"}).code == 1);
  CHECK(run({"generate-mesh", "icosphere", "--subdivisions", "9", "--out", tmp / "c.obj"}).code == 1);
}

TEST_CASE("closed-surface run through the CLI") {
  TempDir tmp;
  write_file(tmp / "m.json", R"({"geometry": "mesh", "mesh": {"primitive": "icosphere", "subdivisions": 2},
    "vortices": [{"position": [1, 0, 0.1], "strength": 1}, {"position": [1, 0, -0.1], "strength": -1}],
    "integrator": {"dt": 0.01, "steps": 20}})");
  const Result r = run({"run", tmp / "m.json", "--out", tmp / "o"});
  REQUIRE(r.code == 0);
  const auto m = read_manifest(tmp / "o");
  CHECK(m["geometry"] == "mesh");
  CHECK(m["mesh"]["sha1"].get<std::string>().size() == 40);
  CHECK(m["parameters"]["self_term_sign"] == 1);
  CHECK(std::abs(m["energy"]["relative_drift"].get<double>()) < 1e-6);
  CHECK(run({"run", tmp / "m.json", "--out", tmp / "p", "--self-term-sign", "-1"}).code == 0);
  CHECK(read_manifest(tmp / "p")["parameters"]["self_term_sign"] == -1);
}
