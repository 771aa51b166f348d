#include "surfvort/output.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "surfvort/format.hpp"

namespace surfvort {

namespace {

void put_vec(std::ostream& out, const Vec3& v) {
  out << format_double(v.x()) << ',' << format_double(v.y()) << ',' << format_double(v.z());
}

std::vector<double> parse_numbers(const std::string& body, const std::string& spec) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= body.size()) {
    const std::size_t end = std::min(body.find(',', start), body.size());
    const std::string token = body.substr(start, end - start);
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
      throw std::invalid_argument("grid spec \"" + spec + "\": bad number \"" + token + "\"");
    }
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

std::size_t as_count(double v, const std::string& spec) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e7) {
    throw std::invalid_argument("grid spec \"" + spec + "\": counts must be positive integers");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_trajectory_header(std::ostream& out) { out << "step,time,id,mx,my,mz,sx,sy,sz\n"; }

void write_trajectory_rows(std::ostream& out, const TrajectoryRecord& rec) {
  const std::string prefix = std::to_string(rec.step) + ',' + format_double(rec.time) + ',';
  for (std::size_t j = 0; j < rec.positions.size(); ++j) {
    out << prefix << j << ',';
    put_vec(out, rec.surface_positions[j]);
    out << ',';
    put_vec(out, rec.positions[j]);
    out << '\n';
  }
}

void write_energy_header(std::ostream& out) { out << "step,time,E,H_tilde,total_vorticity\n"; }

void write_energy_row(std::ostream& out, const TrajectoryRecord& rec) {
  if (!rec.diagnostics) return;
  const EnergyDiagnostics& d = *rec.diagnostics;
  out << rec.step << ',' << format_double(rec.time) << ',' << format_double(d.kinetic_excess) << ','
      << format_double(d.metric_hamiltonian) << ',' << format_double(d.total_vorticity) << '\n';
}

void write_factors_csv(std::ostream& out, const ConformalAtlas& atlas) {
  out << "vertex_index,u,h\n";
  for (std::size_t i = 0; i < atlas.factors.size(); ++i) {
    out << i << ',' << format_double(atlas.log_factors[i]) << ',' << format_double(atlas.factors[i]) << '\n';
  }
}

void write_grad_h_csv(std::ostream& out, const ConformalAtlas& atlas) {
  out << "triangle_index,gx,gy,gz\n";
  for (std::size_t t = 0; t < atlas.triangle_grad_h.size(); ++t) {
    out << t << ',';
    put_vec(out, atlas.triangle_grad_h[t]);
    out << '\n';
  }
}

void write_samples_csv(std::ostream& out, const ConformalAtlas& atlas,
                       const std::vector<SurfaceLocation>& samples) {
  out << "index,triangle,s,t,mx,my,mz,sx,sy,sz\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SurfaceLocation& loc = samples[i];
    out << i << ',' << loc.triangle() << ',' << format_double(loc.s()) << ',' << format_double(loc.t()) << ',';
    put_vec(out, position_of(atlas.source_mesh, loc));
    out << ',';
    put_vec(out, position_of(atlas.sphere_mesh, loc).normalized());
    out << '\n';
  }
}

std::vector<Vec3> parse_grid(const std::string& spec, Geometry geometry) {
  const std::size_t colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("grid spec \"" + spec + "\": missing kind");
  const std::string kind = spec.substr(0, colon);
  const std::string body = spec.substr(colon + 1);
  const bool on_sphere = geometry != Geometry::plane;
  std::vector<Vec3> points;

  if (kind == "ring" || kind == "grid") {
    if (on_sphere) throw std::invalid_argument("grid spec \"" + spec + "\": " + kind + " is planar only");
    const auto v = parse_numbers(body, spec);
    if (kind == "ring") {
      if (v.size() != 4) throw std::invalid_argument("grid spec \"" + spec + "\": ring:cx,cy,r,n");
      const std::size_t n = as_count(v[3], spec);
      for (std::size_t k = 0; k < n; ++k) {
        const double a = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        points.emplace_back(v[0] + v[2] * std::cos(a), v[1] + v[2] * std::sin(a), 0.0);
      }
    } else {
      if (v.size() != 6) throw std::invalid_argument("grid spec \"" + spec + "\": grid:x0,x1,nx,y0,y1,ny");
      const std::size_t nx = as_count(v[2], spec);
      const std::size_t ny = as_count(v[5], spec);
      for (std::size_t j = 0; j < ny; ++j) {
        const double y = ny == 1 ? v[3] : v[3] + (v[4] - v[3]) * static_cast<double>(j) / static_cast<double>(ny - 1);
        for (std::size_t i = 0; i < nx; ++i) {
          const double x =
              nx == 1 ? v[0] : v[0] + (v[1] - v[0]) * static_cast<double>(i) / static_cast<double>(nx - 1);
          points.emplace_back(x, y, 0.0);
        }
      }
    }
  } else if (kind == "latlon") {
    if (!on_sphere) throw std::invalid_argument("grid spec \"" + spec + "\": latlon needs a sphere or mesh");
    const auto v = parse_numbers(body, spec);
    if (v.size() != 2) throw std::invalid_argument("grid spec \"" + spec + "\": latlon:nlat,nlon");
    const std::size_t nlat = as_count(v[0], spec);
    const std::size_t nlon = as_count(v[1], spec);
    for (std::size_t i = 0; i < nlat; ++i) {
      const double theta = kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(nlat);
      for (std::size_t j = 0; j < nlon; ++j) {
        const double phi = kTwoPi * static_cast<double>(j) / static_cast<double>(nlon);
        points.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      }
    }
  } else if (kind == "points") {
    std::stringstream list(body);
    std::string item;
    while (std::getline(list, item, ';')) {
      const auto v = parse_numbers(item, spec);
      if (v.size() != 2 && v.size() != 3) throw std::invalid_argument("grid spec \"" + spec + "\": points need 2 or 3 coordinates");
      Vec3 p(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
      if (on_sphere) {
        if (p.norm() == 0.0) throw std::invalid_argument("grid spec \"" + spec + "\": zero point on the sphere");
        p.normalize();
      } else if (p.z() != 0.0) {
        throw std::invalid_argument("grid spec \"" + spec + "\": planar points need z = 0");
      }
      points.push_back(p);
    }
  } else {
    throw std::invalid_argument("grid spec \"" + spec + "\": unknown kind \"" + kind + "\"");
  }
  return points;
}

std::vector<FieldSample> sample_field(const VortexSystem& sys, const std::vector<Vec3>& points,
                                      const AtlasField* field) {
  std::vector<FieldSample> out(points.size());
  Index hint = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    FieldSample& f = out[k];
    f.point = points[k];
    f.surface_point = points[k];
    try {
      switch (sys.geometry) {
        case Geometry::plane:
          f.velocity = planar_field_velocity(PlanePoint(points[k]), sys);
          f.stream = stream_function(points[k], sys);
          f.has_stream = true;
          break;
        case Geometry::sphere:
          f.velocity = sphere_field_velocity(SpherePoint(points[k]), sys);
          f.stream = stream_function(points[k], sys);
          f.has_stream = true;
          break;
        case Geometry::closed_surface: {
          const ConformalSample s = field->sample(points[k], hint);
          hint = s.location.triangle();
          f.surface_point = field->surface_position(s.location);
          f.velocity = surface_field_velocity(SpherePoint(points[k]), sys, s);
          break;
        }
      }
    } catch (const SingularityError&) {
      f.ok = false;
      f.velocity = Vec3::Zero();
      f.has_stream = false;
    }
  }
  return out;
}

void write_field_csv(std::ostream& out, Geometry geometry, const std::vector<FieldSample>& samples) {
  if (geometry == Geometry::closed_surface) {
    out << "# stream_function: unsupported (closed surface)\n";
  } else {
    out << "# stream_function: supported\n";
  }
  out << "index,mx,my,mz,x,y,z,ux,uy,uz,psi,status\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const FieldSample& f = samples[k];
    out << k << ',';
    put_vec(out, f.surface_point);
    out << ',';
    put_vec(out, f.point);
    out << ',';
    if (f.ok) {
      put_vec(out, f.velocity);
    } else {
      out << ",,";
    }
    out << ',';
    if (f.ok && f.has_stream) out << format_double(f.stream);
    out << ',' << (f.ok ? "ok" : "coincident") << '\n';
  }
}

}  // namespace surfvort
