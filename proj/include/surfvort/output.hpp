#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "surfvort/conformal.hpp"
#include "surfvort/dynamics.hpp"
#include "surfvort/integrator.hpp"

namespace surfvort {

// CSV writers. Headers are fixed, fields are separated by commas, lines end in
// LF, and floats use the shortest round-trip representation.

void write_trajectory_header(std::ostream& out);
/// One row per vortex: step,time,id,mx,my,mz,sx,sy,sz. m is the position on
/// the simulated surface (plane, sphere or M) and s its image on S^2; on the
/// plane and the sphere the two coincide.
void write_trajectory_rows(std::ostream& out, const TrajectoryRecord& rec);

void write_energy_header(std::ostream& out);
/// step,time,E,H_tilde,total_vorticity; records without diagnostics are skipped.
void write_energy_row(std::ostream& out, const TrajectoryRecord& rec);

/// vertex_index,u,h
void write_factors_csv(std::ostream& out, const ConformalAtlas& atlas);
/// triangle_index,gx,gy,gz
void write_grad_h_csv(std::ostream& out, const ConformalAtlas& atlas);

/// index,triangle,s,t,mx,my,mz,sx,sy,sz
void write_samples_csv(std::ostream& out, const ConformalAtlas& atlas,
                       const std::vector<SurfaceLocation>& samples);

// Field sampling ------------------------------------------------------------

/// Evaluation points of a grid spec:
///   ring:cx,cy,r,n                  n points on a circle in the plane
///   grid:x0,x1,nx,y0,y1,ny          nx by ny lattice in the plane
///   latlon:nlat,nlon                cell-centred latitude bands on S^2
///   points:x,y,z;x,y,z;...          explicit points
/// Throws std::invalid_argument on malformed specs or specs that do not fit
/// the geometry.
std::vector<Vec3> parse_grid(const std::string& spec, Geometry geometry);

struct FieldSample {
  Vec3 point = Vec3::Zero();          ///< evaluation point (plane or S^2)
  Vec3 surface_point = Vec3::Zero();  ///< on M for closed surfaces, else = point
  Vec3 velocity = Vec3::Zero();
  double stream = 0.0;
  bool has_stream = false;
  bool ok = true;  ///< false when the point coincides with a vortex
};

/// Velocity (and stream value where it exists) at every point. Points that
/// coincide with a vortex are flagged instead of aborting.
std::vector<FieldSample> sample_field(const VortexSystem& sys, const std::vector<Vec3>& points,
                                      const AtlasField* field);

/// "# stream_function: supported|unsupported" comment, then
/// index,mx,my,mz,x,y,z,ux,uy,uz,psi,status.
void write_field_csv(std::ostream& out, Geometry geometry, const std::vector<FieldSample>& samples);

}  // namespace surfvort
