#pragma once

#include "surfvort/mesh.hpp"

namespace surfvort {

// Procedural test and scenario meshes.

/// Subdivided icosahedron projected onto a sphere of the given radius.
/// Level k has 10 * 4^k + 2 vertices (level 4: 2562).
TriangleMesh make_icosphere(int subdivisions, double radius = 1.0);

/// Icosphere scaled axis-wise to semi-axes (a, b, c).
TriangleMesh make_ellipsoid(int subdivisions, double a, double b, double c);

TriangleMesh make_tetrahedron();

/// Genus-one test surface; major radius R, minor radius r.
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments,
                        int minor_segments);

/// Star-shaped, non-convex genus-zero surface: an elongated body with two
/// ear-like lobes and a tail, built by radially displacing an icosphere.
TriangleMesh make_blob(int subdivisions);

}  // namespace surfvort
