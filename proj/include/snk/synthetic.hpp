#pragma once

#include <cstdint>
#include <vector>

#include "snk/mesh.hpp"

/// Procedural meshes with known geometry, used by the test suites and the
/// `snk gen` command.
namespace snk::synthetic {

/// Regular tetrahedron with the given edge length.
TriMesh tetrahedron(double edge = 1.0);

/// Geodesic (class I) subdivision of the icosahedron projected onto a sphere.
/// Frequency f gives 10 f^2 + 2 vertices and 20 f^2 faces.
TriMesh icosphere(int frequency, double radius = 1.0);

/// Axis-aligned planar grid in z = 0 with `nx` x `ny` quads split into
/// triangles.
TriMesh grid(int nx, int ny, double size_x = 1.0, double size_y = 1.0);

/// Ellipsoid elongated along x with a handful of Gaussian bumps at
/// positions chosen so that the surface has no intrinsic symmetry.
TriMesh asymmetric_blob(int frequency);

/// Bends the shape around the z axis: the x axis is wrapped onto a circle of
/// the given radius. Arc length along the x axis is preserved.
Vertices bend(const Vertices& vertices, double radius);

/// Relabels vertices: new vertex i is old vertex perm[i]. Faces are rewritten
/// accordingly.
TriMesh permute_vertices(const TriMesh& mesh, const std::vector<int>& perm);

/// Deterministic random permutation of [0, n).
std::vector<int> random_permutation(int n, std::uint64_t seed);

}  // namespace snk::synthetic
