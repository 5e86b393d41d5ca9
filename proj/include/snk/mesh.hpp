#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace snk {

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using Colors = Eigen::Matrix<int, Eigen::Dynamic, 3>;

/// An edge shared by exactly two faces. `v0 < v1`; `face0` is the face in
/// which the edge runs v0 -> v1, `face1` the one where it runs v1 -> v0 (for
/// consistently oriented meshes).
struct InteriorEdge {
  int v0 = 0;
  int v1 = 0;
  int face0 = 0;
  int face1 = 0;
  double length_sq = 0.0;
};

/// Immutable triangle mesh with derived geometry.
///
/// Boundary edges are allowed; non-manifold edges (three or more incident
/// faces), out-of-range indices, repeated indices within a face and
/// zero-area faces are rejected at construction. Isolated vertices are kept
/// and get a zero normal.
class TriMesh {
 public:
  TriMesh(Vertices vertices, Faces faces);

  int num_vertices() const { return static_cast<int>(vertices_.rows()); }
  int num_faces() const { return static_cast<int>(faces_.rows()); }

  const Vertices& vertices() const { return vertices_; }
  const Faces& faces() const { return faces_; }
  const Vertices& face_normals() const { return face_normals_; }
  const Vertices& vertex_normals() const { return vertex_normals_; }
  const Eigen::VectorXd& face_areas() const { return face_areas_; }
  const std::vector<InteriorEdge>& interior_edges() const { return interior_edges_; }
  int num_boundary_edges() const { return num_boundary_edges_; }
  /// Incident faces per vertex, ascending face index.
  const std::vector<std::vector<int>>& vertex_faces() const { return vertex_faces_; }

  Eigen::Vector3d face_centroid(int f) const;

  /// Same connectivity, new positions.
  TriMesh with_vertices(Vertices vertices) const;

 private:
  Vertices vertices_;
  Faces faces_;
  Vertices face_normals_;
  Vertices vertex_normals_;
  Eigen::VectorXd face_areas_;
  std::vector<InteriorEdge> interior_edges_;
  std::vector<std::vector<int>> vertex_faces_;
  int num_boundary_edges_ = 0;
};

double total_surface_area(const TriMesh& mesh);

/// Area-weighted centroid of the surface.
Eigen::Vector3d area_centroid(const TriMesh& mesh);

/// Adjacency list over vertices with Euclidean edge lengths.
struct EdgeGraph {
  struct Neighbor {
    int vertex;
    double length;
  };
  std::vector<std::vector<Neighbor>> adjacency;

  static EdgeGraph from_mesh(const TriMesh& mesh);
};

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Dijkstra distances over the mesh edge graph. Vertices in other connected
/// components get kUnreachable.
std::vector<double> geodesic_distances(const TriMesh& mesh, int source);
std::vector<double> geodesic_distances(const EdgeGraph& graph, int source);

// ---------------------------------------------------------------------------
// File I/O

enum class MeshFormat { Off, Obj, Ply };

/// Picks the format from the file extension (.off, .obj, .ply).
MeshFormat format_from_path(const std::filesystem::path& path);

/// Throws InputError ("<path>:<line>: <reason>") on parse failures,
/// non-triangular faces and empty meshes.
TriMesh load_mesh(const std::filesystem::path& path);
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);

/// Writes OFF (or COFF when colors are given) with round-trip precision.
void save_off(const std::filesystem::path& path, const Vertices& vertices, const Faces& faces,
              const std::optional<Colors>& colors = std::nullopt);
void save_off(const std::filesystem::path& path, const TriMesh& mesh);

}  // namespace snk
