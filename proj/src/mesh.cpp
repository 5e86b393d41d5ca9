#include "snk/mesh.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <tuple>

#include <Eigen/Geometry>

#include "snk/error.hpp"

namespace snk {

TriMesh::TriMesh(Vertices vertices, Faces faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  const int n = num_vertices();
  const int f = num_faces();
  if (n == 0 || f == 0) throw InputError("empty mesh");

  for (int i = 0; i < f; ++i) {
    for (int c = 0; c < 3; ++c) {
      const int v = faces_(i, c);
      if (v < 0 || v >= n) {
        throw InputError("face " + std::to_string(i) + " references vertex " + std::to_string(v) +
                         " outside [0, " + std::to_string(n) + ")");
      }
    }
    if (faces_(i, 0) == faces_(i, 1) || faces_(i, 1) == faces_(i, 2) ||
        faces_(i, 2) == faces_(i, 0)) {
      throw InputError("degenerate face " + std::to_string(i) + ": repeated vertex index");
    }
  }

  face_normals_.resize(f, 3);
  face_areas_.resize(f);
  vertex_faces_.assign(n, {});
  Vertices accumulated = Vertices::Zero(n, 3);
  for (int i = 0; i < f; ++i) {
    const Eigen::Vector3d a = vertices_.row(faces_(i, 0));
    const Eigen::Vector3d b = vertices_.row(faces_(i, 1));
    const Eigen::Vector3d c = vertices_.row(faces_(i, 2));
    const Eigen::Vector3d cross = (b - a).cross(c - a);
    const double norm = cross.norm();
    if (!(norm > 0.0)) throw InputError("face " + std::to_string(i) + " has zero area");
    face_areas_(i) = 0.5 * norm;
    face_normals_.row(i) = cross / norm;
    for (int k = 0; k < 3; ++k) {
      vertex_faces_[faces_(i, k)].push_back(i);
      // |cross| = 2 * area, so this is the area-weighted normal sum.
      accumulated.row(faces_(i, k)) += cross.transpose();
    }
  }

  vertex_normals_.resize(n, 3);
  for (int v = 0; v < n; ++v) {
    const double norm = accumulated.row(v).norm();
    if (vertex_faces_[v].empty()) {
      vertex_normals_.row(v).setZero();
    } else if (norm > 0.0) {
      vertex_normals_.row(v) = accumulated.row(v) / norm;
    } else {
      // Incident normals cancel exactly; fall back to the first face.
      vertex_normals_.row(v) = face_normals_.row(vertex_faces_[v].front());
    }
  }

  // (lo, hi, face, runs lo->hi)
  std::vector<std::tuple<int, int, int, bool>> half_edges;
  half_edges.reserve(3 * static_cast<std::size_t>(f));
  for (int i = 0; i < f; ++i) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces_(i, k);
      const int b = faces_(i, (k + 1) % 3);
      half_edges.emplace_back(std::min(a, b), std::max(a, b), i, a < b);
    }
  }
  std::sort(half_edges.begin(), half_edges.end());
  for (std::size_t s = 0; s < half_edges.size();) {
    std::size_t e = s;
    while (e < half_edges.size() && std::get<0>(half_edges[e]) == std::get<0>(half_edges[s]) &&
           std::get<1>(half_edges[e]) == std::get<1>(half_edges[s])) {
      ++e;
    }
    const auto [lo, hi, face, forward] = half_edges[s];
    if (e - s == 1) {
      ++num_boundary_edges_;
    } else if (e - s == 2) {
      InteriorEdge edge;
      edge.v0 = lo;
      edge.v1 = hi;
      const auto& other = half_edges[s + 1];
      // Keep face0 as the face traversing lo -> hi when orientation allows it.
      if (forward || !std::get<3>(other)) {
        edge.face0 = face;
        edge.face1 = std::get<2>(other);
      } else {
        edge.face0 = std::get<2>(other);
        edge.face1 = face;
      }
      edge.length_sq = (vertices_.row(hi) - vertices_.row(lo)).squaredNorm();
      interior_edges_.push_back(edge);
    } else {
      throw InputError("non-manifold edge (" + std::to_string(lo) + ", " + std::to_string(hi) +
                       ") shared by " + std::to_string(e - s) + " faces");
    }
    s = e;
  }
}

Eigen::Vector3d TriMesh::face_centroid(int f) const {
  return (vertices_.row(faces_(f, 0)) + vertices_.row(faces_(f, 1)) + vertices_.row(faces_(f, 2)))
             .transpose() /
         3.0;
}

TriMesh TriMesh::with_vertices(Vertices vertices) const {
  return TriMesh(std::move(vertices), faces_);
}

double total_surface_area(const TriMesh& mesh) { return mesh.face_areas().sum(); }

Eigen::Vector3d area_centroid(const TriMesh& mesh) {
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (int f = 0; f < mesh.num_faces(); ++f) acc += mesh.face_areas()(f) * mesh.face_centroid(f);
  return acc / total_surface_area(mesh);
}

}  // namespace snk
