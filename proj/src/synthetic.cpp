#include "snk/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <utility>

namespace snk::synthetic {
namespace {

TriMesh from_lists(const std::vector<Eigen::Vector3d>& verts,
                   const std::vector<Eigen::Vector3i>& faces) {
  Vertices v(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = verts[i];
  Faces f(static_cast<Eigen::Index>(faces.size()), 3);
  for (std::size_t i = 0; i < faces.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = faces[i];
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace

TriMesh tetrahedron(double edge) {
  const double s = edge / (2.0 * std::sqrt(2.0));
  std::vector<Eigen::Vector3d> v = {
      {s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  std::vector<Eigen::Vector3i> f = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return from_lists(v, f);
}

TriMesh icosphere(int frequency, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::array<Eigen::Vector3d, 12> base = {{{-1, t, 0},
                                                 {1, t, 0},
                                                 {-1, -t, 0},
                                                 {1, -t, 0},
                                                 {0, -1, t},
                                                 {0, 1, t},
                                                 {0, -1, -t},
                                                 {0, 1, -t},
                                                 {t, 0, -1},
                                                 {t, 0, 1},
                                                 {-t, 0, -1},
                                                 {-t, 0, 1}}};
  const std::array<std::array<int, 3>, 20> base_faces = {{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},
                                                          {0, 7, 10}, {0, 10, 11}, {1, 5, 9},
                                                          {5, 11, 4}, {11, 10, 2}, {10, 7, 6},
                                                          {7, 1, 8},  {3, 9, 4},  {3, 4, 2},
                                                          {3, 2, 6},  {3, 6, 8},  {3, 8, 9},
                                                          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},
                                                          {8, 6, 7},  {9, 8, 1}}};
  const int n = std::max(1, frequency);

  // A lattice point is sum_k (w_k / n) * corner_k; its key is the sorted list
  // of (corner, weight) with nonzero weight, which is shared across faces.
  using Key = std::vector<std::pair<int, int>>;
  std::map<Key, int> index;
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  for (const auto& bf : base_faces) {
    auto vertex_at = [&](int i, int j) {
      Key key;
      const std::array<int, 3> w = {n - i - j, i, j};
      for (int c = 0; c < 3; ++c) {
        if (w[c] > 0) key.emplace_back(bf[c], w[c]);
      }
      std::sort(key.begin(), key.end());
      auto [it, inserted] = index.try_emplace(key, static_cast<int>(verts.size()));
      if (inserted) {
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        for (const auto& [corner, weight] : key) p += base[corner] * weight;
        verts.push_back(radius * p.normalized());
      }
      return it->second;
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; i + j < n; ++j) {
        faces.emplace_back(vertex_at(i, j), vertex_at(i + 1, j), vertex_at(i, j + 1));
        if (i + j + 2 <= n) {
          faces.emplace_back(vertex_at(i + 1, j), vertex_at(i + 1, j + 1), vertex_at(i, j + 1));
        }
      }
    }
  }
  return from_lists(verts, faces);
}

TriMesh grid(int nx, int ny, double size_x, double size_y) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<Eigen::Vector3i> faces;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) verts.emplace_back(size_x * i / nx, size_y * j / ny, 0.0);
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      faces.emplace_back(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      faces.emplace_back(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  return from_lists(verts, faces);
}

TriMesh asymmetric_blob(int frequency) {
  const TriMesh sphere = icosphere(frequency, 1.0);
  struct Bump {
    Eigen::Vector3d center;
    double amplitude;
    double width;
  };
  const std::array<Bump, 4> bumps = {{
      {Eigen::Vector3d(0.85, 0.45, 0.25).normalized(), 0.45, 0.35},
      {Eigen::Vector3d(-0.6, -0.2, 0.75).normalized(), 0.30, 0.30},
      {Eigen::Vector3d(-0.3, 0.9, -0.3).normalized(), 0.22, 0.40},
      {Eigen::Vector3d(0.2, -0.7, -0.65).normalized(), 0.15, 0.25},
  }};
  const Eigen::Vector3d axes(1.6, 0.6, 0.5);
  Vertices v = sphere.vertices();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const Eigen::Vector3d dir = sphere.vertices().row(i).transpose();
    double scale = 1.0;
    for (const Bump& b : bumps) {
      scale += b.amplitude * std::exp(-(dir - b.center).squaredNorm() / (b.width * b.width));
    }
    v.row(i) = (axes.cwiseProduct(dir) * scale).transpose();
  }
  return sphere.with_vertices(std::move(v));
}

Vertices bend(const Vertices& vertices, double radius) {
  Vertices out(vertices.rows(), 3);
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
    const double x = vertices(i, 0);
    const double y = vertices(i, 1);
    const double angle = x / radius;
    out(i, 0) = (radius - y) * std::sin(angle);
    out(i, 1) = radius - (radius - y) * std::cos(angle);
    out(i, 2) = vertices(i, 2);
  }
  return out;
}

TriMesh permute_vertices(const TriMesh& mesh, const std::vector<int>& perm) {
  const int n = mesh.num_vertices();
  std::vector<int> inverse(static_cast<std::size_t>(n));
  Vertices v(n, 3);
  for (int i = 0; i < n; ++i) {
    v.row(i) = mesh.vertices().row(perm[i]);
    inverse[perm[i]] = i;
  }
  Faces f = mesh.faces();
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (int c = 0; c < 3; ++c) f(r, c) = inverse[f(r, c)];
  }
  return TriMesh(std::move(v), std::move(f));
}

std::vector<int> random_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with explicit draws: std::shuffle is not portable across
  // standard libraries.
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

}  // namespace snk::synthetic
