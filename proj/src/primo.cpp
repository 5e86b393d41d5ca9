#include "snk/primo.hpp"

#include <cmath>
#include <cstdlib>

#include "snk/error.hpp"

namespace snk {
namespace {

// (u, v) indices of the corners in PatchCorners order.
constexpr std::array<std::array<int, 2>, 4> kCornerUV = {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};

Eigen::Matrix4d make_kernel() {
  Eigen::Matrix4d k;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int dist = std::abs(kCornerUV[a][0] - kCornerUV[b][0]) +
                       std::abs(kCornerUV[a][1] - kCornerUV[b][1]);
      k(a, b) = std::ldexp(1.0, -dist);
    }
  }
  return k;
}

}  // namespace

const Eigen::Matrix4d& bilinear_kernel() {
  static const Eigen::Matrix4d k = make_kernel();
  return k;
}

double bilinear_inner(const PatchCorners& a, const PatchCorners& b) {
  const Eigen::Matrix4d& k = bilinear_kernel();
  double acc = 0.0;
  for (int p = 0; p < 4; ++p) {
    for (int q = 0; q < 4; ++q) acc += k(p, q) * a[p].dot(b[q]);
  }
  return acc / 9.0;
}

PrismLayer build_prisms(const TriMesh& mesh, double height, Extrusion extrusion) {
  if (height < 0.0) throw InputError("prism height must be >= 0");
  PrismLayer layer;
  layer.height = height;
  layer.extrusion = extrusion;

  const auto& V = mesh.vertices();
  const auto& N = mesh.vertex_normals();
  auto bottom = [&](int v) -> Eigen::Vector3d {
    return extrusion == Extrusion::Symmetric ? Eigen::Vector3d(V.row(v) - height * N.row(v))
                                             : Eigen::Vector3d(V.row(v));
  };
  auto top = [&](int v) -> Eigen::Vector3d { return V.row(v) + height * N.row(v); };

  layer.prisms.resize(static_cast<std::size_t>(mesh.num_faces()));
  layer.centroids.resize(mesh.num_faces(), 3);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      layer.prisms[f][c] = bottom(mesh.faces()(f, c));
      layer.prisms[f][3 + c] = top(mesh.faces()(f, c));
    }
    layer.centroids.row(f) = mesh.face_centroid(f).transpose();
  }

  layer.joints.reserve(mesh.interior_edges().size());
  for (const InteriorEdge& e : mesh.interior_edges()) {
    PrismJoint joint;
    joint.face_i = e.face0;
    joint.face_j = e.face1;
    joint.v0 = e.v0;
    joint.v1 = e.v1;
    joint.weight =
        e.length_sq / (mesh.face_areas()(e.face0) + mesh.face_areas()(e.face1));
    joint.corners = {bottom(e.v0), bottom(e.v1), top(e.v0), top(e.v1)};
    layer.joints.push_back(joint);
  }
  return layer;
}

PatchCorners move_patch(const PatchCorners& corners, const Eigen::Vector3d& centroid,
                        const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
  PatchCorners out;
  for (int c = 0; c < 4; ++c) out[c] = rotation * (corners[c] - centroid) + centroid + translation;
  return out;
}

ad::Tensor primo_energy(const PrismLayer& layer, const FaceTransforms& transforms) {
  const auto faces = static_cast<Eigen::Index>(layer.prisms.size());
  if (transforms.rotation.rows() != faces || transforms.translation.rows() != faces) {
    throw InputError("primo_energy: need one transform per face");
  }
  ad::Tape& tape = transforms.rotation.tape();
  const auto rows = static_cast<Eigen::Index>(4 * layer.joints.size());
  if (rows == 0) return tape.constant(ad::Matrix::Zero(1, 1));

  ad::Matrix offsets_i(rows, 3), offsets_j(rows, 3), pivots_i(rows, 3), pivots_j(rows, 3);
  std::vector<int> face_i(static_cast<std::size_t>(rows)), face_j(static_cast<std::size_t>(rows));
  std::vector<Eigen::Triplet<double>> kernel;
  kernel.reserve(16 * layer.joints.size());
  const Eigen::Matrix4d& k = bilinear_kernel();
  for (std::size_t e = 0; e < layer.joints.size(); ++e) {
    const PrismJoint& joint = layer.joints[e];
    const auto base = static_cast<Eigen::Index>(4 * e);
    for (int c = 0; c < 4; ++c) {
      const Eigen::RowVector3d p = joint.corners[c].transpose();
      offsets_i.row(base + c) = p - layer.centroids.row(joint.face_i);
      offsets_j.row(base + c) = p - layer.centroids.row(joint.face_j);
      pivots_i.row(base + c) = layer.centroids.row(joint.face_i);
      pivots_j.row(base + c) = layer.centroids.row(joint.face_j);
      face_i[static_cast<std::size_t>(base + c)] = joint.face_i;
      face_j[static_cast<std::size_t>(base + c)] = joint.face_j;
      for (int d = 0; d < 4; ++d) {
        kernel.emplace_back(base + c, base + d, joint.weight * k(c, d) / 9.0);
      }
    }
  }
  auto K = std::make_shared<ad::SparseMatrix>(rows, rows);
  K->setFromTriplets(kernel.begin(), kernel.end());

  auto moved = [&](const std::vector<int>& face, ad::Matrix offsets, ad::Matrix pivots) {
    const ad::Tensor rotated = ad::batched_matvec3(ad::gather_rows(transforms.rotation, face),
                                                   tape.constant(std::move(offsets)));
    return ad::add(ad::add(rotated, tape.constant(std::move(pivots))),
                   ad::gather_rows(transforms.translation, face));
  };
  const ad::Tensor gap = ad::sub(moved(face_i, std::move(offsets_i), std::move(pivots_i)),
                                 moved(face_j, std::move(offsets_j), std::move(pivots_j)));
  return ad::sum(ad::mul(gap, ad::sparse_matmul(K, gap)));
}

double primo_energy_value(const PrismLayer& layer, const Eigen::MatrixXd& rotations,
                          const Eigen::MatrixXd& translations) {
  double energy = 0.0;
  for (const PrismJoint& joint : layer.joints) {
    auto transform = [&](int f) {
      Eigen::Matrix3d r;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) r(i, j) = rotations(f, 3 * i + j);
      }
      return move_patch(joint.corners, layer.centroids.row(f).transpose(), r,
                        translations.row(f).transpose());
    };
    const PatchCorners a = transform(joint.face_i);
    const PatchCorners b = transform(joint.face_j);
    PatchCorners d;
    for (int c = 0; c < 4; ++c) d[c] = a[c] - b[c];
    energy += joint.weight * bilinear_inner(d, d);
  }
  return energy;
}

}  // namespace snk
