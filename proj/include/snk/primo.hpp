#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "snk/autodiff.hpp"
#include "snk/mesh.hpp"
#include "snk/recon.hpp"

namespace snk {

/// Four corner values of a bilinear patch, ordered 00, 10, 01, 11 where the
/// first index runs along the shared edge and the second across the layer
/// height.
using PatchCorners = std::array<Eigen::Vector3d, 4>;

enum class Extrusion {
  Symmetric,  // corners at v - h n and v + h n
  OneSided,   // corners at v and v + h n
};

/// The elastic joint between the two prisms sharing one interior edge.
/// In the undeformed state both prisms see the same four corners.
struct PrismJoint {
  int face_i = 0;
  int face_j = 0;
  int v0 = 0;  // edge vertices, v0 < v1; u runs from v0 to v1
  int v1 = 0;
  double weight = 0.0;  // |e|^2 / (|F_i| + |F_j|)
  PatchCorners corners;
};

struct PrismLayer {
  double height = 0.0;
  Extrusion extrusion = Extrusion::Symmetric;
  /// Per face: the three bottom corners then the three top corners, in face
  /// vertex order.
  std::vector<std::array<Eigen::Vector3d, 6>> prisms;
  Vertices centroids;  // undeformed face centroids (rotation pivots)
  std::vector<PrismJoint> joints;
};

PrismLayer build_prisms(const TriMesh& mesh, double height,
                        Extrusion extrusion = Extrusion::Symmetric);

/// 4x4 kernel 2^(-|i-k| - |j-l|) over corner pairs in PatchCorners order.
const Eigen::Matrix4d& bilinear_kernel();

/// Integral over the unit square of the dot product of two bilinearly
/// interpolated vector fields, in closed form: (1/9) sum a_ij . b_kl K.
double bilinear_inner(const PatchCorners& a, const PatchCorners& b);

/// Corners of one side of a joint after moving its prism rigidly.
PatchCorners move_patch(const PatchCorners& corners, const Eigen::Vector3d& centroid,
                        const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

/// Sum over interior edges of w_ij * <d, d> with d the gap between the two
/// rigidly moved copies of the shared patch. Differentiable w.r.t. both
/// transform tensors.
ad::Tensor primo_energy(const PrismLayer& layer, const FaceTransforms& transforms);

/// Same energy evaluated without a tape, for checks and reporting.
double primo_energy_value(const PrismLayer& layer, const Eigen::MatrixXd& rotations,
                          const Eigen::MatrixXd& translations);

}  // namespace snk
