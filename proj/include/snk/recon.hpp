#pragma once

#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "snk/autodiff.hpp"
#include "snk/diffusion_net.hpp"
#include "snk/mesh.hpp"
#include "snk/spectral.hpp"

namespace snk {

/// Per-face rigid motions. Rotation rows hold row-major 3x3 matrices.
/// Face i moves a point p to R_i (p - c_i) + c_i + t_i with c_i the
/// undeformed face centroid.
struct FaceTransforms {
  ad::Tensor translation;  // f x 3
  ad::Tensor rotation;     // f x 9
};

/// Nearest proper rotation in Frobenius norm: U diag(1, 1, det U det V) V^T.
/// Throws NumericalError("degenerate rotation estimate") when the smallest
/// singular value is below 1e-8.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

/// Batched nearest_rotation on an m x 9 tensor. The backward pass is the SVD
/// differential of the polar factor with the reflection folded into the
/// singular values; denominators sigma_i + sigma_j are kept at least 1e-6 in
/// magnitude.
ad::Tensor orthogonalize(const ad::Tensor& r0);

struct ReconConfig {
  int n_blocks = 4;
  int width = 128;
  int latent_dim = 512;
  int decoder_dim = 512;
  /// Output widths of the face-wise head; the last must be 12.
  std::vector<int> head_widths = {512, 256, 64, 12};
};

/// Target encoder: backbone on xyz, then max over vertices.
class ShapeEncoder {
 public:
  ShapeEncoder(const ReconConfig& config, std::mt19937_64& rng);

  /// 1 x latent_dim latent code.
  ad::Tensor encode(ad::Tape& tape, const SpectralBasis& basis, const ad::Tensor& xyz);
  std::vector<ad::Parameter*> parameters() { return backbone_.parameters(); }

 private:
  Backbone backbone_;
};

/// Prism decoder: (xyz ++ latent) -> backbone -> per-face mean pooling ->
/// pointwise head -> translation and rotation per face.
///
/// The head's last layer starts with zero weights and an identity-rotation
/// bias, so an untrained decoder returns identity transforms.
class PrismDecoder {
 public:
  PrismDecoder(const ReconConfig& config, std::mt19937_64& rng);

  FaceTransforms decode(ad::Tape& tape, const SpectralBasis& basis, const TriMesh& mesh,
                        const ad::Tensor& xyz, const ad::Tensor& latent);

  /// Face-wise features G (f x decoder_dim) before the head, for inspection.
  ad::Tensor face_features(ad::Tape& tape, const SpectralBasis& basis, const TriMesh& mesh,
                           const ad::Tensor& xyz, const ad::Tensor& latent);

  /// Turns head output H (f x 12) into transforms.
  static FaceTransforms split_head(const ad::Tensor& head_out);

  std::vector<ad::Parameter*> parameters();

  Backbone& backbone() { return backbone_; }
  std::vector<ad::Parameter>& head_weights() { return head_w_; }
  std::vector<ad::Parameter>& head_biases() { return head_b_; }

 private:
  ReconConfig config_;
  Backbone backbone_;
  std::vector<ad::Parameter> head_w_;
  std::vector<ad::Parameter> head_b_;
};

/// Mean of each face's vertex rows: G_i = (D_a + D_b + D_c) / 3.
ad::Tensor face_pool(const TriMesh& mesh, const ad::Tensor& vertex_features);

/// Moves every face rigidly and averages each vertex over its incident faces.
ad::Tensor reconstruct_vertices(const TriMesh& mesh, const FaceTransforms& transforms);

}  // namespace snk
