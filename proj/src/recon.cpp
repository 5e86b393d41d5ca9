#include "snk/recon.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "snk/error.hpp"

namespace snk {
namespace {

constexpr double kMinSingular = 1e-8;
constexpr double kMinDenominator = 1e-6;

struct PolarSvd {
  Eigen::Matrix3d u;  // with the reflection folded in
  Eigen::Matrix3d v;
  Eigen::Vector3d sigma;  // signed: last entry carries det(U) det(V)
};

PolarSvd polar_svd(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  if (!(s(2) >= kMinSingular)) throw NumericalError("degenerate rotation estimate");
  PolarSvd out{svd.matrixU(), svd.matrixV(), s};
  const double d = out.u.determinant() * out.v.determinant();
  if (d < 0) {
    out.u.col(2) *= -1.0;
    out.sigma(2) *= -1.0;
  }
  return out;
}

Eigen::Matrix3d row_to_mat(const ad::Matrix& m, Eigen::Index r) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out(i, j) = m(r, 3 * i + j);
  }
  return out;
}

void mat_to_row(const Eigen::Matrix3d& m, ad::Matrix& out, Eigen::Index r) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out(r, 3 * i + j) = m(i, j);
  }
}

}  // namespace

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  const PolarSvd p = polar_svd(m);
  return p.u * p.v.transpose();
}

ad::Tensor orthogonalize(const ad::Tensor& r0) {
  if (r0.cols() != 9) throw InputError("orthogonalize expects m x 9 rows of 3x3 matrices");
  const ad::Matrix& in = r0.value();
  ad::Matrix out(in.rows(), 9);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    mat_to_row(nearest_rotation(row_to_mat(in, r)), out, r);
  }
  return r0.tape().record(std::move(out), {r0}, [r0](ad::Tape& tape, const ad::Matrix& g,
                                                     const ad::Matrix&) {
    const ad::Matrix& in = r0.value();
    ad::Matrix grad(in.rows(), 9);
    for (Eigen::Index r = 0; r < in.rows(); ++r) {
      const PolarSvd p = polar_svd(row_to_mat(in, r));
      const Eigen::Matrix3d h = p.u.transpose() * row_to_mat(g, r) * p.v;
      Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          if (i == j) continue;
          double denom = p.sigma(i) + p.sigma(j);
          if (std::abs(denom) < kMinDenominator) denom = std::copysign(kMinDenominator, denom);
          a(i, j) = (h(i, j) - h(j, i)) / denom;
        }
      }
      mat_to_row(p.u * a * p.v.transpose(), grad, r);
    }
    tape.accumulate(r0, grad);
  });
}

// ---------------------------------------------------------------------------

ShapeEncoder::ShapeEncoder(const ReconConfig& config, std::mt19937_64& rng)
    : backbone_({config.n_blocks, config.width, 3, config.latent_dim}, "encoder", rng) {}

ad::Tensor ShapeEncoder::encode(ad::Tape& tape, const SpectralBasis& basis,
                                const ad::Tensor& xyz) {
  return ad::max(backbone_.forward(tape, basis, xyz), ad::Axis::Rows);
}

PrismDecoder::PrismDecoder(const ReconConfig& config, std::mt19937_64& rng)
    : config_(config),
      backbone_({config.n_blocks, config.width, 3 + config.latent_dim, config.decoder_dim},
                "decoder", rng) {
  if (config.head_widths.empty() || config.head_widths.back() != 12) {
    throw InputError("decoder head must end with 12 outputs");
  }
  int fan_in = config.decoder_dim;
  for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
    const std::string prefix = "decoder.head" + std::to_string(i);
    head_w_.push_back(linear_weight(prefix + ".w", fan_in, config.head_widths[i], rng));
    head_b_.push_back(linear_bias(prefix + ".b", fan_in, config.head_widths[i], rng));
    fan_in = config.head_widths[i];
  }
  ad::Parameter& last_w = head_w_.back();
  ad::Parameter& last_b = head_b_.back();
  last_w.value.setZero();
  last_b.value.setZero();
  for (int d = 0; d < 3; ++d) last_b.value(0, 3 + 4 * d) = 1.0;
}

ad::Tensor PrismDecoder::face_features(ad::Tape& tape, const SpectralBasis& basis,
                                       const TriMesh& mesh, const ad::Tensor& xyz,
                                       const ad::Tensor& latent) {
  const ad::Tensor input = ad::concat_cols({xyz, ad::repeat_rows(latent, xyz.rows())});
  return face_pool(mesh, backbone_.forward(tape, basis, input));
}

FaceTransforms PrismDecoder::decode(ad::Tape& tape, const SpectralBasis& basis,
                                    const TriMesh& mesh, const ad::Tensor& xyz,
                                    const ad::Tensor& latent) {
  ad::Tensor h = face_features(tape, basis, mesh, xyz, latent);
  for (std::size_t i = 0; i < head_w_.size(); ++i) {
    h = linear(tape, h, head_w_[i], head_b_[i]);
    if (i + 1 < head_w_.size()) h = ad::relu(h);
  }
  return split_head(h);
}

FaceTransforms PrismDecoder::split_head(const ad::Tensor& head_out) {
  if (head_out.cols() != 12) throw InputError("decoder head output must have 12 columns");
  return {ad::slice_cols(head_out, 0, 3), orthogonalize(ad::slice_cols(head_out, 3, 9))};
}

std::vector<ad::Parameter*> PrismDecoder::parameters() {
  std::vector<ad::Parameter*> out = backbone_.parameters();
  for (std::size_t i = 0; i < head_w_.size(); ++i) {
    out.push_back(&head_w_[i]);
    out.push_back(&head_b_[i]);
  }
  return out;
}

ad::Tensor face_pool(const TriMesh& mesh, const ad::Tensor& vertex_features) {
  auto segments = std::make_shared<ad::Segments>();
  segments->offsets.reserve(static_cast<std::size_t>(mesh.num_faces()) + 1);
  segments->indices.reserve(3 * static_cast<std::size_t>(mesh.num_faces()));
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) segments->indices.push_back(mesh.faces()(f, c));
    segments->offsets.push_back(3 * (f + 1));
  }
  return ad::segment_mean(vertex_features, std::move(segments));
}

ad::Tensor reconstruct_vertices(const TriMesh& mesh, const FaceTransforms& transforms) {
  const int f = mesh.num_faces();
  if (transforms.translation.rows() != f || transforms.rotation.rows() != f) {
    throw InputError("reconstruct_vertices: need one transform per face");
  }
  ad::Tape& tape = transforms.translation.tape();
  ad::Matrix offsets(3 * f, 3);
  ad::Matrix centroids(3 * f, 3);
  std::vector<int> face_of_corner(3 * static_cast<std::size_t>(f));
  std::vector<std::vector<int>> corners_of_vertex(static_cast<std::size_t>(mesh.num_vertices()));
  for (int i = 0; i < f; ++i) {
    const Eigen::RowVector3d c = mesh.face_centroid(i).transpose();
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.faces()(i, k);
      offsets.row(3 * i + k) = mesh.vertices().row(v) - c;
      centroids.row(3 * i + k) = c;
      face_of_corner[3 * i + k] = i;
      corners_of_vertex[v].push_back(3 * i + k);
    }
  }
  const ad::Tensor rotated =
      ad::batched_matvec3(transforms.rotation, tape.constant(std::move(offsets)), 3);
  const ad::Tensor moved = ad::add(ad::add(rotated, tape.constant(std::move(centroids))),
                                   ad::gather_rows(transforms.translation, face_of_corner));
  return ad::segment_mean(moved, std::make_shared<ad::Segments>(
                                     ad::Segments::from_lists(corners_of_vertex)));
}

}  // namespace snk
