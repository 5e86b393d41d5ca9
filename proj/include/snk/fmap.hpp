#pragma once

#include <filesystem>

#include "snk/autodiff.hpp"
#include "snk/spectral.hpp"

namespace snk {

/// Which way a map transports information. For functional maps, `OneToTwo`
/// (C12) takes spectral coefficients on shape 1 to coefficients on shape 2.
/// For soft point maps, P21 (`TwoToOne`) is n2 x n1: row i is a distribution
/// over shape-1 vertices for vertex i of shape 2.
enum class Direction { OneToTwo, TwoToOne };

inline Direction reversed(Direction d) {
  return d == Direction::OneToTwo ? Direction::TwoToOne : Direction::OneToTwo;
}

struct FunctionalMap {
  ad::Tensor C;  // k x k
  Direction direction = Direction::OneToTwo;
};

struct SoftP2P {
  ad::Tensor P;  // row-stochastic
  double temperature = 0.0;
  Direction direction = Direction::TwoToOne;
};

/// argmin_C ||C A1 - A2||_F^2 + lambda ||C diag(evals1) - diag(evals2) C||_F^2,
/// solved one row at a time (the penalty is diagonal per row). A1, A2 are
/// k x d descriptor coefficients. Differentiable w.r.t. A1 and A2; the
/// backward pass reuses the row factorizations. A row system that is not
/// positive definite gets a 1e-9 ridge and a warning.
ad::Tensor solve_fmap(const ad::Tensor& A1, const ad::Tensor& A2, const Eigen::VectorXd& evals1,
                      const Eigen::VectorXd& evals2, double lambda);

/// Soft map P21 from C12: row i is softmax_j(-|(phi2 C12)_i - (phi1)_j|^2 / tau), so the
/// hard argmax of a row is the nearest neighbor of (phi2 C12)_i among the rows of phi1.
ad::Tensor soft_p2p(const ad::Tensor& C12, const SpectralBasis& basis1,
                    const SpectralBasis& basis2, double tau);

/// C_ij = phi_j^T M_j P_ji phi_i for P_ji of shape n_j x n_i.
ad::Tensor fmap_from_p2p(const ad::Tensor& P_ji, const SpectralBasis& basis_i,
                         const SpectralBasis& basis_j);

struct FmapOutputs {
  FunctionalMap initial12, initial21;  // least-squares solutions
  FunctionalMap c12, c21;              // re-estimated from soft point maps
  SoftP2P p12, p21;                    // final soft maps
};

/// Features -> coefficients -> C0 both ways -> soft maps -> C from soft maps
/// -> final soft maps. All outputs stay on the features' tape.
FmapOutputs fmap_forward(const ad::Tensor& feat1, const ad::Tensor& feat2,
                         const SpectralBasis& basis1, const SpectralBasis& basis2, double lambda,
                         double tau);

/// Plain-text matrix dump: one row per line, space separated.
void write_matrix_text(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace snk
