#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "snk/mesh.hpp"

namespace snk {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Truncated Laplace-Beltrami eigenbasis of one shape.
///
/// `phi` is M-orthonormal (phi^T diag(mass) phi = I), `evals` ascending with
/// evals(0) ~ 0 for the constant mode.
struct SpectralBasis {
  Eigen::MatrixXd phi;    // n x k
  Eigen::VectorXd evals;  // k
  Eigen::VectorXd mass;   // n, lumped vertex areas

  int k() const { return static_cast<int>(phi.cols()); }
  int num_vertices() const { return static_cast<int>(phi.rows()); }

  /// First `k` eigenpairs.
  SpectralBasis truncated(int k) const;

  /// phi^T M, the left pseudo-inverse of phi (k x n).
  Eigen::MatrixXd pinv() const;
};

/// Positive-semidefinite cotangent Laplacian: off-diagonal
/// -(cot a + cot b)/2, diagonal = -sum of the row's off-diagonals.
/// Cotangents beyond +-1e6 (slivers) are clamped with a warning.
SparseMatrix cotan_laplacian(const TriMesh& mesh);

/// Barycentric lumped mass: one third of the incident face areas.
/// Throws InputError for isolated vertices.
Eigen::VectorXd lumped_mass(const TriMesh& mesh);

enum class EigenMethod {
  Auto,      // dense for small meshes, subspace iteration otherwise
  Dense,     // reduces to M^-1/2 L M^-1/2 and solves densely
  Subspace,  // shift-invert block subspace iteration with Rayleigh-Ritz
};

/// Smallest-k generalized eigenpairs of L phi = lambda M phi. Each
/// eigenvector's largest-magnitude entry is made positive.
/// Throws NumericalError when the residual does not converge.
SpectralBasis eigendecompose(const SparseMatrix& L, const Eigen::VectorXd& mass, int k,
                             EigenMethod method = EigenMethod::Auto);

SpectralBasis compute_basis(const TriMesh& mesh, int k, EigenMethod method = EigenMethod::Auto);

/// phi^T M f: spectral coefficients of the columns of f.
Eigen::MatrixXd project(const SpectralBasis& basis, const Eigen::MatrixXd& f);

/// max_j ||L phi_j - lambda_j M phi_j|| / ||phi_j||.
double max_residual(const SparseMatrix& L, const SpectralBasis& basis);

// ---------------------------------------------------------------------------
// On-disk cache

struct BasisCacheKey {
  std::uint64_t content_hash = 0;
  int k = 0;
  bool normalized = false;
};

/// FNV-1a hash of the file bytes.
std::uint64_t file_content_hash(const std::filesystem::path& path);

void save_basis(const std::filesystem::path& path, const SpectralBasis& basis,
                const BasisCacheKey& key);

/// Returns nullopt if the file is missing, unreadable, or was written for a
/// different key.
std::optional<SpectralBasis> load_basis(const std::filesystem::path& path,
                                        const BasisCacheKey& key);

}  // namespace snk
