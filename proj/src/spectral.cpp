#include "snk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "snk/error.hpp"
#include "snk/log.hpp"

namespace snk {
namespace {

constexpr double kCotClamp = 1e6;
constexpr int kDenseLimit = 1500;

void fix_signs(Eigen::MatrixXd& phi) {
  for (Eigen::Index j = 0; j < phi.cols(); ++j) {
    Eigen::Index arg = 0;
    phi.col(j).cwiseAbs().maxCoeff(&arg);
    if (phi(arg, j) < 0) phi.col(j) *= -1.0;
  }
}

SpectralBasis dense_eigs(const SparseMatrix& L, const Eigen::VectorXd& mass, int k) {
  const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd S = Eigen::MatrixXd(L);
  S = inv_sqrt.asDiagonal() * S * inv_sqrt.asDiagonal();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  SpectralBasis basis;
  basis.evals = solver.eigenvalues().head(k);
  basis.phi = inv_sqrt.asDiagonal() * solver.eigenvectors().leftCols(k);
  basis.mass = mass;
  return basis;
}

SpectralBasis subspace_eigs(const SparseMatrix& L, const Eigen::VectorXd& mass, int k) {
  const Eigen::Index n = L.rows();
  const int block = static_cast<int>(std::min<Eigen::Index>(n, k + std::max(20, k / 2)));

  // L is singular (constant mode); a small positive shift relative to the
  // mean diagonal makes it definite without reordering the spectrum.
  const double scale = (L.diagonal().array() / mass.array()).mean();
  const double shift = 1e-8 * scale;
  SparseMatrix shifted = L;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift * mass(i);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw NumericalError("sparse factorization failed");

  Eigen::MatrixXd X(n, block);
  // Deterministic start: smooth-ish functions plus a hash pattern.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < block; ++j) {
      const auto h = static_cast<std::uint64_t>(i * 2654435761u + j * 40503u + 17u) % 1000003u;
      X(i, j) = static_cast<double>(h) / 1000003.0 - 0.5;
    }
  }
  X.col(0).setOnes();

  SpectralBasis basis;
  basis.mass = mass;
  double residual = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    Eigen::MatrixXd Y = ldlt.solve(mass.asDiagonal() * X);
    const Eigen::MatrixXd A = Y.transpose() * (L * Y);
    const Eigen::MatrixXd B = Y.transpose() * mass.asDiagonal() * Y;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> small(0.5 * (A + A.transpose()),
                                                                    0.5 * (B + B.transpose()));
    if (small.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz step failed");
    X = Y * small.eigenvectors();
    basis.evals = small.eigenvalues().head(k);
    basis.phi = X.leftCols(k);

    residual = 0.0;
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd r =
          L * basis.phi.col(j) - basis.evals(j) * mass.cwiseProduct(basis.phi.col(j));
      residual = std::max(residual, r.norm() / basis.phi.col(j).norm() / std::max(1.0, basis.evals(j)));
    }
    if (residual < 1e-11) return basis;
  }
  if (residual < 1e-8) return basis;
  throw NumericalError("eigensolver did not converge: relative residual " +
                       std::to_string(residual));
}

}  // namespace

SpectralBasis SpectralBasis::truncated(int kk) const {
  if (kk > k()) {
    throw InputError("requested " + std::to_string(kk) + " eigenpairs but only " +
                     std::to_string(k()) + " were computed");
  }
  return {phi.leftCols(kk), evals.head(kk), mass};
}

Eigen::MatrixXd SpectralBasis::pinv() const { return phi.transpose() * mass.asDiagonal(); }

SparseMatrix cotan_laplacian(const TriMesh& mesh) {
  const auto& V = mesh.vertices();
  const auto& F = mesh.faces();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(12 * static_cast<std::size_t>(mesh.num_faces()));
  int clamped = 0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) {
      const int o = F(f, c);
      const int a = F(f, (c + 1) % 3);
      const int b = F(f, (c + 2) % 3);
      const Eigen::Vector3d u = V.row(a) - V.row(o);
      const Eigen::Vector3d v = V.row(b) - V.row(o);
      const double cross = u.cross(v).norm();
      double cot = cross > 0.0 ? u.dot(v) / cross : kCotClamp;
      if (std::abs(cot) > kCotClamp) {
        cot = std::copysign(kCotClamp, cot);
        ++clamped;
      }
      const double w = 0.5 * cot;
      triplets.emplace_back(a, b, -w);
      triplets.emplace_back(b, a, -w);
      triplets.emplace_back(a, a, w);
      triplets.emplace_back(b, b, w);
    }
  }
  if (clamped > 0) {
    log::warn("cotan_laplacian: clamped " + std::to_string(clamped) +
              " cotangents on near-degenerate triangles");
  }
  SparseMatrix L(mesh.num_vertices(), mesh.num_vertices());
  L.setFromTriplets(triplets.begin(), triplets.end());
  L.makeCompressed();
  return L;
}

Eigen::VectorXd lumped_mass(const TriMesh& mesh) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) mass(mesh.faces()(f, c)) += mesh.face_areas()(f) / 3.0;
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!(mass(v) > 0.0)) {
      throw InputError("isolated vertex " + std::to_string(v) + " has zero mass");
    }
  }
  return mass;
}

SpectralBasis eigendecompose(const SparseMatrix& L, const Eigen::VectorXd& mass, int k,
                             EigenMethod method) {
  const auto n = static_cast<int>(L.rows());
  if (k < 1 || k > n) {
    throw InputError("eigendecompose: k=" + std::to_string(k) + " not in [1, " +
                     std::to_string(n) + "]");
  }
  if (mass.size() != n || (mass.array() <= 0.0).any()) {
    throw InputError("eigendecompose: mass must be positive with one entry per vertex");
  }
  if (method == EigenMethod::Auto) {
    method = (n <= kDenseLimit || k + 20 >= n) ? EigenMethod::Dense : EigenMethod::Subspace;
  }
  SpectralBasis basis =
      method == EigenMethod::Dense ? dense_eigs(L, mass, k) : subspace_eigs(L, mass, k);
  fix_signs(basis.phi);

  const double res = max_residual(L, basis);
  const double tol = 1e-6 * std::max(1.0, basis.evals.cwiseAbs().maxCoeff());
  if (!(res < tol)) {
    throw NumericalError("eigensolver did not converge: residual norm " + std::to_string(res));
  }
  return basis;
}

SpectralBasis compute_basis(const TriMesh& mesh, int k, EigenMethod method) {
  return eigendecompose(cotan_laplacian(mesh), lumped_mass(mesh), k, method);
}

Eigen::MatrixXd project(const SpectralBasis& basis, const Eigen::MatrixXd& f) {
  if (f.rows() != basis.num_vertices()) {
    throw InputError("project: function has " + std::to_string(f.rows()) + " rows, basis has " +
                     std::to_string(basis.num_vertices()) + " vertices");
  }
  return basis.phi.transpose() * (basis.mass.asDiagonal() * f);
}

double max_residual(const SparseMatrix& L, const SpectralBasis& basis) {
  double worst = 0.0;
  for (int j = 0; j < basis.k(); ++j) {
    const Eigen::VectorXd r =
        L * basis.phi.col(j) - basis.evals(j) * basis.mass.cwiseProduct(basis.phi.col(j));
    worst = std::max(worst, r.norm() / basis.phi.col(j).norm());
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'S', 'N', 'K', 'B', 'A', 'S', '1', '\0'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}
template <typename T>
bool read_pod(std::ifstream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}
}  // namespace

std::uint64_t file_content_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::uint64_t hash = 1469598103934665603ull;
  char buffer[1 << 14];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ull;
    }
  }
  return hash;
}

void save_basis(const std::filesystem::path& path, const SpectralBasis& basis,
                const BasisCacheKey& key) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, key.content_hash);
  write_pod(out, static_cast<std::int32_t>(key.k));
  write_pod(out, static_cast<std::int32_t>(key.normalized));
  write_pod(out, static_cast<std::int64_t>(basis.num_vertices()));
  out.write(reinterpret_cast<const char*>(basis.evals.data()),
            static_cast<std::streamsize>(sizeof(double) * basis.evals.size()));
  out.write(reinterpret_cast<const char*>(basis.mass.data()),
            static_cast<std::streamsize>(sizeof(double) * basis.mass.size()));
  out.write(reinterpret_cast<const char*>(basis.phi.data()),
            static_cast<std::streamsize>(sizeof(double) * basis.phi.size()));
  if (!out) throw InputError(path.string() + ": write failed");
}

std::optional<SpectralBasis> load_basis(const std::filesystem::path& path,
                                        const BasisCacheKey& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    return std::nullopt;
  }
  std::uint64_t hash = 0;
  std::int32_t k = 0, normalized = 0;
  std::int64_t n = 0;
  if (!read_pod(in, hash) || !read_pod(in, k) || !read_pod(in, normalized) || !read_pod(in, n)) {
    return std::nullopt;
  }
  if (hash != key.content_hash || k != key.k || (normalized != 0) != key.normalized || n <= 0) {
    return std::nullopt;
  }
  SpectralBasis basis;
  basis.evals.resize(k);
  basis.mass.resize(n);
  basis.phi.resize(n, k);
  in.read(reinterpret_cast<char*>(basis.evals.data()), static_cast<std::streamsize>(sizeof(double) * k));
  in.read(reinterpret_cast<char*>(basis.mass.data()), static_cast<std::streamsize>(sizeof(double) * n));
  in.read(reinterpret_cast<char*>(basis.phi.data()),
          static_cast<std::streamsize>(sizeof(double) * n * k));
  if (!in) return std::nullopt;
  return basis;
}

}  // namespace snk
