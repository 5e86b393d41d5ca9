#include "snk/fmap.hpp"

#include <cstdio>
#include <memory>
#include <vector>

#include <Eigen/Cholesky>

#include "snk/error.hpp"
#include "snk/log.hpp"

namespace snk {

ad::Tensor solve_fmap(const ad::Tensor& A1, const ad::Tensor& A2, const Eigen::VectorXd& evals1,
                      const Eigen::VectorXd& evals2, double lambda) {
  const Eigen::Index k = A1.rows();
  if (A2.rows() != k || A1.cols() != A2.cols() || A1.cols() < 1) {
    throw InputError("solve_fmap: descriptor coefficients must both be k x d");
  }
  if (evals1.size() != k || evals2.size() != k) {
    throw InputError("solve_fmap: eigenvalue count must equal k");
  }
  if (lambda < 0.0) throw InputError("solve_fmap: lambda must be >= 0");

  const ad::Matrix& a1 = A1.value();
  const ad::Matrix& a2 = A2.value();
  const ad::Matrix gram = a1 * a1.transpose();
  const ad::Matrix rhs = a1 * a2.transpose();  // column i is the right-hand side of row i

  auto factors = std::make_shared<std::vector<Eigen::LLT<ad::Matrix>>>();
  factors->reserve(static_cast<std::size_t>(k));
  ad::Matrix C(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    ad::Matrix system = gram;
    system.diagonal() += lambda * (evals1.array() - evals2(i)).square().matrix();
    Eigen::LLT<ad::Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
      log::warn("solve_fmap: row " + std::to_string(i) + " system is singular; adding 1e-9 ridge");
      system.diagonal().array() += 1e-9;
      llt.compute(system);
      if (llt.info() != Eigen::Success) throw NumericalError("solve_fmap: row system singular");
    }
    C.row(i) = llt.solve(rhs.col(i)).transpose();
    factors->push_back(std::move(llt));
  }

  return A1.tape().record(
      std::move(C), {A1, A2},
      [A1, A2, factors](ad::Tape& tape, const ad::Matrix& g, const ad::Matrix& c) {
        const Eigen::Index k = c.rows();
        // Column i of Y solves S_i y_i = g_i.
        ad::Matrix Y(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
          Y.col(i) = (*factors)[static_cast<std::size_t>(i)].solve(g.row(i).transpose());
        }
        const ad::Matrix& a1 = A1.value();
        const ad::Matrix& a2 = A2.value();
        if (tape.needs_grad(A2)) tape.accumulate(A2, Y.transpose() * a1);
        if (tape.needs_grad(A1)) {
          const ad::Matrix yc = Y * c;
          tape.accumulate(A1, Y * a2 - (yc + yc.transpose()) * a1);
        }
      });
}

ad::Tensor soft_p2p(const ad::Tensor& C12, const SpectralBasis& basis1,
                    const SpectralBasis& basis2, double tau) {
  if (!(tau > 0.0)) throw InputError("soft_p2p: temperature must be > 0");
  if (C12.rows() != basis2.k() || C12.cols() != basis1.k()) {
    throw InputError("soft_p2p: functional map size does not match the bases");
  }
  ad::Tape& tape = C12.tape();
  const ad::Tensor phi1_t = tape.constant(basis1.phi.transpose());
  const ad::Tensor phi2 = tape.constant(basis2.phi);
  const ad::Tensor emb2 = ad::matmul(phi2, C12);  // n2 x k
  // -|a - b|^2 without the row constant -|a|^2
  const ad::Tensor sq1 = tape.constant(-basis1.phi.rowwise().squaredNorm().transpose());
  return ad::softmax_rows(ad::add_row(ad::scale(ad::matmul(emb2, phi1_t), 2.0), sq1), tau);
}

ad::Tensor fmap_from_p2p(const ad::Tensor& P_ji, const SpectralBasis& basis_i,
                         const SpectralBasis& basis_j) {
  if (P_ji.rows() != basis_j.num_vertices() || P_ji.cols() != basis_i.num_vertices()) {
    throw InputError("fmap_from_p2p: point map shape does not match the bases");
  }
  ad::Tape& tape = P_ji.tape();
  const ad::Tensor pinv_j = tape.constant(basis_j.pinv());
  const ad::Tensor phi_i = tape.constant(basis_i.phi);
  return ad::matmul(ad::matmul(pinv_j, P_ji), phi_i);
}

FmapOutputs fmap_forward(const ad::Tensor& feat1, const ad::Tensor& feat2,
                         const SpectralBasis& basis1, const SpectralBasis& basis2, double lambda,
                         double tau) {
  if (feat1.cols() != feat2.cols()) throw InputError("fmap_forward: feature widths differ");
  ad::Tape& tape = feat1.tape();
  const ad::Tensor A1 = ad::matmul(tape.constant(basis1.pinv()), feat1);
  const ad::Tensor A2 = ad::matmul(tape.constant(basis2.pinv()), feat2);

  FmapOutputs out;
  out.initial12 = {solve_fmap(A1, A2, basis1.evals, basis2.evals, lambda), Direction::OneToTwo};
  out.initial21 = {solve_fmap(A2, A1, basis2.evals, basis1.evals, lambda), Direction::TwoToOne};

  const ad::Tensor p21_0 = soft_p2p(out.initial12.C, basis1, basis2, tau);
  const ad::Tensor p12_0 = soft_p2p(out.initial21.C, basis2, basis1, tau);

  out.c12 = {fmap_from_p2p(p21_0, basis1, basis2), Direction::OneToTwo};
  out.c21 = {fmap_from_p2p(p12_0, basis2, basis1), Direction::TwoToOne};

  out.p21 = {soft_p2p(out.c12.C, basis1, basis2, tau), tau, Direction::TwoToOne};
  out.p12 = {soft_p2p(out.c21.C, basis2, basis1, tau), tau, Direction::OneToTwo};
  return out;
}

void write_matrix_text(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw InputError(path.string() + ": cannot open for writing");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::fprintf(f, j == 0 ? "%.17g" : " %.17g", m(i, j));
    }
    std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace snk
