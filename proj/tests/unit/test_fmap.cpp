#include <gtest/gtest.h>

#include <random>

#include <Eigen/QR>

#include "snk/fmap.hpp"
#include "snk/refine.hpp"
#include "snk/synthetic.hpp"
#include "support/grad_check.hpp"
#include "support/oracles.hpp"

namespace snk {
namespace {

using ad::Matrix;
using ad::Tape;

struct Pair {
  TriMesh mesh1, mesh2;
  SpectralBasis basis1, basis2;
};

// 50-vertex bumpy grid and a bent copy.
const Pair& small_pair() {
  static const Pair p = [] {
    TriMesh g = synthetic::grid(9, 4, 1.8, 0.8);
    Vertices v = g.vertices();
    for (int i = 0; i < v.rows(); ++i) v(i, 2) = 0.1 * std::sin(3 * v(i, 0)) * std::cos(2 * v(i, 1));
    TriMesh m1 = g.with_vertices(v);
    TriMesh m2 = g.with_vertices(synthetic::bend(v, 2.0));
    SpectralBasis b1 = compute_basis(m1, 10);
    SpectralBasis b2 = compute_basis(m2, 10);
    return Pair{m1, m2, b1, b2};
  }();
  return p;
}

const SpectralBasis& blob_basis(int k) {
  static const TriMesh mesh = synthetic::asymmetric_blob(3);  // 92 vertices
  static const SpectralBasis b = compute_basis(mesh, 30);
  static std::map<int, SpectralBasis> cache;
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, b.truncated(k)).first;
  return it->second;
}

Matrix solve_value(const Matrix& a1, const Matrix& a2, const Eigen::VectorXd& e1,
                   const Eigen::VectorXd& e2, double lambda) {
  Tape tape;
  return solve_fmap(tape.constant(a1), tape.constant(a2), e1, e2, lambda).value();
}

TEST(SolveFmap, IdenticalDescriptorsGiveIdentity) {
  std::mt19937_64 rng(1);
  const Matrix a = testing::random_matrix(6, 10, rng);
  Eigen::VectorXd e(6);
  e << 0, 1, 2, 3, 4, 5;
  for (double lambda : {0.0, 1e-3, 10.0}) {
    EXPECT_LT((solve_value(a, a, e, e, lambda) - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SolveFmap, NormalEquationsWhenUnregularized) {
  std::mt19937_64 rng(2);
  const Matrix a1 = testing::random_matrix(5, 9, rng), a2 = testing::random_matrix(5, 9, rng);
  const Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(5, 0, 4);
  const Matrix expected = a2 * a1.transpose() * (a1 * a1.transpose()).inverse();
  EXPECT_LT((solve_value(a1, a2, e, e, 0.0) - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveFmap, MatchesStackedOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a1 = testing::random_matrix(6, 10, rng), a2 = testing::random_matrix(6, 10, rng);
    const Matrix e = testing::random_matrix(6, 2, rng, 0.0, 5.0);
    for (double lambda : {0.0, 0.5}) {
      const Matrix got = solve_value(a1, a2, e.col(0), e.col(1), lambda);
      const Matrix want = testing::stacked_fmap_oracle(a1, a2, e.col(0), e.col(1), lambda);
      EXPECT_LT((got - want).norm(), 1e-8);
    }
  }
}

TEST(SolveFmap, InvariantToOrthogonalDescriptorMixing) {
  std::mt19937_64 rng(4);
  const Matrix a1 = testing::random_matrix(5, 8, rng), a2 = testing::random_matrix(5, 8, rng);
  const Matrix q = Eigen::HouseholderQR<Matrix>(testing::random_matrix(8, 8, rng)).householderQ();
  const Eigen::VectorXd e1 = Eigen::VectorXd::LinSpaced(5, 0, 4);
  const Eigen::VectorXd e2 = Eigen::VectorXd::LinSpaced(5, 0, 3);
  const Matrix c = solve_value(a1, a2, e1, e2, 0.0);
  const Matrix cq = solve_value(a1 * q, a2 * q, e1, e2, 0.0);
  EXPECT_LT((c - cq).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(SolveFmap, RankDeficientRowsGetRidge) {
  // d < k with lambda = 0 leaves every row system singular.
  const Matrix a = Matrix::Ones(3, 1);
  const Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
  const Matrix c = solve_value(a, a, e, e, 0.0);
  EXPECT_TRUE(c.allFinite());
}

TEST(SoftP2P, RowsAreDistributions) {
  const Pair& p = small_pair();
  Tape tape;
  const Matrix c = Matrix::Identity(10, 10) + 0.1 * Matrix::Random(10, 10);
  const Matrix pm = soft_p2p(tape.constant(c), p.basis1, p.basis2, 0.07).value();
  EXPECT_EQ(pm.rows(), p.basis2.num_vertices());
  EXPECT_EQ(pm.cols(), p.basis1.num_vertices());
  EXPECT_GE(pm.minCoeff(), 0.0);
  EXPECT_LT((pm.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
}

TEST(SoftP2P, SelfMapPeaksOnDiagonalAtLowTemperature) {
  const SpectralBasis& b = blob_basis(30);
  Tape tape;
  const Matrix pm = soft_p2p(tape.constant(Matrix::Identity(30, 30)), b, b, 1e-6).value();
  for (Eigen::Index i = 0; i < pm.rows(); ++i) {
    Eigen::Index at = 0;
    pm.row(i).maxCoeff(&at);
    EXPECT_EQ(at, i);
  }
}

TEST(SoftP2P, ArgmaxMatchesNearestNeighbor) {
  const Pair& p = small_pair();
  std::mt19937_64 rng(6);
  const Matrix c = Matrix::Identity(10, 10) + testing::random_matrix(10, 10, rng, -0.2, 0.2);
  Tape tape;
  const Matrix pm = soft_p2p(tape.constant(c), p.basis1, p.basis2, 0.07).value();
  const std::vector<int> nn = testing::brute_nn(p.basis2.phi * c, p.basis1.phi);
  int agree = 0;
  for (Eigen::Index i = 0; i < pm.rows(); ++i) {
    Eigen::Index at = 0;
    pm.row(i).maxCoeff(&at);
    agree += at == nn[static_cast<std::size_t>(i)];
  }
  EXPECT_EQ(agree, pm.rows());
}

TEST(FmapFromP2P, IdentityAndPermutation) {
  const SpectralBasis& b = blob_basis(12);
  const int n = b.num_vertices();
  Tape tape;
  const Matrix c = fmap_from_p2p(tape.constant(Matrix::Identity(n, n)), b, b).value();
  EXPECT_LT((c - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-6);

  // Relabeled copy: shape j = shape i with vertex order perm.
  const auto perm = synthetic::random_permutation(n, 8);
  SpectralBasis bj = b;
  Matrix pji = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    bj.phi.row(r) = b.phi.row(perm[r]);
    bj.mass(r) = b.mass(perm[r]);
    pji(r, perm[r]) = 1.0;
  }
  const Matrix cij = fmap_from_p2p(tape.constant(pji), b, bj).value();
  const Matrix explicit_c = bj.pinv() * (pji * b.phi);
  EXPECT_LT((cij - explicit_c).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((cij.transpose() * cij - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(FmapFromP2P, StochasticMapIsBounded) {
  const Pair& p = small_pair();
  std::mt19937_64 rng(9);
  Tape tape;
  const Matrix logits = testing::random_matrix(p.basis2.num_vertices(), p.basis1.num_vertices(), rng);
  const Matrix pm = ad::softmax_rows(tape.constant(logits), 0.3).value();
  const Matrix c = fmap_from_p2p(tape.constant(pm), p.basis1, p.basis2).value();
  EXPECT_TRUE(c.allFinite());
  const double bound = p.basis2.pinv().operatorNorm() * pm.operatorNorm() * p.basis1.phi.operatorNorm();
  EXPECT_LE(c.operatorNorm(), bound + 1e-9);
}

TEST(FmapForward, SelfMatchWithIdenticalFeatures) {
  const TriMesh mesh = synthetic::asymmetric_blob(4);  // 162 vertices
  const TriMesh big = synthetic::asymmetric_blob(5);   // 252 vertices
  for (const TriMesh* m : {&mesh, &big}) {
    const SpectralBasis b = compute_basis(*m, 30);
    std::mt19937_64 rng(1);
    Tape tape;
    const Matrix f = Matrix(m->vertices());
    const FmapOutputs out =
        fmap_forward(tape.constant(f), tape.constant(f), b, b, 1e-3, 0.07);
    const Matrix& pm = out.p21.P.value();
    int hits = 0;
    for (Eigen::Index i = 0; i < pm.rows(); ++i) {
      Eigen::Index at = 0;
      pm.row(i).maxCoeff(&at);
      hits += at == i;
    }
    EXPECT_GE(hits, 0.95 * pm.rows()) << m->num_vertices() << " vertices";
  }
}

TEST(FmapForward, ShapesAndDirections) {
  const Pair& p = small_pair();
  Tape tape;
  std::mt19937_64 rng(3);
  const auto f1 = tape.constant(testing::random_matrix(p.basis1.num_vertices(), 16, rng));
  const auto f2 = tape.constant(testing::random_matrix(p.basis2.num_vertices(), 16, rng));
  const FmapOutputs out = fmap_forward(f1, f2, p.basis1, p.basis2, 1e-3, 0.07);
  EXPECT_EQ(out.c12.C.rows(), 10);
  EXPECT_EQ(out.c21.C.cols(), 10);
  EXPECT_EQ(out.p12.P.rows(), p.basis1.num_vertices());
  EXPECT_EQ(out.p21.P.rows(), p.basis2.num_vertices());
  EXPECT_EQ(out.c12.direction, Direction::OneToTwo);
  EXPECT_EQ(out.p21.direction, Direction::TwoToOne);

  const FmapOutputs swapped = fmap_forward(f2, f1, p.basis2, p.basis1, 1e-3, 0.07);
  EXPECT_LT((swapped.c12.C.value() - out.c21.C.value()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((swapped.p21.P.value() - out.p12.P.value()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FmapForward, FeatureGradient) {
  const Pair& p = small_pair();
  std::mt19937_64 rng(12);
  const auto r = testing::grad_check(
      [&](Tape&, const std::vector<ad::Tensor>& x) {
        const FmapOutputs out = fmap_forward(x[0], x[1], p.basis1, p.basis2, 1e-3, 0.07);
        return ad::add(testing::project(out.p21.P, 1), testing::project(out.c12.C, 2));
      },
      {testing::random_matrix(p.basis1.num_vertices(), 12, rng),
       testing::random_matrix(p.basis2.num_vertices(), 12, rng)});
  EXPECT_LT(r.relative_error, 1e-3);
}

}  // namespace
}  // namespace snk
