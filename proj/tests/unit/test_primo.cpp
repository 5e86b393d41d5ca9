#include <gtest/gtest.h>

#include <random>

#include <Eigen/Geometry>

#include "snk/primo.hpp"
#include "snk/synthetic.hpp"
#include "support/grad_check.hpp"
#include "support/oracles.hpp"

namespace snk {
namespace {

using ad::Matrix;
using ad::Tape;

TriMesh flat_square() {
  Vertices v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0;
  Faces f(2, 3);
  f << 0, 1, 2, 1, 3, 2;
  return TriMesh(v, f);
}

Matrix identity_rotations(Eigen::Index faces) {
  Matrix r = Matrix::Zero(faces, 9);
  r.col(0).setOnes();
  r.col(4).setOnes();
  r.col(8).setOnes();
  return r;
}

Matrix rotation_rows(const Eigen::Matrix3d& m, Eigen::Index faces) {
  Matrix r(faces, 9);
  for (Eigen::Index f = 0; f < faces; ++f) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) r(f, 3 * i + j) = m(i, j);
    }
  }
  return r;
}

double energy(const PrismLayer& layer, const Matrix& t, const Matrix& r) {
  Tape tape;
  return primo_energy(layer, {tape.constant(t), tape.constant(r)}).item();
}

PatchCorners random_patch(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  PatchCorners p;
  for (auto& c : p) c = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

TEST(BilinearInner, ConstantField) {
  const Eigen::Vector3d c(0.3, -1.2, 2.0);
  const PatchCorners a{c, c, c, c};
  EXPECT_NEAR(bilinear_inner(a, a), c.squaredNorm(), 1e-14);
}

TEST(BilinearInner, LinearTimesOne) {
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero(), ex = Eigen::Vector3d::UnitX();
  const PatchCorners u{zero, ex, zero, ex};
  const PatchCorners one{ex, ex, ex, ex};
  EXPECT_NEAR(bilinear_inner(u, one), 0.5, 1e-15);
}

TEST(BilinearInner, MatchesQuadrature) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const PatchCorners a = random_patch(rng), b = random_patch(rng);
    EXPECT_NEAR(bilinear_inner(a, b), testing::quadrature_inner(a, b), 1e-6);
    EXPECT_NEAR(bilinear_inner(a, b), bilinear_inner(b, a), 1e-15);
  }
}

TEST(Prisms, FlatSquareCorners) {
  const double h = 0.02;
  const PrismLayer layer = build_prisms(flat_square(), h);
  ASSERT_EQ(layer.prisms.size(), 2u);
  for (const auto& prism : layer.prisms) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(std::abs(prism[c].z()), h, 1e-15);
      EXPECT_NEAR(prism[c].z() + prism[3 + c].z(), 0.0, 1e-15);
    }
  }
  ASSERT_EQ(layer.joints.size(), 1u);
  const PrismJoint& j = layer.joints[0];
  EXPECT_EQ(j.v0, 1);
  EXPECT_EQ(j.v1, 2);
  EXPECT_NEAR(j.weight, 2.0 / (0.5 + 0.5), 1e-15);
}

TEST(Prisms, OneSidedAndZeroHeight) {
  const TriMesh mesh = flat_square();
  const PrismLayer one = build_prisms(mesh, 0.1, Extrusion::OneSided);
  EXPECT_NEAR(one.prisms[0][0].z(), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(one.prisms[0][3].z()), 0.1, 1e-15);
  const PrismLayer flat = build_prisms(mesh, 0.0);
  for (const auto& j : flat.joints) {
    EXPECT_EQ(j.corners[0], j.corners[2]);
    EXPECT_EQ(j.corners[1], j.corners[3]);
  }
  EXPECT_EQ(energy(flat, Matrix::Zero(2, 3), identity_rotations(2)), 0.0);
}

TEST(Prisms, WeightsPositive) {
  const TriMesh mesh = synthetic::asymmetric_blob(4);
  const PrismLayer layer = build_prisms(mesh, 0.02);
  EXPECT_EQ(layer.joints.size(), mesh.interior_edges().size());
  for (const auto& j : layer.joints) EXPECT_GT(j.weight, 0.0);
}

TEST(Energy, ZeroAtRestAndUnderRigidMotion) {
  const TriMesh mesh = synthetic::asymmetric_blob(4);
  const PrismLayer layer = build_prisms(mesh, 0.02);
  const auto f = mesh.num_faces();
  EXPECT_LT(energy(layer, Matrix::Zero(f, 3), identity_rotations(f)), 1e-20);

  const Eigen::Matrix3d r =
      Eigen::AngleAxisd(2.1, Eigen::Vector3d(0.2, 1, -0.4).normalized()).toRotationMatrix();
  const Eigen::Vector3d t(1.5, -0.3, 0.8);
  Matrix trans(f, 3);
  for (int i = 0; i < f; ++i) {
    const Eigen::Vector3d c = layer.centroids.row(i).transpose();
    trans.row(i) = (r * c - c + t).transpose();
  }
  EXPECT_LT(energy(layer, trans, rotation_rows(r, f)), 1e-9);
}

TEST(Energy, TranslatedFaceOnFlatStrip) {
  const TriMesh mesh = flat_square();
  const PrismLayer layer = build_prisms(mesh, 0.02);
  const double delta = 0.37;
  Matrix t = Matrix::Zero(2, 3);
  t(1, 2) = delta * mesh.face_normals()(1, 2);
  const double w = layer.joints[0].weight;
  EXPECT_NEAR(energy(layer, t, identity_rotations(2)), w * delta * delta, 1e-12);
  EXPECT_NEAR(primo_energy_value(layer, identity_rotations(2), t), w * delta * delta, 1e-12);
}

TEST(Energy, PositiveForSingleFacePerturbation) {
  const TriMesh mesh = synthetic::asymmetric_blob(3);
  const PrismLayer layer = build_prisms(mesh, 0.02);
  const auto f = mesh.num_faces();
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(f) - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int face = pick(rng);
    Matrix t = Matrix::Zero(f, 3);
    Matrix r = identity_rotations(f);
    const Matrix noise = testing::random_matrix(1, 3, rng, -1e-3, 1e-3);
    if (trial % 2 == 0) {
      t.row(face) = noise;
    } else {
      const Eigen::Matrix3d rot =
          Eigen::AngleAxisd(1e-3, Eigen::Vector3d(noise(0), noise(1), noise(2)).normalized())
              .toRotationMatrix();
      r.row(face) = rotation_rows(rot, 1);
    }
    EXPECT_GT(energy(layer, t, r), 0.0);
  }
}

TEST(Energy, TapeAndDirectEvaluationAgree) {
  const TriMesh mesh = synthetic::asymmetric_blob(3);
  const PrismLayer layer = build_prisms(mesh, 0.05);
  std::mt19937_64 rng(8);
  const Matrix t = testing::random_matrix(mesh.num_faces(), 3, rng, -0.1, 0.1);
  Tape tape;
  Matrix r0 = identity_rotations(mesh.num_faces()) +
              testing::random_matrix(mesh.num_faces(), 9, rng, -0.2, 0.2);
  const Matrix r = orthogonalize(tape.constant(r0)).value();
  const double a = energy(layer, t, r);
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, primo_energy_value(layer, r, t), 1e-12 * a);
}

TEST(Energy, TranslationGradient) {
  const TriMesh mesh = synthetic::asymmetric_blob(2);
  const PrismLayer layer = build_prisms(mesh, 0.02);
  std::mt19937_64 rng(9);
  const Matrix r = identity_rotations(mesh.num_faces()) +
                   testing::random_matrix(mesh.num_faces(), 9, rng, -0.1, 0.1);
  const auto res = testing::grad_check(
      [&](Tape& tape, const std::vector<ad::Tensor>& x) {
        return primo_energy(layer, {x[0], tape.constant(r)});
      },
      {testing::random_matrix(mesh.num_faces(), 3, rng, -0.05, 0.05)});
  EXPECT_LT(res.relative_error, 1e-4);
}

}  // namespace
}  // namespace snk
