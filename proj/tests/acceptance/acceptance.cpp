#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snk/diffusion_net.hpp"
#include "snk/eval.hpp"
#include "snk/fmap.hpp"
#include "snk/losses.hpp"
#include "snk/primo.hpp"
#include "snk/recon.hpp"
#include "snk/spectral.hpp"
#include "snk/synthetic.hpp"
#include "snk/trainer.hpp"
#include "support/grad_check.hpp"
#include "support/op_cases.hpp"
#include "support/oracles.hpp"

namespace {

using namespace snk;
using ad::Matrix;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

std::vector<int> iota(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

// --- 1: gradients -------------------------------------------------------------

// Total loss of a small instance of the full matching pipeline, all network
// weights held in Parameters.
struct PipelineInstance {
  TriMesh mesh1, mesh2;
  SpectralBasis basis1, basis2;
  PrismLayer layer;
  std::mt19937_64 rng{3};
  Backbone features;
  ShapeEncoder encoder;
  PrismDecoder decoder;

  static ReconConfig recon_config() {
    ReconConfig r;
    r.n_blocks = 1;
    r.width = 8;
    r.latent_dim = 8;
    r.decoder_dim = 8;
    r.head_widths = {8, 12};
    return r;
  }

  PipelineInstance()
      : mesh1(synthetic::grid(9, 4, 1.8, 0.8)),
        mesh2(mesh1.with_vertices(synthetic::bend(mesh1.vertices(), 1.5))),
        basis1(compute_basis(mesh1, 10)),
        basis2(compute_basis(mesh2, 10)),
        layer(build_prisms(mesh2, 0.05)),
        features({1, 8, 3, 8}, "features", rng),
        encoder(recon_config(), rng),
        decoder(recon_config(), rng) {
    // Move away from the identity-transform initialization.
    std::normal_distribution<double> normal(0.0, 0.1);
    for (auto* p : {&decoder.head_weights().back(), &decoder.head_biases().back()}) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) += normal(rng);
    }
  }

  std::vector<ad::Parameter*> parameters() {
    std::vector<ad::Parameter*> out = features.parameters();
    for (auto* p : encoder.parameters()) out.push_back(p);
    for (auto* p : decoder.parameters()) out.push_back(p);
    return out;
  }

  ad::Tensor loss(ad::Tape& tape) {
    const ad::Tensor s1 = tape.constant(Matrix(mesh1.vertices()));
    const ad::Tensor s2 = tape.constant(Matrix(mesh2.vertices()));
    const ad::Tensor f1 = features.forward(tape, basis1, s1);
    const ad::Tensor f2 = features.forward(tape, basis2, s2);
    const FmapOutputs fm = fmap_forward(f1, f2, basis1, basis2, 1e-3, 0.07);
    const ad::Tensor latent = encoder.encode(tape, basis1, s1);
    const FaceTransforms tr = decoder.decode(tape, basis2, mesh2, s2, latent);
    const ad::Tensor s3 = reconstruct_vertices(mesh2, tr);
    return ad::add(ad::add(loss_mse(fm.p21.P, s1, s3), loss_fmap(fm.c12.C, fm.c21.C)),
                   ad::add(loss_cycle(fm.p12.P, fm.p21.P, s1), primo_energy(layer, tr)));
  }
};

Outcome criterion_1() {
  const auto start = Clock::now();
  double worst_op = 0.0;
  std::string worst_name;
  int n_ops = 0;
  for (std::uint64_t seed : {7u, 8u}) {
    for (const auto& c : testing::op_cases(seed)) {
      const auto r = testing::grad_check(c.fn, c.inputs, 1e-5);
      ++n_ops;
      if (!(r.relative_error <= worst_op)) {
        worst_op = r.relative_error;
        worst_name = c.name;
      }
    }
  }

  PipelineInstance inst;
  const auto params = inst.parameters();
  ad::zero_grad(params);
  {
    ad::Tape tape;
    tape.backward(inst.loss(tape));
  }
  const double eps = 1e-5;
  double max_diff = 0.0, max_num = 0.0, max_ana = 0.0;
  int n_entries = 0;
  for (ad::Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double orig = p->value(i);
      p->value(i) = orig + eps;
      double up, down;
      {
        ad::Tape t;
        up = inst.loss(t).item();
      }
      p->value(i) = orig - eps;
      {
        ad::Tape t;
        down = inst.loss(t).item();
      }
      p->value(i) = orig;
      const double numeric = (up - down) / (2 * eps);
      max_diff = std::max(max_diff, std::abs(numeric - p->grad(i)));
      max_num = std::max(max_num, std::abs(numeric));
      max_ana = std::max(max_ana, std::abs(p->grad(i)));
      ++n_entries;
    }
  }
  const double pipeline_rel = max_diff / std::max({max_num, max_ana, 1e-8});
  const double secs = seconds_since(start);
  const bool pass = worst_op < 1e-4 && pipeline_rel < 1e-3 && secs < 60.0;
  return {pass, fmt("%d op cases, worst relative error %.2e (%s); pipeline on %d vertices, k=10, "
                    "%d parameters, relative error %.2e; %.1fs",
                    n_ops, worst_op, worst_name.c_str(), inst.mesh1.num_vertices(), n_entries,
                    pipeline_rel, secs)};
}

// --- 2: spectrum --------------------------------------------------------------

Outcome criterion_2() {
  const auto start = Clock::now();
  const TriMesh sphere = synthetic::icosphere(8);
  const int k = 36;  // l = 0..5
  const SpectralBasis b = compute_basis(sphere, k);
  double worst_eval = 0.0;
  for (int j = 1; j < k; ++j) {
    const int l = static_cast<int>(std::floor(std::sqrt(static_cast<double>(j))));
    const double exact = l * (l + 1.0);
    worst_eval = std::max(worst_eval, std::abs(b.evals(j) - exact) / exact);
  }
  const Matrix gram = b.phi.transpose() * b.mass.asDiagonal() * b.phi;
  const double gram_err = (gram - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
  const Eigen::VectorXd c0 = b.phi.col(0);
  const double spread = (c0.array() - c0.mean()).abs().maxCoeff() / std::abs(c0.mean());
  const bool pass = worst_eval < 0.05 && gram_err < 1e-6 && spread < 1e-6 && b.evals(0) < 1e-8;
  return {pass, fmt("%d vertices, worst relative eigenvalue error %.3f (l <= 5), gram error "
                    "%.1e, first mode spread %.1e, lambda0 %.1e; %.1fs",
                    sphere.num_vertices(), worst_eval, gram_err, spread, b.evals(0),
                    seconds_since(start))};
}

// --- 3: fmap solver -----------------------------------------------------------

Outcome criterion_3() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a1 = testing::random_matrix(6, 10, rng), a2 = testing::random_matrix(6, 10, rng);
    Eigen::VectorXd e1(6), e2(6);
    for (int i = 0; i < 6; ++i) {
      e1(i) = u(rng);
      e2(i) = u(rng);
    }
    std::sort(e1.begin(), e1.end());
    std::sort(e2.begin(), e2.end());
    e1(0) = e2(0) = 0.0;
    for (double lambda : {0.0, 0.5}) {
      ad::Tape tape;
      const Matrix got =
          solve_fmap(tape.constant(a1), tape.constant(a2), e1, e2, lambda).value();
      const Matrix want = testing::stacked_fmap_oracle(a1, a2, e1, e2, lambda);
      worst = std::max(worst, (got - want).norm());
      ++instances;
    }
  }
  return {worst < 1e-8,
          fmt("%d instances (k=6, d=10, lambda 0 and 0.5), worst Frobenius difference %.2e",
              instances, worst)};
}

// --- 4: PriMo -----------------------------------------------------------------

double energy(const PrismLayer& layer, const Matrix& t, const Matrix& r) {
  ad::Tape tape;
  return primo_energy(layer, {tape.constant(t), tape.constant(r)}).item();
}

Matrix rotation_rows(const Eigen::Matrix3d& r, Eigen::Index m) {
  Matrix out(m, 9);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) out(i, 3 * a + b) = r(a, b);
    }
  }
  return out;
}

Outcome criterion_4() {
  const TriMesh mesh = synthetic::asymmetric_blob(5);
  const PrismLayer layer = build_prisms(mesh, 0.02);
  const auto f = static_cast<Eigen::Index>(mesh.num_faces());
  const double e_identity = energy(layer, Matrix::Zero(f, 3), rotation_rows(Eigen::Matrix3d::Identity(), f));

  std::mt19937_64 rng(41);
  double e_rigid = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Quaterniond q = Eigen::Quaterniond::UnitRandom();
    const Eigen::Matrix3d r = q.toRotationMatrix();
    const Eigen::Vector3d t = testing::random_matrix(3, 1, rng, -2, 2);
    Matrix trans(f, 3);
    for (Eigen::Index i = 0; i < f; ++i) {
      const Eigen::Vector3d c = layer.centroids.row(i).transpose();
      trans.row(i) = (r * c - c + t).transpose();
    }
    e_rigid = std::max(e_rigid, energy(layer, trans, rotation_rows(r, f)));
  }

  std::uniform_real_distribution<double> u(-1, 1);
  double worst_quad = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PatchCorners a, b;
    for (auto& c : a) c = Eigen::Vector3d(u(rng), u(rng), u(rng));
    for (auto& c : b) c = Eigen::Vector3d(u(rng), u(rng), u(rng));
    worst_quad = std::max(worst_quad, std::abs(bilinear_inner(a, b) - testing::quadrature_inner(a, b)));
  }

  Vertices v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0;
  Faces faces(2, 3);
  faces << 0, 1, 2, 1, 3, 2;
  const TriMesh square(v, faces);
  const PrismLayer strip = build_prisms(square, 0.02);
  const Eigen::Vector3d delta(0.13, -0.31, 0.22);
  Matrix t = Matrix::Zero(2, 3);
  t.row(1) = delta.transpose();
  const double w = strip.joints.at(0).weight;
  const double e_strip = energy(strip, t, rotation_rows(Eigen::Matrix3d::Identity(), 2));
  const double strip_err = std::abs(e_strip - w * delta.squaredNorm());

  const bool pass = e_identity <= 1e-9 && e_rigid <= 1e-9 && worst_quad < 1e-6 && strip_err < 1e-9;
  return {pass, fmt("identity %.1e, rigid %.1e, 100 quadrature pairs worst %.1e, single-face "
                    "translation error %.1e",
                    e_identity, e_rigid, worst_quad, strip_err)};
}

// --- 5: Procrustes ------------------------------------------------------------

Outcome criterion_5() {
  std::mt19937_64 rng(51);
  Matrix rows = testing::random_matrix(1000, 9, rng);
  ad::Tape tape;
  const Matrix out = orthogonalize(tape.constant(rows)).value();
  double worst_oracle = 0.0, worst_proper = 0.0;
  int reflections = 0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::Matrix3d m, r;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        m(a, b) = rows(i, 3 * a + b);
        r(a, b) = out(i, 3 * a + b);
      }
    }
    reflections += m.determinant() < 0;
    worst_oracle = std::max(worst_oracle, (r - testing::svd_rotation_oracle(m)).cwiseAbs().maxCoeff());
    worst_proper = std::max(
        {worst_proper, (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
         std::abs(r.determinant() - 1.0)});
  }
  return {worst_oracle < 1e-6 && worst_proper < 1e-5 && reflections > 0,
          fmt("1000 matrices (%d with det < 0), worst oracle difference %.1e, worst "
              "orthogonality/determinant error %.1e",
              reflections, worst_oracle, worst_proper)};
}

// --- 6-8: end-to-end ----------------------------------------------------------

struct PairRun {
  double mean = 0.0;
  double initial_mean = 0.0;
  double identity_fraction = 0.0;
  FitResult fit;
};

PairRun run_pair(const TriMesh& target, const TriMesh& source, const std::vector<int>& gt,
                 const Config& config) {
  PairRun r;
  r.fit = fit_pair(target, source, config);
  r.mean = geodesic_error(r.fit.t21.assignments, {gt}, target).mean;
  r.initial_mean = geodesic_error(r.fit.t21_initial.assignments, {gt}, target).mean;
  int hits = 0;
  for (int i = 0; i < r.fit.t21.size(); ++i) hits += r.fit.t21.assignments[static_cast<std::size_t>(i)] == gt[static_cast<std::size_t>(i)];
  r.identity_fraction = static_cast<double>(hits) / r.fit.t21.size();
  return r;
}

Outcome criterion_6() {
  const auto start = Clock::now();
  const TriMesh mesh = synthetic::asymmetric_blob(7);
  const PairRun r = run_pair(mesh, mesh, iota(mesh.num_vertices()), Config{});
  const double secs = seconds_since(start);
  return {r.identity_fraction >= 0.95 && r.mean < 0.01 && secs < 600.0,
          fmt("%d vertices, %d iterations, identity %.1f%%, mean error %.2e; %.0fs",
              mesh.num_vertices(), r.fit.iterations, 100.0 * r.identity_fraction, r.mean, secs)};
}

struct BentPair {
  TriMesh target, source;
  std::vector<int> gt;
};

// Source vertex i is target vertex perm[i], bent around a cylinder.
BentPair bent_pair() {
  BentPair p{synthetic::asymmetric_blob(7), synthetic::asymmetric_blob(7), {}};
  const TriMesh bent = p.target.with_vertices(synthetic::bend(p.target.vertices(), 2.5));
  p.gt = synthetic::random_permutation(p.target.num_vertices(), 3);
  p.source = synthetic::permute_vertices(bent, p.gt);
  return p;
}

Outcome criterion_7() {
  const auto start = Clock::now();
  const BentPair p = bent_pair();
  const PairRun r = run_pair(p.target, p.source, p.gt, Config{});
  return {r.mean < 0.05 && r.mean < r.initial_mean,
          fmt("%d vertices, bend radius 2.5, %d iterations, mean error %.4f (before refinement "
              "%.4f); %.0fs",
              p.target.num_vertices(), r.fit.iterations, r.mean, r.initial_mean,
              seconds_since(start))};
}

Outcome criterion_8() {
  const auto start = Clock::now();
  const BentPair p = bent_pair();
  double mean[3];
  const FeatureMode modes[3] = {FeatureMode::Learned, FeatureMode::Free, FeatureMode::Hks};
  for (int m = 0; m < 3; ++m) {
    Config c;
    c.features = modes[m];
    mean[m] = run_pair(p.target, p.source, p.gt, c).mean;
  }
  return {mean[1] > mean[0] && mean[2] >= mean[0],
          fmt("mean error learned %.4f, free %.4f, hks %.4f; %.0fs", mean[0], mean[1], mean[2],
              seconds_since(start))};
}

// --- 9: loss bookkeeping ------------------------------------------------------

bool monotone_best(const std::vector<HistoryEntry>& h) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) {
    best = std::min(best, h[i].terms.total);
    if (h[i].best_total != best) return false;
    if (i > 0 && h[i].best_total > h[i - 1].best_total) return false;
  }
  return true;
}

Outcome criterion_9() {
  const TriMesh target = synthetic::asymmetric_blob(3);
  const TriMesh source = target.with_vertices(synthetic::bend(target.vertices(), 2.0));
  Config c;
  c.k = 20;
  c.zoomout_k_end = 40;
  c.max_iters = 300;
  const FitResult trained = fit_pair(target, source, c);
  const bool monotone = monotone_best(trained.history);

  // Sub-ulp steps: the loss stalls from iteration 0.
  c.lr = 1e-300;
  c.max_iters = 1000;
  const FitResult stalled = fit_pair(target, source, c);
  int non_improving = 0;
  for (std::size_t i = 1; i < stalled.history.size(); ++i) {
    non_improving += stalled.history[i].terms.total >= stalled.history[0].terms.total;
  }
  const bool exact_stop = stalled.stop == StopReason::Patience && stalled.best_iteration == 0 &&
                          stalled.iterations == 101 && non_improving == 100;

  // Random loss sequences against a direct count of the trailing stale run.
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(0, 1);
  bool stopper_ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    EarlyStopper s(100);
    double best = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int it = 0; it < 2000 && !s.should_stop(); ++it) {
      const double loss = u(rng) + 50.0 / (1 + it / 10);
      s.update(loss);
      if (loss < best) {
        best = loss;
        stale = 0;
      } else {
        ++stale;
      }
      stopper_ok = stopper_ok && (s.should_stop() == (stale >= 100)) && s.best() == best;
    }
  }
  return {monotone && exact_stop && stopper_ok,
          fmt("best-so-far monotone over %zu iterations: %s; stalled run stopped after %d "
              "iterations with %d non-improving (best at %d); stopper matches direct count: %s",
              trained.history.size(), monotone ? "yes" : "no", stalled.iterations, non_improving,
              stalled.best_iteration, stopper_ok ? "yes" : "no")};
}

// --- 10: runtime --------------------------------------------------------------

Outcome criterion_10() {
  const TriMesh target = synthetic::asymmetric_blob(10);
  const TriMesh source = target.with_vertices(synthetic::bend(target.vertices(), 2.5));
  Config c;
  c.max_iters = 1000;
  c.patience = 1000;
  const FitResult r = fit_pair(target, source, c);
  const auto& t = r.timings;
  std::printf("  timing: spectral %.1fs, optimization %.1fs (%.3fs per iteration), refinement "
              "%.1fs, total %.1fs\n",
              t.spectral, t.optimization, t.per_iteration, t.refinement, t.total);
  return {r.iterations == 1000 && t.total < 1800.0,
          fmt("%d vertices, %d iterations in %.0fs (budget 1800s)", target.num_vertices(),
              r.iterations, t.total)};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<const char*, std::function<Outcome()>>> list = {
      {"autodiff gradient checks", criterion_1},
      {"spectral correctness", criterion_2},
      {"functional map solver oracle", criterion_3},
      {"prism energy anchors", criterion_4},
      {"nearest rotation", criterion_5},
      {"self matching", criterion_6},
      {"bent pair matching", criterion_7},
      {"feature ablation ordering", criterion_8},
      {"loss bookkeeping and early stop", criterion_9},
      {"runtime budget", criterion_10},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 1;
    }
  }
  const int n = static_cast<int>(criteria().size());
  if (selected.empty()) selected = [&] {
    std::vector<int> all;
    for (int i = 1; i <= n; ++i) all.push_back(i);
    return all;
  }();

  int failures = 0;
  for (int id : selected) {
    if (id < 1 || id > n) {
      std::fprintf(stderr, "no criterion %d (valid: 1..%d)\n", id, n);
      return 1;
    }
    const auto& [name, fn] = criteria()[static_cast<std::size_t>(id - 1)];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d (%s): %s - %s\n", id, name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
