#include "snk/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "snk/diffusion_net.hpp"
#include "snk/error.hpp"
#include "snk/fmap.hpp"
#include "snk/log.hpp"
#include "snk/losses.hpp"
#include "snk/primo.hpp"
#include "snk/recon.hpp"

namespace snk {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::MatrixXd to_matrix(const Vertices& v) { return Eigen::MatrixXd(v); }

// Feature extractor for one of the three modes.
class Features {
 public:
  Features(const Config& config, int in_dim, int n1, int n2, std::mt19937_64& rng)
      : mode_(config.features) {
    if (mode_ == FeatureMode::Learned) {
      backbone_.emplace(BackboneConfig{config.blocks, config.width, in_dim, config.feature_dim},
                        "features", rng);
    } else if (mode_ == FeatureMode::Free) {
      std::normal_distribution<double> normal(0.0, 1.0);
      auto random = [&](int rows) {
        ad::Matrix m(rows, config.feature_dim);
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
        }
        return m;
      };
      free1_ = ad::Parameter("features.free1", random(n1));
      free2_ = ad::Parameter("features.free2", random(n2));
    }
  }

  std::pair<ad::Tensor, ad::Tensor> forward(ad::Tape& tape, const SpectralBasis& b1,
                                            const SpectralBasis& b2, const ad::Matrix& in1,
                                            const ad::Matrix& in2) {
    switch (mode_) {
      case FeatureMode::Learned:
        return {backbone_->forward(tape, b1, tape.constant(in1)),
                backbone_->forward(tape, b2, tape.constant(in2))};
      case FeatureMode::Free:
        return {tape.param(free1_), tape.param(free2_)};
      case FeatureMode::Hks:
        break;
    }
    return {tape.constant(in1), tape.constant(in2)};
  }

  std::vector<ad::Parameter*> parameters() {
    if (mode_ == FeatureMode::Learned) return backbone_->parameters();
    if (mode_ == FeatureMode::Free) return {&free1_, &free2_};
    return {};
  }

 private:
  FeatureMode mode_;
  std::optional<Backbone> backbone_;
  ad::Parameter free1_, free2_;
};

}  // namespace

void check_loss_terms(const LossTerms& terms, int iteration) {
  const std::pair<const char*, double> named[] = {{"mse", terms.mse},
                                                   {"fmap", terms.fmap},
                                                   {"cycle", terms.cycle},
                                                   {"primo", terms.primo},
                                                   {"total", terms.total}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) {
      throw NumericalError("non-finite loss term '" + std::string(name) + "' at iteration " +
                           std::to_string(iteration));
    }
  }
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {}

bool EarlyStopper::update(double loss) {
  const int index = count_++;
  if (loss < best_) {
    best_ = loss;
    best_index_ = index;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

Normalization Normalization::of(const TriMesh& mesh) {
  Normalization n;
  n.center = area_centroid(mesh);
  n.scale = 1.0 / std::sqrt(total_surface_area(mesh));
  return n;
}

Vertices Normalization::apply(const Vertices& v) const {
  return ((v.rowwise() - center.transpose()) * scale).eval();
}

Vertices Normalization::undo(const Vertices& v) const {
  return ((v / scale).rowwise() + center.transpose()).eval();
}

std::vector<Landmark> read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open landmark file");
  std::vector<Landmark> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    Landmark l;
    if (!(tokens >> l.target_vertex)) continue;
    std::string extra;
    if (!(tokens >> l.source_vertex) || (tokens >> extra)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 'target_vertex source_vertex'");
    }
    out.push_back(l);
  }
  return out;
}

Eigen::MatrixXd landmark_channels(const SpectralBasis& basis, const std::vector<int>& vertices,
                                  double t) {
  const Eigen::ArrayXd decay = (-basis.evals.array() * t).exp();
  Eigen::MatrixXd out(basis.num_vertices(), static_cast<Eigen::Index>(vertices.size()));
  for (std::size_t c = 0; c < vertices.size(); ++c) {
    const int v = vertices[c];
    if (v < 0 || v >= basis.num_vertices()) {
      throw InputError("landmark vertex " + std::to_string(v) + " is out of range");
    }
    const Eigen::VectorXd weights = (basis.phi.row(v).transpose().array() * decay).matrix();
    out.col(static_cast<Eigen::Index>(c)) = basis.phi * weights;
    const double self = out(v, static_cast<Eigen::Index>(c));
    if (self > 0.0) out.col(static_cast<Eigen::Index>(c)) /= self;
  }
  return out;
}

FitResult fit_pair(const TriMesh& target, const TriMesh& source, const Config& config,
                   const std::vector<Landmark>& landmarks, const Progress& progress) {
  validate_config(config);
  const auto start = Clock::now();
  FitResult result;

  const Normalization norm1 = config.normalize ? Normalization::of(target) : Normalization{};
  const Normalization norm2 = config.normalize ? Normalization::of(source) : Normalization{};
  const TriMesh mesh1 = target.with_vertices(norm1.apply(target.vertices()));
  const TriMesh mesh2 = source.with_vertices(norm2.apply(source.vertices()));
  const int n1 = mesh1.num_vertices();
  const int n2 = mesh2.num_vertices();

  const int k_total = std::max(config.k, config.zoomout_k_end);
  for (const TriMesh* m : {&mesh1, &mesh2}) {
    if (k_total > m->num_vertices()) {
      throw InputError("need " + std::to_string(k_total) + " eigenpairs but a mesh has only " +
                       std::to_string(m->num_vertices()) + " vertices");
    }
  }
  auto stage = Clock::now();
  auto basis1_job = std::async(std::launch::async, [&] { return compute_basis(mesh1, k_total); });
  const SpectralBasis full2 = compute_basis(mesh2, k_total);
  const SpectralBasis full1 = basis1_job.get();
  const SpectralBasis basis1 = full1.truncated(config.k);
  const SpectralBasis basis2 = full2.truncated(config.k);
  result.timings.spectral = seconds_since(stage);

  std::vector<int> marks1, marks2;
  for (const Landmark& l : landmarks) {
    if (l.target_vertex < 0 || l.target_vertex >= n1 || l.source_vertex < 0 ||
        l.source_vertex >= n2) {
      throw InputError("landmark pair (" + std::to_string(l.target_vertex) + ", " +
                       std::to_string(l.source_vertex) + ") is out of range");
    }
    marks1.push_back(l.target_vertex);
    marks2.push_back(l.source_vertex);
  }

  const ad::Matrix xyz1 = to_matrix(mesh1.vertices());
  const ad::Matrix xyz2 = to_matrix(mesh2.vertices());
  ad::Matrix in1, in2;
  if (config.features == FeatureMode::Hks) {
    in1 = hks_features(full1, config.hks_times);
    in2 = hks_features(full2, config.hks_times);
  } else {
    in1 = xyz1;
    in2 = xyz2;
  }
  if (!landmarks.empty()) {
    const ad::Matrix c1 = landmark_channels(full1, marks1, config.landmark_time);
    const ad::Matrix c2 = landmark_channels(full2, marks2, config.landmark_time);
    ad::Matrix a(n1, in1.cols() + c1.cols()), b(n2, in2.cols() + c2.cols());
    a << in1, c1;
    b << in2, c2;
    in1 = std::move(a);
    in2 = std::move(b);
  }

  std::mt19937_64 rng(config.seed);
  Features features(config, static_cast<int>(in1.cols()), n1, n2, rng);
  ReconConfig recon;
  recon.n_blocks = config.blocks;
  recon.width = config.width;
  recon.latent_dim = config.latent_dim;
  ShapeEncoder encoder(recon, rng);
  PrismDecoder decoder(recon, rng);
  const PrismLayer layer = build_prisms(mesh2, config.h, config.extrusion);

  std::vector<ad::Parameter*> params = features.parameters();
  for (auto* p : encoder.parameters()) params.push_back(p);
  for (auto* p : decoder.parameters()) params.push_back(p);

  const ad::AdamOptions adam{config.lr};
  EarlyStopper stopper(config.patience);
  ad::Matrix best_s3 = xyz2;
  ad::Matrix best_p21;

  stage = Clock::now();
  for (int it = 0; it < config.max_iters; ++it) {
    ad::Tape tape;
    const ad::Tensor s1 = tape.constant(xyz1);
    const ad::Tensor s2 = tape.constant(xyz2);
    const auto [feat1, feat2] = features.forward(tape, full1, full2, in1, in2);
    const FmapOutputs fm =
        fmap_forward(feat1, feat2, basis1, basis2, config.lambda_commut, config.tau);
    const ad::Tensor latent = encoder.encode(tape, full1, s1);
    const FaceTransforms transforms = decoder.decode(tape, full2, mesh2, s2, latent);
    const ad::Tensor s3 = reconstruct_vertices(mesh2, transforms);

    const ad::Tensor l_mse = loss_mse(fm.p21.P, s1, s3);
    const ad::Tensor l_fmap = loss_fmap(fm.c12.C, fm.c21.C);
    const ad::Tensor l_cycle = loss_cycle(fm.p12.P, fm.p21.P, s1);
    const ad::Tensor l_primo = primo_energy(layer, transforms);
    const ad::Tensor total =
        ad::add(ad::add(ad::scale(l_mse, config.weights.mse), ad::scale(l_fmap, config.weights.fmap)),
                ad::add(ad::scale(l_cycle, config.weights.cycle),
                        ad::scale(l_primo, config.weights.primo)));

    HistoryEntry entry;
    entry.iteration = it;
    entry.terms = {l_mse.item(), l_fmap.item(), l_cycle.item(), l_primo.item(), total.item()};
    check_loss_terms(entry.terms, it);

    if (stopper.update(entry.terms.total)) {
      best_s3 = s3.value();
      best_p21 = fm.p21.P.value();
      result.best_parameters.clear();
      for (const auto* p : params) result.best_parameters.emplace_back(p->name, p->value);
    }
    entry.best_total = stopper.best();
    result.history.push_back(entry);
    if (progress) progress(entry);
    result.iterations = it + 1;

    if (stopper.should_stop()) {
      result.stop = StopReason::Patience;
      break;
    }
    if (total.tracked()) {
      tape.backward(total);
      ad::adam_step(params, adam, it + 1);
    }
  }
  result.timings.optimization = seconds_since(stage);
  if (result.iterations > 0) {
    result.timings.per_iteration = result.timings.optimization / result.iterations;
  }
  result.best_iteration = stopper.best_index();
  result.best_loss = stopper.best();

  stage = Clock::now();
  result.t21_initial.assignments = nearest_neighbors(best_s3, xyz1);
  result.t21 = result.t21_initial;
  if (config.refine) {
    result.t21 = refine_zoomout(result.t21_initial, full1, full2,
                                {config.k, config.zoomout_k_end, config.zoomout_step});
  }
  result.timings.refinement = seconds_since(stage);

  Vertices s3(best_s3.rows(), 3);
  s3 = best_s3;
  result.s3 = norm1.undo(s3);
  result.p21 = std::move(best_p21);
  result.timings.total = seconds_since(start);
  return result;
}

}  // namespace snk
