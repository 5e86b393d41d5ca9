#pragma once

#include <functional>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "snk/autodiff.hpp"
#include "snk/config.hpp"
#include "snk/mesh.hpp"
#include "snk/refine.hpp"
#include "snk/spectral.hpp"

namespace snk {

struct LossTerms {
  double mse = 0.0;
  double fmap = 0.0;
  double cycle = 0.0;
  double primo = 0.0;
  double total = 0.0;
};

/// Throws NumericalError naming the first non-finite term.
void check_loss_terms(const LossTerms& terms, int iteration);

struct HistoryEntry {
  int iteration = 0;
  LossTerms terms;
  double best_total = 0.0;  // lowest total so far, this iteration included
};

/// Tracks the lowest loss. Only strict improvements reset the counter, so the
/// earliest iteration wins ties; should_stop() turns true once `patience`
/// consecutive updates failed to improve.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);

  /// Returns true when `loss` is a new best.
  bool update(double loss);
  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }
  int best_index() const { return best_index_; }
  int stale() const { return stale_; }

 private:
  int patience_;
  double best_;
  int best_index_ = -1;
  int count_ = 0;
  int stale_ = 0;
};

enum class StopReason { MaxIterations, Patience };

struct Timings {
  double spectral = 0.0;
  double optimization = 0.0;
  double refinement = 0.0;
  double total = 0.0;
  double per_iteration = 0.0;
};

struct Landmark {
  int target_vertex = 0;  // on S1
  int source_vertex = 0;  // on S2
};

/// "target_vertex source_vertex" per line, '#' comments.
std::vector<Landmark> read_landmarks(const std::filesystem::path& path);

struct FitResult {
  PointMap t21;          // final map, S2 vertex -> S1 vertex
  PointMap t21_initial;  // nearest neighbor from S3 to S1 before refinement
  Vertices s3;           // best reconstruction, in S1's original frame
  Eigen::MatrixXd p21;   // best soft map
  std::vector<HistoryEntry> history;
  int best_iteration = -1;
  double best_loss = 0.0;
  int iterations = 0;
  StopReason stop = StopReason::MaxIterations;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> best_parameters;
  Timings timings;
};

/// Per-iteration progress callback.
using Progress = std::function<void(const HistoryEntry&)>;

/// Zero-shot matching of source S2 onto target S1: optimizes features, the
/// functional map pipeline and the prism decoder jointly, keeps the
/// lowest-loss snapshot, then converts S3 to a point map and refines it.
/// Throws NumericalError naming the offending loss term on NaN/Inf.
FitResult fit_pair(const TriMesh& target, const TriMesh& source, const Config& config,
                   const std::vector<Landmark>& landmarks = {}, const Progress& progress = {});

/// Centers at the area centroid and scales to unit total area.
struct Normalization {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double scale = 1.0;

  static Normalization of(const TriMesh& mesh);
  Vertices apply(const Vertices& v) const;
  Vertices undo(const Vertices& v) const;
};

/// Heat kernel k_t(v, l) = sum_j exp(-evals_j t) phi_j(v) phi_j(l) for every
/// vertex v and listed vertex l, each column divided by its value at l.
Eigen::MatrixXd landmark_channels(const SpectralBasis& basis, const std::vector<int>& vertices,
                                  double t);

}  // namespace snk
