#include "snk/refine.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <thread>

#include "snk/error.hpp"

namespace snk {
namespace {

constexpr Eigen::Index kQueryBlock = 256;

void nn_block(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& points,
              const Eigen::VectorXd& point_sq, Eigen::Index begin, Eigen::Index end,
              std::vector<int>& out) {
  for (Eigen::Index b = begin; b < end; b += kQueryBlock) {
    const Eigen::Index rows = std::min(kQueryBlock, end - b);
    // |p|^2 - 2 q.p ranks points exactly like |q - p|^2 for a fixed q.
    Eigen::MatrixXd score = -2.0 * queries.middleRows(b, rows) * points.transpose();
    score.rowwise() += point_sq.transpose();
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index best = 0;
      double best_score = score(r, 0);
      for (Eigen::Index j = 1; j < score.cols(); ++j) {
        if (score(r, j) < best_score) {
          best_score = score(r, j);
          best = j;
        }
      }
      out[static_cast<std::size_t>(b + r)] = static_cast<int>(best);
    }
  }
}

}  // namespace

std::vector<int> nearest_neighbors(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& points) {
  if (points.rows() == 0) throw InputError("nearest_neighbors: empty point set");
  if (queries.cols() != points.cols()) {
    throw InputError("nearest_neighbors: dimension mismatch (" + std::to_string(queries.cols()) +
                     " vs " + std::to_string(points.cols()) + ")");
  }
  std::vector<int> out(static_cast<std::size_t>(queries.rows()), 0);
  const Eigen::VectorXd point_sq = points.rowwise().squaredNorm();

  const Eigen::Index n = queries.rows();
  const auto hw = static_cast<Eigen::Index>(std::max(1u, std::thread::hardware_concurrency()));
  const Eigen::Index workers = std::min(hw, (n + kQueryBlock - 1) / kQueryBlock);
  if (workers <= 1) {
    nn_block(queries, points, point_sq, 0, n, out);
    return out;
  }
  const Eigen::Index chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  for (Eigen::Index w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(
        [&, begin, end] { nn_block(queries, points, point_sq, begin, end, out); });
  }
  for (auto& t : threads) t.join();
  return out;
}

void check_point_map(const PointMap& map, int expected_size, int range) {
  if (map.size() != expected_size) {
    throw InputError("point map has " + std::to_string(map.size()) + " entries, expected " +
                     std::to_string(expected_size));
  }
  for (int i = 0; i < map.size(); ++i) {
    const int a = map.assignments[static_cast<std::size_t>(i)];
    if (a < 0 || a >= range) {
      throw InputError("point map entry " + std::to_string(i) + " = " + std::to_string(a) +
                       " is out of range [0, " + std::to_string(range) + ")");
    }
  }
}

Eigen::MatrixXd fmap_from_point_map(const PointMap& t21, const SpectralBasis& basis1,
                                    const SpectralBasis& basis2, int k) {
  check_point_map(t21, basis2.num_vertices(), basis1.num_vertices());
  Eigen::MatrixXd pulled(basis2.num_vertices(), k);
  for (int i = 0; i < basis2.num_vertices(); ++i) {
    pulled.row(i) = basis1.phi.row(t21.assignments[static_cast<std::size_t>(i)]).head(k);
  }
  return basis2.phi.leftCols(k).transpose() * basis2.mass.asDiagonal() * pulled;
}

PointMap refine_zoomout(const PointMap& t21, const SpectralBasis& basis1,
                        const SpectralBasis& basis2, const ZoomOutSchedule& schedule) {
  if (schedule.step < 1) throw InputError("zoomout step must be >= 1");
  if (schedule.k_start < 1 || schedule.k_start > schedule.k_end) {
    throw InputError("zoomout needs 1 <= k_start <= k_end");
  }
  const int available = std::min(basis1.k(), basis2.k());
  if (schedule.k_end > available) {
    throw InputError("zoomout k_end = " + std::to_string(schedule.k_end) + " exceeds the " +
                     std::to_string(available) +
                     " computed eigenpairs; compute a larger eigendecomposition");
  }
  check_point_map(t21, basis2.num_vertices(), basis1.num_vertices());

  PointMap current = t21;
  for (int k = schedule.k_start;; k = std::min(k + schedule.step, schedule.k_end)) {
    const Eigen::MatrixXd c12 = fmap_from_point_map(current, basis1, basis2, k);
    current.assignments = nearest_neighbors(basis2.phi.leftCols(k) * c12, basis1.phi.leftCols(k));
    if (k == schedule.k_end) break;
  }
  return current;
}

}  // namespace snk
