#pragma once

#include <vector>

#include <Eigen/Core>

#include "snk/fmap.hpp"
#include "snk/spectral.hpp"

namespace snk {

/// Hard correspondence: `assignments[i]` is the vertex on the other shape
/// matched to query vertex i. T21 (TwoToOne) has one entry per shape-2
/// vertex holding a shape-1 index.
struct PointMap {
  std::vector<int> assignments;
  Direction direction = Direction::TwoToOne;

  int size() const { return static_cast<int>(assignments.size()); }
};

/// Exact nearest neighbor (Euclidean) of every query row among `points`
/// rows. Ties go to the lowest point index.
std::vector<int> nearest_neighbors(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& points);

/// Throws InputError unless every entry lies in [0, range).
void check_point_map(const PointMap& map, int expected_size, int range);

struct ZoomOutSchedule {
  int k_start = 30;
  int k_end = 100;
  int step = 10;
};

/// ZoomOut refinement of T21. At each k in k_start, k_start + step, ...
/// (the last round always runs at k_end): C12 = phi2[:, :k]^T M2 phi1[T21, :k], then T21 = nearest neighbor
/// of the rows of phi2[:, :k] C12 among the rows of phi1[:, :k].
PointMap refine_zoomout(const PointMap& t21, const SpectralBasis& basis1,
                        const SpectralBasis& basis2, const ZoomOutSchedule& schedule);

/// Functional map C12 (k x k) induced by a hard map T21.
Eigen::MatrixXd fmap_from_point_map(const PointMap& t21, const SpectralBasis& basis1,
                                    const SpectralBasis& basis2, int k);

}  // namespace snk
