#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "snk/mesh.hpp"

namespace snk {

/// Per source-side vertex, the correct target vertex.
struct GroundTruth {
  std::vector<int> targets;
};

struct CurveSample {
  double threshold = 0.0;
  double fraction = 0.0;
};

struct ErrorReport {
  /// Geodesic distance between predicted and true target vertex, divided by
  /// sqrt(total target area). Infinite when the two are disconnected.
  std::vector<double> errors;
  double mean = 0.0;       // over finite errors
  int excluded_count = 0;  // infinite errors left out of the mean
  std::vector<CurveSample> curve;
};

/// Thresholds 0, 0.0025, ..., 0.25.
std::vector<double> default_thresholds();

ErrorReport geodesic_error(const std::vector<int>& pred, const GroundTruth& gt,
                           const TriMesh& target,
                           const std::vector<double>& thresholds = default_thresholds());

/// Fraction of all vertices with error <= t, per ascending threshold t.
std::vector<double> accuracy_curve(const ErrorReport& report,
                                   const std::vector<double>& thresholds);

/// One 0-based index per line; '#' starts a comment. Entries outside
/// [0, range) raise InputError naming the line (range < 0 skips the check).
std::vector<int> read_map(const std::filesystem::path& path, int range = -1);

void write_map(const std::filesystem::path& path, const std::vector<int>& map,
               const std::string& header);

/// Mean, excluded count, per-vertex errors and curve samples as plain text.
void write_report(const std::filesystem::path& path, const ErrorReport& report);

}  // namespace snk
