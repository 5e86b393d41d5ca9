#include "snk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "snk/error.hpp"

namespace snk {

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.0025 * i);
  return t;
}

ErrorReport geodesic_error(const std::vector<int>& pred, const GroundTruth& gt,
                           const TriMesh& target, const std::vector<double>& thresholds) {
  if (pred.size() != gt.targets.size()) {
    throw InputError("size mismatch: prediction has " + std::to_string(pred.size()) +
                     " entries, ground truth has " + std::to_string(gt.targets.size()));
  }
  const int n = target.num_vertices();
  auto check = [n](const std::vector<int>& m, const char* what) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] < 0 || m[i] >= n) {
        throw InputError(std::string(what) + " entry " + std::to_string(i) + " = " +
                         std::to_string(m[i]) + " is out of range [0, " + std::to_string(n) +
                         ")");
      }
    }
  };
  check(pred, "prediction");
  check(gt.targets, "ground truth");

  // One Dijkstra run per distinct ground-truth vertex.
  std::map<int, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < pred.size(); ++i) by_source[gt.targets[i]].push_back(i);
  std::vector<std::pair<int, const std::vector<std::size_t>*>> jobs;
  jobs.reserve(by_source.size());
  for (const auto& [source, rows] : by_source) jobs.emplace_back(source, &rows);

  const EdgeGraph graph = EdgeGraph::from_mesh(target);
  const double scale = 1.0 / std::sqrt(total_surface_area(target));
  ErrorReport report;
  report.errors.assign(pred.size(), 0.0);

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t j = begin; j < jobs.size(); j += stride) {
      const std::vector<double> dist = geodesic_distances(graph, jobs[j].first);
      for (std::size_t row : *jobs[j].second) {
        report.errors[row] = dist[static_cast<std::size_t>(pred[row])] * scale;
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), jobs.size());
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work, w, workers);
    for (auto& t : threads) t.join();
  }

  double sum = 0.0;
  std::size_t finite = 0;
  for (double e : report.errors) {
    if (std::isinf(e)) {
      ++report.excluded_count;
    } else {
      sum += e;
      ++finite;
    }
  }
  report.mean = finite > 0 ? sum / static_cast<double>(finite) : 0.0;
  const std::vector<double> fractions = accuracy_curve(report, thresholds);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    report.curve.push_back({thresholds[i], fractions[i]});
  }
  return report;
}

std::vector<double> accuracy_curve(const ErrorReport& report,
                                   const std::vector<double>& thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InputError("accuracy thresholds must be ascending");
  }
  std::vector<double> sorted = report.errors;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(thresholds.size());
  const double n = static_cast<double>(std::max<std::size_t>(1, sorted.size()));
  for (double t : thresholds) {
    const auto count = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    out.push_back(sorted.empty() ? 1.0 : static_cast<double>(count) / n);
  }
  return out;
}

std::vector<int> read_map(const std::filesystem::path& path, int range) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open");
  std::vector<int> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    long long value = 0;
    if (!(tokens >> value)) {
      std::string rest;
      tokens.clear();
      if (tokens >> rest) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": not an index: '" +
                         rest + "'");
      }
      continue;
    }
    std::string extra;
    if (tokens >> extra) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected one index per line");
    }
    if (value < 0 || (range >= 0 && value >= range)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": index " +
                       std::to_string(value) + " out of range [0, " +
                       (range >= 0 ? std::to_string(range) : std::string("inf")) + ")");
    }
    out.push_back(static_cast<int>(value));
  }
  return out;
}

void write_map(const std::filesystem::path& path, const std::vector<int>& map,
               const std::string& header) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  if (!header.empty()) out << "# " << header << '\n';
  for (int v : map) out << v << '\n';
}

void write_report(const std::filesystem::path& path, const ErrorReport& report) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out.precision(17);
  out << "# mean " << report.mean << '\n';
  out << "# excluded " << report.excluded_count << '\n';
  out << "# curve: threshold fraction\n";
  for (const CurveSample& s : report.curve) out << "curve " << s.threshold << ' ' << s.fraction << '\n';
  out << "# per-vertex errors\n";
  for (std::size_t i = 0; i < report.errors.size(); ++i) {
    out << "error " << i << ' ' << report.errors[i] << '\n';
  }
}

}  // namespace snk
