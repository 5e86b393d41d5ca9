#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include <json.hpp>

#include "snk/config.hpp"
#include "snk/error.hpp"
#include "snk/eval.hpp"
#include "snk/mesh.hpp"
#include "snk/synthetic.hpp"
#include "snk/trainer.hpp"

namespace snk::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Runs `body`, which updates `stage` as it goes, and maps exceptions to exit
// codes with a stage-tagged message.
int run(const char* command, const std::function<void(std::string& stage)>& body) {
  std::string stage = "setup";
  try {
    body(stage);
    return kOk;
  } catch (const NumericalError& e) {
    std::cerr << "snk " << command << ": [" << stage << "] numerical failure: " << e.what()
              << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "snk " << command << ": [" << stage << "] " << e.what() << '\n';
    return kInputError;
  }
}

Colors position_colors(const Vertices& v) {
  const Eigen::RowVector3d lo = v.colwise().minCoeff();
  const Eigen::RowVector3d extent = v.colwise().maxCoeff() - lo;
  Colors c(v.rows(), 3);
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (int d = 0; d < 3; ++d) {
      const double t = extent(d) > 0 ? (v(i, d) - lo(d)) / extent(d) : 0.5;
      c(i, d) = static_cast<int>(std::lround(255.0 * t));
    }
  }
  return c;
}

void write_history(const fs::path& path, const std::vector<HistoryEntry>& history) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw InputError(path.string() + ": cannot open for writing");
  std::fprintf(f, "# iteration mse fmap cycle primo total best_total\n");
  for (const HistoryEntry& h : history) {
    std::fprintf(f, "%d %.17g %.17g %.17g %.17g %.17g %.17g\n", h.iteration, h.terms.mse,
                 h.terms.fmap, h.terms.cycle, h.terms.primo, h.terms.total, h.best_total);
  }
  std::fclose(f);
}

}  // namespace

int cmd_match(const MatchArgs& args) {
  return run("match", [&](std::string& stage) {
    stage = "config";
    Config config = args.config.empty() ? Config{} : load_config(args.config);
    for (const auto& [key, value] : args.overrides) set_config_value(config, key, value);
    validate_config(config);

    stage = "load";
    const TriMesh source = load_mesh(args.source);
    const TriMesh target = load_mesh(args.target);
    std::vector<Landmark> landmarks;
    if (!config.landmarks.empty()) landmarks = read_landmarks(config.landmarks);

    stage = "output";
    fs::create_directories(args.out);

    stage = "fit";
    Progress progress;
    if (!args.quiet) {
      progress = [](const HistoryEntry& h) {
        if (h.iteration % 50 == 0) {
          std::fprintf(stderr, "iter %5d  total %.6g  best %.6g\n", h.iteration, h.terms.total,
                       h.best_total);
        }
      };
    }
    const FitResult fit = fit_pair(target, source, config, landmarks, progress);

    stage = "write";
    const fs::path map_path = args.out / "correspondence.txt";
    const fs::path initial_path = args.out / "correspondence_initial.txt";
    const fs::path s3_path = args.out / "reconstruction.off";
    const fs::path history_path = args.out / "loss_history.txt";
    const fs::path manifest_path = args.out / "manifest.json";
    const std::string header = "T21: line i = source vertex i, value = target vertex index";
    write_map(map_path, fit.t21.assignments, header);
    write_map(initial_path, fit.t21_initial.assignments, header + " (before refinement)");
    save_off(s3_path, fit.s3, source.faces());
    write_history(history_path, fit.history);

    json manifest;
    manifest["inputs"] = {{"source", args.source.string()},
                          {"target", args.target.string()},
                          {"config", args.config.string()},
                          {"landmarks", config.landmarks}};
    json snapshot = json::object();
    for (const auto& [key, value] : config_entries(config)) snapshot[key] = value;
    manifest["config"] = snapshot;
    manifest["seed"] = config.seed;
    manifest["meshes"] = {{"source_vertices", source.num_vertices()},
                          {"source_faces", source.num_faces()},
                          {"target_vertices", target.num_vertices()},
                          {"target_faces", target.num_faces()}};
    manifest["optimization"] = {
        {"iterations", fit.iterations},
        {"best_iteration", fit.best_iteration},
        {"best_loss", fit.best_loss},
        {"stop_reason", fit.stop == StopReason::Patience ? "patience" : "max_iterations"}};
    manifest["timings_seconds"] = {{"spectral", fit.timings.spectral},
                                   {"optimization", fit.timings.optimization},
                                   {"per_iteration", fit.timings.per_iteration},
                                   {"refinement", fit.timings.refinement},
                                   {"total", fit.timings.total}};
    manifest["outputs"] = {{"correspondence", map_path.string()},
                           {"correspondence_initial", initial_path.string()},
                           {"reconstruction", s3_path.string()},
                           {"loss_history", history_path.string()}};
    std::ofstream(manifest_path) << manifest.dump(2) << '\n';

    std::printf("iterations %d (best %d, loss %.6g)\n", fit.iterations, fit.best_iteration,
                fit.best_loss);
    std::printf("timing spectral %.3fs optimization %.3fs refinement %.3fs total %.3fs\n",
                fit.timings.spectral, fit.timings.optimization, fit.timings.refinement,
                fit.timings.total);
    std::printf("wrote %s\n", manifest_path.string().c_str());
  });
}

int cmd_eval(const EvalArgs& args) {
  return run("eval", [&](std::string& stage) {
    stage = "load";
    const TriMesh target = load_mesh(args.target);
    const std::vector<int> pred = read_map(args.pred, target.num_vertices());
    GroundTruth gt{read_map(args.gt, target.num_vertices())};
    if (pred.size() != gt.targets.size()) {
      throw InputError("size mismatch: " + args.pred.string() + " has " +
                       std::to_string(pred.size()) + " entries, " + args.gt.string() + " has " +
                       std::to_string(gt.targets.size()));
    }
    stage = "evaluate";
    const ErrorReport report = geodesic_error(pred, gt, target);
    stage = "write";
    const fs::path report_path =
        args.report.empty() ? fs::path(args.pred.string() + ".report.txt") : args.report;
    write_report(report_path, report);
    std::printf("mean_geodesic_error %.17g\n", report.mean);
    if (report.excluded_count > 0) {
      std::printf("excluded_unreachable %d\n", report.excluded_count);
    }
    std::printf("report %s\n", report_path.string().c_str());
  });
}

int cmd_transfer(const TransferArgs& args) {
  return run("transfer", [&](std::string& stage) {
    stage = "load";
    const TriMesh source = load_mesh(args.source);
    const TriMesh target = load_mesh(args.target);
    const std::vector<int> map = read_map(args.map, target.num_vertices());
    if (static_cast<int>(map.size()) != source.num_vertices()) {
      throw InputError("size mismatch: map has " + std::to_string(map.size()) +
                       " entries, source mesh has " + std::to_string(source.num_vertices()) +
                       " vertices");
    }
    stage = "write";
    const Colors target_colors = position_colors(target.vertices());
    Colors colors(source.num_vertices(), 3);
    for (int i = 0; i < source.num_vertices(); ++i) colors.row(i) = target_colors.row(map[i]);
    save_off(args.out, source.vertices(), source.faces(), colors);
  });
}

int cmd_gen(const GenArgs& args) {
  return run("gen", [&](std::string& stage) {
    stage = "generate";
    TriMesh mesh = args.shape == "sphere" ? synthetic::icosphere(args.frequency)
                                          : synthetic::asymmetric_blob(args.frequency);
    if (args.bend_radius != 0.0) {
      mesh = mesh.with_vertices(synthetic::bend(mesh.vertices(), args.bend_radius));
    }
    std::vector<int> perm(static_cast<std::size_t>(mesh.num_vertices()));
    for (int i = 0; i < mesh.num_vertices(); ++i) perm[static_cast<std::size_t>(i)] = i;
    if (args.permute_seed) {
      perm = synthetic::random_permutation(mesh.num_vertices(), *args.permute_seed);
      mesh = synthetic::permute_vertices(mesh, perm);
    }
    stage = "write";
    save_off(args.out, mesh);
    if (!args.gt_out.empty()) {
      write_map(args.gt_out, perm, "line i = output vertex i, value = unshuffled vertex index");
    }
  });
}

}  // namespace snk::cli
