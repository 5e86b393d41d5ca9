#include <CLI11.hpp>

#include <algorithm>
#include <string>

#include "commands.hpp"
#include "snk/config.hpp"

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace snk::cli;
  CLI::App app{"Zero-shot non-rigid shape matching"};
  app.require_subcommand(1);

  MatchArgs match;
  std::map<std::string, std::string> flag_values;
  bool no_refine = false;
  auto* m = app.add_subcommand("match", "Match a source mesh onto a target mesh");
  m->add_option("--source", match.source, "Source mesh S2 (OFF/OBJ/PLY)")->required();
  m->add_option("--target", match.target, "Target mesh S1 (OFF/OBJ/PLY)")->required();
  m->add_option("--config", match.config, "key = value config file");
  m->add_option("--out", match.out, "Output directory")->required();
  m->add_flag("--no-refine", no_refine, "Skip ZoomOut refinement");
  m->add_flag("--quiet", match.quiet, "Suppress progress output");
  for (const std::string& key : snk::config_keys()) {
    if (key == "refine") continue;
    m->add_option(flag_name(key), flag_values[key], "Override config key '" + key + "'");
  }

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Geodesic error of a predicted map");
  e->add_option("--pred", eval.pred, "Predicted map file")->required();
  e->add_option("--gt", eval.gt, "Ground-truth map file")->required();
  e->add_option("--target", eval.target, "Mesh the map indices refer to")->required();
  e->add_option("--report", eval.report, "Report file (default: <pred>.report.txt)");

  TransferArgs transfer;
  auto* t = app.add_subcommand("transfer", "Transfer position colors through a map");
  t->add_option("--source", transfer.source, "Mesh whose vertices the map lists")->required();
  t->add_option("--target", transfer.target, "Mesh the map indices refer to")->required();
  t->add_option("--map", transfer.map, "Map file")->required();
  t->add_option("--out", transfer.out, "Colored OFF output")->required();

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write a synthetic test mesh");
  g->add_option("--shape", gen.shape, "blob | sphere")
      ->check(CLI::IsMember({"blob", "sphere"}));
  g->add_option("--frequency", gen.frequency, "Subdivision frequency")->check(CLI::PositiveNumber);
  g->add_option("--bend", gen.bend_radius, "Bend around a cylinder of this radius");
  g->add_option("--permute-seed", gen.permute_seed, "Shuffle vertex order with this seed");
  g->add_option("--out", gen.out, "Output OFF")->required();
  g->add_option("--gt-out", gen.gt_out, "Map from output vertices to unshuffled vertices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  if (m->parsed()) {
    for (const auto& [key, value] : flag_values) {
      if (m->count(flag_name(key)) > 0) match.overrides[key] = value;
    }
    if (no_refine) match.overrides["refine"] = "false";
    return cmd_match(match);
  }
  if (e->parsed()) return cmd_eval(eval);
  if (t->parsed()) return cmd_transfer(transfer);
  return cmd_gen(gen);
}
