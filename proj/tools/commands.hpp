#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace snk::cli {

enum ExitCode { kOk = 0, kUsage = 1, kInputError = 2, kNumericalError = 3 };

struct MatchArgs {
  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path config;
  std::filesystem::path out;
  /// Config overrides from flags, keyed by config key.
  std::map<std::string, std::string> overrides;
  bool quiet = false;
};

struct EvalArgs {
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path target;
  std::filesystem::path report;
};

struct TransferArgs {
  std::filesystem::path source;
  std::filesystem::path target;
  std::filesystem::path map;
  std::filesystem::path out;
};

struct GenArgs {
  std::string shape = "blob";
  int frequency = 7;
  double bend_radius = 0.0;
  std::optional<unsigned long long> permute_seed;
  std::filesystem::path out;
  std::filesystem::path gt_out;
};

int cmd_match(const MatchArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_transfer(const TransferArgs& args);
int cmd_gen(const GenArgs& args);

}  // namespace snk::cli
