#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "snk/primo.hpp"

namespace snk {

enum class FeatureMode {
  Learned,  // shared diffusion backbone on xyz
  Hks,      // fixed heat kernel signatures
  Free,     // per-vertex free variables, no network
};

struct LossWeights {
  double mse = 1.0;
  double fmap = 1.0;
  double cycle = 1.0;
  double primo = 1.0;
};

struct Config {
  int k = 30;
  double lambda_commut = 1e-3;
  double tau = 0.07;
  double h = 0.02;  // prism half-thickness, key "prism_height"
  LossWeights weights;
  double lr = 1e-3;
  int max_iters = 1000;
  int patience = 100;
  std::uint64_t seed = 0;
  bool normalize = true;
  std::string landmarks;  // optional file of "vertex_on_target vertex_on_source" pairs
  FeatureMode features = FeatureMode::Learned;
  bool refine = true;
  int zoomout_k_end = 100;
  int zoomout_step = 10;
  int feature_dim = 128;
  int width = 128;
  int blocks = 4;
  int latent_dim = 512;
  int hks_times = 32;
  double landmark_time = 1e-2;
  Extrusion extrusion = Extrusion::Symmetric;
};

/// All recognised keys, in file order.
const std::vector<std::string>& config_keys();

/// Parses `value` into the field named `key`. Throws InputError for unknown
/// keys and malformed values.
void set_config_value(Config& config, const std::string& key, const std::string& value);

/// Current value of every key as text, in config_keys() order.
std::vector<std::pair<std::string, std::string>> config_entries(const Config& config);

/// Throws InputError when a value is out of its valid range.
void validate_config(const Config& config);

/// "key = value" lines; '#' starts a comment; missing keys keep defaults.
Config load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const Config& config);

std::string to_string(FeatureMode mode);
FeatureMode parse_feature_mode(const std::string& text);

}  // namespace snk
