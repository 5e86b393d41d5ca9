#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "snk/autodiff.hpp"
#include "snk/spectral.hpp"

namespace snk {

struct BackboneConfig {
  int n_blocks = 4;
  int width = 128;
  int in_dim = 3;
  int out_dim = 128;
};

/// Heat diffusion of each column of `x` (n x c) in the truncated basis:
/// column j becomes phi diag(exp(-evals * times_j)) phi^T M x_j.
/// `times` is 1 x c and must be positive.
ad::Tensor diffuse(const SpectralBasis& basis, const ad::Tensor& x, const ad::Tensor& times);

/// Diffusion-based feature network: linear lift to `width`, then n_blocks of
/// (diffuse -> pointwise two-layer MLP with ReLU -> residual add), then a
/// linear map to `out_dim`. Every operation is either pointwise or spectral,
/// so the network is equivariant to vertex permutations.
class Backbone {
 public:
  struct Block {
    ad::Parameter time;  // 1 x width, unconstrained; softplus gives the diffusion time
    ad::Parameter w1, b1, w2, b2;
  };

  Backbone(const BackboneConfig& config, const std::string& name, std::mt19937_64& rng);

  ad::Tensor forward(ad::Tape& tape, const SpectralBasis& basis, const ad::Tensor& x);

  std::vector<ad::Parameter*> parameters();
  const BackboneConfig& config() const { return config_; }

  ad::Parameter lift_w, lift_b;
  std::vector<Block> blocks;
  ad::Parameter out_w, out_b;

 private:
  BackboneConfig config_;
};

/// Initial diffusion time (after softplus) for unit-area shapes.
inline constexpr double kInitialDiffusionTime = 1e-2;

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights (fan_in x fan_out) and
/// bias (1 x fan_out).
ad::Parameter linear_weight(const std::string& name, int fan_in, int fan_out, std::mt19937_64& rng);
ad::Parameter linear_bias(const std::string& name, int fan_in, int fan_out, std::mt19937_64& rng);

/// x W + b.
ad::Tensor linear(ad::Tape& tape, const ad::Tensor& x, ad::Parameter& w, ad::Parameter& b);

/// Heat kernel signature sum_j exp(-evals_j t) phi_j(v)^2 at `n_times`
/// log-spaced times between 4 ln10 / evals_max and 4 ln10 / evals_1. Each
/// column is scaled to unit M-weighted norm.
Eigen::MatrixXd hks_features(const SpectralBasis& basis, int n_times);

/// Flat binary of named matrices; load matches by name and shape and throws
/// InputError on mismatch.
void save_parameters(const std::filesystem::path& path, const std::vector<ad::Parameter*>& params);
void load_parameters(const std::filesystem::path& path, const std::vector<ad::Parameter*>& params);

}  // namespace snk
