#include "snk/diffusion_net.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>

#include "snk/error.hpp"

namespace snk {

ad::Tensor diffuse(const SpectralBasis& basis, const ad::Tensor& x, const ad::Tensor& times) {
  ad::Tape& tape = x.tape();
  const ad::Tensor pinv = tape.constant(basis.pinv());
  const ad::Tensor phi = tape.constant(basis.phi);
  const ad::Tensor neg_evals = tape.constant(-basis.evals);
  const ad::Tensor coefs = ad::matmul(pinv, x);                        // k x c
  const ad::Tensor decay = ad::exp(ad::matmul(neg_evals, times));      // k x c
  return ad::matmul(phi, ad::mul(coefs, decay));
}

ad::Parameter linear_weight(const std::string& name, int fan_in, int fan_out,
                            std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Matrix w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  return {name, std::move(w)};
}

ad::Parameter linear_bias(const std::string& name, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ad::Matrix b(1, fan_out);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = dist(rng);
  return {name, std::move(b)};
}

ad::Tensor linear(ad::Tape& tape, const ad::Tensor& x, ad::Parameter& w, ad::Parameter& b) {
  return ad::add_row(ad::matmul(x, tape.param(w)), tape.param(b));
}

Backbone::Backbone(const BackboneConfig& config, const std::string& name, std::mt19937_64& rng)
    : config_(config) {
  if (config.n_blocks < 0 || config.width < 1 || config.in_dim < 1 || config.out_dim < 1) {
    throw InputError("backbone '" + name + "': dimensions must be positive");
  }
  const int w = config.width;
  lift_w = linear_weight(name + ".lift.w", config.in_dim, w, rng);
  lift_b = linear_bias(name + ".lift.b", config.in_dim, w, rng);
  // softplus^-1 of the initial time
  const double raw_time = std::log(std::expm1(kInitialDiffusionTime));
  for (int i = 0; i < config.n_blocks; ++i) {
    const std::string prefix = name + ".block" + std::to_string(i);
    Block block{
        {prefix + ".time", ad::Matrix::Constant(1, w, raw_time)},
        linear_weight(prefix + ".mlp0.w", w, w, rng),
        linear_bias(prefix + ".mlp0.b", w, w, rng),
        linear_weight(prefix + ".mlp1.w", w, w, rng),
        linear_bias(prefix + ".mlp1.b", w, w, rng),
    };
    blocks.push_back(std::move(block));
  }
  out_w = linear_weight(name + ".out.w", w, config.out_dim, rng);
  out_b = linear_bias(name + ".out.b", w, config.out_dim, rng);
}

ad::Tensor Backbone::forward(ad::Tape& tape, const SpectralBasis& basis, const ad::Tensor& x) {
  if (x.cols() != config_.in_dim || x.rows() != basis.num_vertices()) {
    throw InputError("backbone input is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + ", expected " +
                     std::to_string(basis.num_vertices()) + "x" + std::to_string(config_.in_dim));
  }
  ad::Tensor h = linear(tape, x, lift_w, lift_b);
  for (Block& block : blocks) {
    const ad::Tensor diffused = diffuse(basis, h, ad::softplus(tape.param(block.time)));
    ad::Tensor m = ad::relu(linear(tape, diffused, block.w1, block.b1));
    m = linear(tape, m, block.w2, block.b2);
    h = ad::add(h, m);
  }
  return linear(tape, h, out_w, out_b);
}

std::vector<ad::Parameter*> Backbone::parameters() {
  std::vector<ad::Parameter*> out = {&lift_w, &lift_b};
  for (Block& b : blocks) {
    out.insert(out.end(), {&b.time, &b.w1, &b.b1, &b.w2, &b.b2});
  }
  out.insert(out.end(), {&out_w, &out_b});
  return out;
}

Eigen::MatrixXd hks_features(const SpectralBasis& basis, int n_times) {
  if (n_times < 1) throw InputError("hks_features: need at least one time");
  // First nonzero eigenvalue.
  int first = 0;
  while (first < basis.k() && basis.evals(first) < 1e-8) ++first;
  if (first >= basis.k()) throw InputError("hks_features: basis has no nonzero eigenvalue");
  const double t_min = 4.0 * std::log(10.0) / basis.evals(basis.k() - 1);
  const double t_max = 4.0 * std::log(10.0) / basis.evals(first);

  const Eigen::MatrixXd phi_sq = basis.phi.cwiseAbs2();
  Eigen::MatrixXd hks(basis.num_vertices(), n_times);
  for (int i = 0; i < n_times; ++i) {
    const double frac = n_times == 1 ? 0.5 : static_cast<double>(i) / (n_times - 1);
    const double t = std::exp(std::log(t_min) + frac * (std::log(t_max) - std::log(t_min)));
    const Eigen::VectorXd weights = (-basis.evals.array().max(0.0) * t).exp();
    hks.col(i) = phi_sq * weights;
    const double norm = std::sqrt(basis.mass.dot(hks.col(i).cwiseAbs2()));
    hks.col(i) /= norm;
  }
  return hks;
}

namespace {
constexpr char kParamMagic[8] = {'S', 'N', 'K', 'P', 'A', 'R', '1', '\0'};
}

void save_parameters(const std::filesystem::path& path,
                     const std::vector<ad::Parameter*>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  out.write(kParamMagic, sizeof(kParamMagic));
  const auto count = static_cast<std::uint64_t>(params.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const ad::Parameter* p : params) {
    const auto len = static_cast<std::uint64_t>(p->name.size());
    const auto rows = static_cast<std::int64_t>(p->value.rows());
    const auto cols = static_cast<std::int64_t>(p->value.cols());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(p->name.data(), static_cast<std::streamsize>(len));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw InputError(path.string() + ": write failed");
}

void load_parameters(const std::filesystem::path& path,
                     const std::vector<ad::Parameter*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  char magic[sizeof(kParamMagic)];
  std::uint64_t count = 0;
  if (!in.read(magic, sizeof(magic)) || std::string(magic, 7) != std::string(kParamMagic, 7) ||
      !in.read(reinterpret_cast<char*>(&count), sizeof(count))) {
    throw InputError(path.string() + ": not a parameter file");
  }
  std::map<std::string, ad::Matrix> stored;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t len = 0;
    std::int64_t rows = 0, cols = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)) || len > (1u << 20)) {
      throw InputError(path.string() + ": truncated parameter file");
    }
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || rows < 0 || cols < 0) throw InputError(path.string() + ": truncated parameter file");
    ad::Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw InputError(path.string() + ": truncated parameter file");
    stored.emplace(std::move(name), std::move(m));
  }
  for (ad::Parameter* p : params) {
    const auto it = stored.find(p->name);
    if (it == stored.end()) throw InputError(path.string() + ": missing parameter '" + p->name + "'");
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
      throw InputError(path.string() + ": shape mismatch for parameter '" + p->name + "'");
    }
    p->value = it->second;
  }
}

}  // namespace snk
