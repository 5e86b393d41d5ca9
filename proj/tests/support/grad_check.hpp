#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "snk/autodiff.hpp"

namespace snk::testing {

/// Builds a scalar from tracked leaves on the given tape.
using ScalarFn = std::function<ad::Tensor(ad::Tape&, const std::vector<ad::Tensor>&)>;

struct GradCheckResult {
  double max_abs_diff = 0.0;
  double scale = 0.0;
  /// max |analytic - numeric| / max(max |numeric|, max |analytic|, 1e-8).
  double relative_error = 0.0;
};

inline double evaluate(const ScalarFn& fn, const std::vector<ad::Matrix>& inputs) {
  ad::Tape tape;
  std::vector<ad::Tensor> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.constant(m));
  return fn(tape, leaves).item();
}

/// Central differences with step eps against one reverse sweep.
inline GradCheckResult grad_check(const ScalarFn& fn, const std::vector<ad::Matrix>& inputs,
                                  double eps = 1e-5) {
  ad::Tape tape;
  std::vector<ad::Tensor> leaves;
  for (const auto& m : inputs) leaves.push_back(tape.leaf(m));
  const ad::Tensor out = fn(tape, leaves);
  tape.backward(out);

  GradCheckResult r;
  double max_num = 0.0, max_ana = 0.0;
  std::vector<ad::Matrix> probe = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const ad::Matrix& analytic = leaves[t].grad();
    for (Eigen::Index i = 0; i < inputs[t].size(); ++i) {
      const double orig = probe[t](i);
      probe[t](i) = orig + eps;
      const double up = evaluate(fn, probe);
      probe[t](i) = orig - eps;
      const double down = evaluate(fn, probe);
      probe[t](i) = orig;
      const double numeric = (up - down) / (2.0 * eps);
      r.max_abs_diff = std::max(r.max_abs_diff, std::abs(numeric - analytic(i)));
      max_num = std::max(max_num, std::abs(numeric));
      max_ana = std::max(max_ana, std::abs(analytic(i)));
    }
  }
  r.scale = std::max({max_num, max_ana, 1e-8});
  r.relative_error = r.max_abs_diff / r.scale;
  return r;
}

inline ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ad::Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  }
  return m;
}

/// sum(a .* W) for a fixed random W, turning any op output into a scalar
/// whose gradient exercises every entry.
inline ad::Tensor project(const ad::Tensor& a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(a, a.tape().constant(random_matrix(a.rows(), a.cols(), rng))));
}

}  // namespace snk::testing
