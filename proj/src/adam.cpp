#include <cmath>
#include <string>

#include "snk/autodiff.hpp"
#include "snk/error.hpp"

namespace snk::ad {

void zero_grad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->grad = Matrix::Zero(p->value.rows(), p->value.cols());
}

void adam_step(const std::vector<Parameter*>& params, const AdamOptions& options, int t) {
  if (t < 1) throw std::invalid_argument("adam_step: step counter starts at 1");
  for (const Parameter* p : params) {
    if (p->grad.size() != 0 && !p->grad.allFinite()) {
      throw NumericalError("non-finite gradient in parameter '" + p->name + "'");
    }
  }
  const double c1 = 1.0 - std::pow(options.beta1, t);
  const double c2 = 1.0 - std::pow(options.beta2, t);
  for (Parameter* p : params) {
    if (p->grad.size() == 0) continue;
    if (p->adam_m.size() == 0) {
      p->adam_m = Matrix::Zero(p->value.rows(), p->value.cols());
      p->adam_v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    p->adam_m = options.beta1 * p->adam_m + (1.0 - options.beta1) * p->grad;
    p->adam_v = options.beta2 * p->adam_v + (1.0 - options.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= options.lr * (p->adam_m.array() / c1) /
                        ((p->adam_v.array() / c2).sqrt() + options.eps);
  }
  zero_grad(params);
}

}  // namespace snk::ad
