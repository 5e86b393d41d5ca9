#pragma once

#include "snk/autodiff.hpp"

namespace snk {

/// ||P21 S1 - S3||_F^2.
ad::Tensor loss_mse(const ad::Tensor& p21, const ad::Tensor& s1, const ad::Tensor& s3);

/// ||C12 C21 - I||^2 + ||C21 C12 - I||^2 + ||C12^T C12 - I||^2 + ||C21^T C21 - I||^2.
ad::Tensor loss_fmap(const ad::Tensor& c12, const ad::Tensor& c21);

/// ||P12 P21 S1 - S1||_F^2.
ad::Tensor loss_cycle(const ad::Tensor& p12, const ad::Tensor& p21, const ad::Tensor& s1);

}  // namespace snk
