#include "snk/losses.hpp"

#include "snk/error.hpp"

namespace snk {

ad::Tensor loss_mse(const ad::Tensor& p21, const ad::Tensor& s1, const ad::Tensor& s3) {
  if (p21.cols() != s1.rows() || p21.rows() != s3.rows() || s1.cols() != s3.cols()) {
    throw InputError("loss_mse: shape mismatch");
  }
  return ad::frobenius_sq(ad::sub(ad::matmul(p21, s1), s3));
}

ad::Tensor loss_fmap(const ad::Tensor& c12, const ad::Tensor& c21) {
  const ad::Index k = c12.rows();
  if (c12.cols() != k || c21.rows() != k || c21.cols() != k) {
    throw InputError("loss_fmap: functional maps must both be k x k");
  }
  ad::Tape& tape = c12.tape();
  const ad::Tensor eye = tape.constant(ad::Matrix::Identity(k, k));
  auto dev = [&](const ad::Tensor& a, const ad::Tensor& b) {
    return ad::frobenius_sq(ad::sub(ad::matmul(a, b), eye));
  };
  const ad::Tensor bijectivity = ad::add(dev(c12, c21), dev(c21, c12));
  const ad::Tensor orthogonality =
      ad::add(dev(ad::transpose(c12), c12), dev(ad::transpose(c21), c21));
  return ad::add(bijectivity, orthogonality);
}

ad::Tensor loss_cycle(const ad::Tensor& p12, const ad::Tensor& p21, const ad::Tensor& s1) {
  if (p12.cols() != p21.rows() || p21.cols() != s1.rows() || p12.rows() != s1.rows()) {
    throw InputError("loss_cycle: shape mismatch");
  }
  return ad::frobenius_sq(ad::sub(ad::matmul(p12, ad::matmul(p21, s1)), s1));
}

}  // namespace snk
