#include <stdexcept>
#include <string>

#include "snk/autodiff.hpp"

namespace snk::ad {

Parameter::Parameter(std::string n, Matrix v)
    : name(std::move(n)),
      value(std::move(v)),
      grad(Matrix::Zero(value.rows(), value.cols())),
      adam_m(Matrix::Zero(value.rows(), value.cols())),
      adam_v(Matrix::Zero(value.rows(), value.cols())) {}

const Matrix& Tensor::value() const { return tape_->value_of(id_); }
const Matrix& Tensor::grad() const { return tape_->grad_of(id_); }
bool Tensor::tracked() const { return tape_ != nullptr && tape_->tracked(id_); }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw std::logic_error("item() on a " + std::to_string(v.rows()) + "x" +
                           std::to_string(v.cols()) + " tensor");
  }
  return v(0, 0);
}

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.tracked = true;
  return push(std::move(n));
}

Tensor Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.tracked = true;
  n.param = &p;
  return push(std::move(n));
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Tensor& t : inputs) {
    if (t.tape_ != this) throw std::logic_error("tensor from a different tape");
    n.tracked = n.tracked || tracked(t.id_);
  }
  if (n.tracked) n.backward = std::move(backward);
  return push(std::move(n));
}

Tensor Tape::record(Matrix value, const std::vector<Tensor>& inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Tensor& t : inputs) {
    if (t.tape_ != this) throw std::logic_error("tensor from a different tape");
    n.tracked = n.tracked || tracked(t.id_);
  }
  if (n.tracked) n.backward = std::move(backward);
  return push(std::move(n));
}

bool Tape::needs_grad(const Tensor& t) const { return tracked(t.id_); }

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(t.id_)];
  if (!n.tracked) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape_ != this) throw std::logic_error("backward: tensor from a different tape");
  Node& root = nodes_[static_cast<std::size_t>(loss.id_)];
  if (!root.tracked) throw std::logic_error("backward on an untracked tensor");
  if (root.value.size() != 1) throw std::logic_error("backward requires a scalar loss");

  for (auto& n : nodes_) n.grad.resize(0, 0);
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.tracked || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad, n.value);
  }
  for (auto& n : nodes_) {
    if (!n.tracked || n.backward) continue;
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    if (n.param != nullptr) {
      if (n.param->grad.size() == 0) {
        n.param->grad = n.grad;
      } else {
        n.param->grad += n.grad;
      }
    }
  }
}

}  // namespace snk::ad
