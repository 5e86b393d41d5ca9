#pragma once

#include <array>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

/// Reverse-mode automatic differentiation over dense 2-D real matrices.
///
/// A Tape records every operation of one forward pass in order. Tensors are
/// lightweight handles (tape pointer + node id); values live on the tape and
/// stay valid for its lifetime. Gradients are accumulated additively, so a
/// tensor consumed by several operations receives the sum of their
/// contributions. Trainable state lives in Parameter objects that outlive
/// individual tapes; Tape::param binds one as a tracked leaf and backward()
/// adds the leaf gradient into Parameter::grad.
namespace snk::ad {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Matrix value);

  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value, zero after each optimizer step
  Matrix adam_m;
  Matrix adam_v;
};

class Tape;

class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  /// Gradient after Tape::backward; empty if the node was not reached.
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }
  /// True when some tracked leaf flows into this tensor.
  bool tracked() const;
  /// Single entry of a 1x1 tensor.
  double item() const;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Called in reverse recording order with the gradient of this node and
  /// its forward value; must route the gradient into its inputs through
  /// accumulate().
  using Backward = std::function<void(Tape&, const Matrix& grad_out, const Matrix& value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  /// Tracked leaf whose gradient stays on the tape.
  Tensor leaf(Matrix value);
  /// Tracked leaf bound to a parameter; backward() adds into p.grad.
  Tensor param(Parameter& p);

  /// Records a new node. It is tracked iff any input is tracked; otherwise
  /// the backward closure is dropped.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, Backward backward);
  Tensor record(Matrix value, const std::vector<Tensor>& inputs, Backward backward);

  /// Reverse sweep from a tracked 1x1 tensor. Throws std::logic_error when
  /// the loss is untracked or not scalar.
  void backward(const Tensor& loss);

  bool needs_grad(const Tensor& t) const;
  void accumulate(const Tensor& t, const Matrix& g);

  const Matrix& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool tracked(int id) const { return nodes_[static_cast<std::size_t>(id)].tracked; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool tracked = false;
    Backward backward;
    Parameter* param = nullptr;
  };
  Tensor push(Node node);

  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations. All inputs must live on the same tape.

enum class Axis {
  Rows,  // reduce over rows: n x c -> 1 x c
  Cols,  // reduce over columns: n x c -> n x 1
};

/// Index lists in compressed form: segment s owns
/// indices[offsets[s] .. offsets[s+1]).
struct Segments {
  std::vector<int> offsets{0};
  std::vector<int> indices;

  static Segments from_lists(const std::vector<std::vector<int>>& lists);
  int count() const { return static_cast<int>(offsets.size()) - 1; }
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor transpose(const Tensor& a);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, Index start, Index count);

/// a (n x c) + b (1 x c) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& b);
/// 1 x c -> n x c.
Tensor repeat_rows(const Tensor& a, Index n);

/// Row-wise softmax of a / temperature.
Tensor softmax_rows(const Tensor& a, double temperature);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softplus(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Max over an axis; ties go to the lowest index, which alone receives the
/// gradient.
Tensor max(const Tensor& a, Axis axis);
Tensor frobenius_sq(const Tensor& a);

Tensor gather_rows(const Tensor& a, std::vector<int> rows);
/// Row s of the result is the mean of a's rows listed in segment s (zero for
/// an empty segment).
Tensor segment_mean(const Tensor& a, std::shared_ptr<const Segments> segments);

/// Constant sparse operand times a dense tensor.
Tensor sparse_matmul(std::shared_ptr<const SparseMatrix> s, const Tensor& a);

/// Batched 3x3 matrix-vector products. `mats` is m x 9 (row-major 3x3 per
/// row); `vecs` is (m * group) x 3 and row r is multiplied by matrix r / group.
Tensor batched_matvec3(const Tensor& mats, const Tensor& vecs, int group = 1);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

// ---------------------------------------------------------------------------
// Optimizer

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction at step t (1-based), applied in
/// place. Gradients are zeroed afterwards. Throws NumericalError naming the
/// first parameter whose gradient holds NaN or Inf.
void adam_step(const std::vector<Parameter*>& params, const AdamOptions& options, int t);

void zero_grad(const std::vector<Parameter*>& params);

}  // namespace snk::ad
