#include <cmath>
#include <stdexcept>
#include <string>

#include "snk/autodiff.hpp"

namespace snk::ad {
namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                                shape_str(b));
  }
}

}  // namespace

Segments Segments::from_lists(const std::vector<std::vector<int>>& lists) {
  Segments s;
  s.offsets.reserve(lists.size() + 1);
  for (const auto& l : lists) {
    s.indices.insert(s.indices.end(), l.begin(), l.end());
    s.offsets.push_back(static_cast<int>(s.indices.size()));
  }
  return s;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  Matrix out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                           if (tape.needs_grad(a)) tape.accumulate(a, g * b.value().transpose());
                           if (tape.needs_grad(b)) tape.accumulate(b, a.value().transpose() * g);
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  return a.tape().record(a.value() + b.value(), {a, b},
                         [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, g);
                           tape.accumulate(b, g);
                         });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  return a.tape().record(a.value() - b.value(), {a, b},
                         [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, g);
                           if (tape.needs_grad(b)) tape.accumulate(b, -g);
                         });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b},
                         [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                           if (tape.needs_grad(a)) tape.accumulate(a, g.cwiseProduct(b.value()));
                           if (tape.needs_grad(b)) tape.accumulate(b, g.cwiseProduct(a.value()));
                         });
}

Tensor scale(const Tensor& a, double s) {
  return a.tape().record(a.value() * s, {a}, [a, s](Tape& tape, const Matrix& g, const Matrix&) {
    tape.accumulate(a, g * s);
  });
}

Tensor transpose(const Tensor& a) {
  return a.tape().record(a.value().transpose(), {a},
                         [a](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, g.transpose());
                         });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return parts.front().tape().record(std::move(out), parts,
                                     [parts](Tape& tape, const Matrix& g, const Matrix&) {
                                       Index c = 0;
                                       for (const auto& p : parts) {
                                         if (tape.needs_grad(p)) {
                                           tape.accumulate(p, g.middleCols(c, p.cols()));
                                         }
                                         c += p.cols();
                                       }
                                     });
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::invalid_argument("slice_cols: range out of bounds for " + shape_str(a));
  }
  return a.tape().record(a.value().middleCols(start, count), {a},
                         [a, start, count](Tape& tape, const Matrix& g, const Matrix&) {
                           Matrix full = Matrix::Zero(a.rows(), a.cols());
                           full.middleCols(start, count) = g;
                           tape.accumulate(a, full);
                         });
}

Tensor add_row(const Tensor& a, const Tensor& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) {
    throw std::invalid_argument("add_row: " + shape_str(a) + " + " + shape_str(b));
  }
  Matrix out = a.value().rowwise() + b.value().row(0);
  return a.tape().record(std::move(out), {a, b},
                         [a, b](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, g);
                           if (tape.needs_grad(b)) tape.accumulate(b, g.colwise().sum());
                         });
}

Tensor repeat_rows(const Tensor& a, Index n) {
  if (a.rows() != 1) throw std::invalid_argument("repeat_rows: expects a single row");
  Matrix out = a.value().replicate(n, 1);
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Matrix& g, const Matrix&) {
    tape.accumulate(a, g.colwise().sum());
  });
}

Tensor softmax_rows(const Tensor& a, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax_rows: temperature must be > 0");
  Matrix out = a.value() / temperature;
  for (Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return a.tape().record(std::move(out), {a},
                         [a, temperature](Tape& tape, const Matrix& g, const Matrix& y) {
                           const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
                           Matrix da = y.cwiseProduct(g.colwise() - dots) / temperature;
                           tape.accumulate(a, da);
                         });
}

Tensor relu(const Tensor& a) {
  return a.tape().record(a.value().cwiseMax(0.0), {a},
                         [a](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(
                               a, (a.value().array() > 0.0).select(g, Matrix::Zero(g.rows(), g.cols())));
                         });
}

Tensor exp(const Tensor& a) {
  return a.tape().record(a.value().array().exp().matrix(), {a},
                         [a](Tape& tape, const Matrix& g, const Matrix& y) {
                           tape.accumulate(a, g.cwiseProduct(y));
                         });
}

Tensor log(const Tensor& a) {
  return a.tape().record(a.value().array().log().matrix(), {a},
                         [a](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, g.cwiseQuotient(a.value()));
                         });
}

Tensor softplus(const Tensor& a) {
  Matrix out = a.value().unaryExpr(
      [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); });
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Matrix& g, const Matrix&) {
    const Matrix sig = a.value().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    tape.accumulate(a, g.cwiseProduct(sig));
  });
}

Tensor sum(const Tensor& a) {
  return a.tape().record(Matrix::Constant(1, 1, a.value().sum()), {a},
                         [a](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
                         });
}

Tensor mean(const Tensor& a) {
  const auto count = static_cast<double>(a.value().size());
  return a.tape().record(Matrix::Constant(1, 1, a.value().sum() / count), {a},
                         [a, count](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a,
                                           Matrix::Constant(a.rows(), a.cols(), g(0, 0) / count));
                         });
}

Tensor max(const Tensor& a, Axis axis) {
  const Matrix& v = a.value();
  if (v.size() == 0) throw std::invalid_argument("max over an empty tensor");
  const bool over_rows = axis == Axis::Rows;
  const Index outer = over_rows ? v.cols() : v.rows();
  const Index inner = over_rows ? v.rows() : v.cols();
  std::vector<Index> arg(static_cast<std::size_t>(outer));
  Matrix out = over_rows ? Matrix(1, outer) : Matrix(outer, 1);
  for (Index o = 0; o < outer; ++o) {
    Index best = 0;
    for (Index i = 1; i < inner; ++i) {
      const double cand = over_rows ? v(i, o) : v(o, i);
      const double cur = over_rows ? v(best, o) : v(o, best);
      if (cand > cur) best = i;
    }
    arg[static_cast<std::size_t>(o)] = best;
    out(over_rows ? 0 : o, over_rows ? o : 0) = over_rows ? v(best, o) : v(o, best);
  }
  return a.tape().record(std::move(out), {a},
                         [a, arg = std::move(arg), over_rows](Tape& tape, const Matrix& g,
                                                              const Matrix&) {
                           Matrix da = Matrix::Zero(a.rows(), a.cols());
                           for (std::size_t o = 0; o < arg.size(); ++o) {
                             const auto oo = static_cast<Index>(o);
                             if (over_rows) {
                               da(arg[o], oo) = g(0, oo);
                             } else {
                               da(oo, arg[o]) = g(oo, 0);
                             }
                           }
                           tape.accumulate(a, da);
                         });
}

Tensor frobenius_sq(const Tensor& a) {
  return a.tape().record(Matrix::Constant(1, 1, a.value().squaredNorm()), {a},
                         [a](Tape& tape, const Matrix& g, const Matrix&) {
                           tape.accumulate(a, (2.0 * g(0, 0)) * a.value());
                         });
}

Tensor gather_rows(const Tensor& a, std::vector<int> rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(rows[i]) +
                                  " out of range for " + shape_str(a));
    }
    out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
  }
  return a.tape().record(std::move(out), {a},
                         [a, rows = std::move(rows)](Tape& tape, const Matrix& g, const Matrix&) {
                           Matrix da = Matrix::Zero(a.rows(), a.cols());
                           for (std::size_t i = 0; i < rows.size(); ++i) {
                             da.row(rows[i]) += g.row(static_cast<Index>(i));
                           }
                           tape.accumulate(a, da);
                         });
}

Tensor segment_mean(const Tensor& a, std::shared_ptr<const Segments> segments) {
  const Segments& s = *segments;
  Matrix out = Matrix::Zero(s.count(), a.cols());
  for (int seg = 0; seg < s.count(); ++seg) {
    const int begin = s.offsets[seg];
    const int end = s.offsets[seg + 1];
    if (end == begin) continue;
    for (int p = begin; p < end; ++p) {
      const int r = s.indices[p];
      if (r < 0 || r >= a.rows()) throw std::invalid_argument("segment_mean: index out of range");
      out.row(seg) += a.value().row(r);
    }
    out.row(seg) /= static_cast<double>(end - begin);
  }
  return a.tape().record(std::move(out), {a},
                         [a, segments](Tape& tape, const Matrix& g, const Matrix&) {
                           const Segments& s = *segments;
                           Matrix da = Matrix::Zero(a.rows(), a.cols());
                           for (int seg = 0; seg < s.count(); ++seg) {
                             const int begin = s.offsets[seg];
                             const int end = s.offsets[seg + 1];
                             for (int p = begin; p < end; ++p) {
                               da.row(s.indices[p]) += g.row(seg) / static_cast<double>(end - begin);
                             }
                           }
                           tape.accumulate(a, da);
                         });
}

Tensor sparse_matmul(std::shared_ptr<const SparseMatrix> s, const Tensor& a) {
  if (s->cols() != a.rows()) {
    throw std::invalid_argument("sparse_matmul: " + std::to_string(s->rows()) + "x" +
                                std::to_string(s->cols()) + " * " + shape_str(a));
  }
  Matrix out = (*s) * a.value();
  return a.tape().record(std::move(out), {a}, [a, s](Tape& tape, const Matrix& g, const Matrix&) {
    tape.accumulate(a, s->transpose() * g);
  });
}

Tensor batched_matvec3(const Tensor& mats, const Tensor& vecs, int group) {
  if (mats.cols() != 9 || vecs.cols() != 3 || group < 1 || vecs.rows() != mats.rows() * group) {
    throw std::invalid_argument("batched_matvec3: " + shape_str(mats) + " with " +
                                shape_str(vecs) + ", group " + std::to_string(group));
  }
  const Matrix& R = mats.value();
  const Matrix& X = vecs.value();
  Matrix out(X.rows(), 3);
  for (Index r = 0; r < X.rows(); ++r) {
    const Index m = r / group;
    for (int i = 0; i < 3; ++i) {
      out(r, i) = R(m, 3 * i) * X(r, 0) + R(m, 3 * i + 1) * X(r, 1) + R(m, 3 * i + 2) * X(r, 2);
    }
  }
  return mats.tape().record(
      std::move(out), {mats, vecs}, [mats, vecs, group](Tape& tape, const Matrix& g, const Matrix&) {
        const Matrix& R = mats.value();
        const Matrix& X = vecs.value();
        if (tape.needs_grad(mats)) {
          Matrix dR = Matrix::Zero(R.rows(), 9);
          for (Index r = 0; r < X.rows(); ++r) {
            const Index m = r / group;
            for (int i = 0; i < 3; ++i) {
              for (int j = 0; j < 3; ++j) dR(m, 3 * i + j) += g(r, i) * X(r, j);
            }
          }
          tape.accumulate(mats, dR);
        }
        if (tape.needs_grad(vecs)) {
          Matrix dX(X.rows(), 3);
          for (Index r = 0; r < X.rows(); ++r) {
            const Index m = r / group;
            for (int j = 0; j < 3; ++j) {
              dX(r, j) = R(m, j) * g(r, 0) + R(m, 3 + j) * g(r, 1) + R(m, 6 + j) * g(r, 2);
            }
          }
          tape.accumulate(vecs, dX);
        }
      });
}

}  // namespace snk::ad
