#include "mcsff/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mcsff/error.hpp"

namespace mcsff::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  num::require_finite(value, "constant");
  Node node;
  node.op = "constant";
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::parameter(Matrix value) {
  num::require_finite(value, "parameter");
  Node node;
  node.op = "parameter";
  node.value = std::move(value);
  node.requires_grad = true;
  return push(std::move(node));
}

Var Tape::record(std::string_view op, Matrix value, std::vector<std::size_t> parents, Backward backward) {
  num::require_finite(value, std::string(op).c_str());
  Node node;
  node.op = std::string(op);
  node.value = std::move(value);
  for (std::size_t p : parents) node.requires_grad = node.requires_grad || nodes_.at(p).requires_grad;
  node.parents = std::move(parents);
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

const Matrix& Tape::grad(std::size_t id) const {
  if (!has_gradients_) throw std::logic_error("gradients requested before backward()");
  return nodes_[id].grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::invalid_argument("backward: loss belongs to another tape");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + num::shape_string(lv));
  }
  for (auto& node : nodes_) {
    node.grad = node.requires_grad ? Matrix(node.value.rows(), node.value.cols()) : Matrix();
  }
  has_gradients_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad(0, 0) = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.backward) node.backward(*this, id);
  }
}

namespace {

void accumulate(Tape& t, std::size_t id, const Matrix& delta) {
  if (!t.requires_grad(id)) return;
  auto dst = t.grad_slot(id).data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("matmul", num::matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) accumulate(t, ia, num::matmul_nt(g, t.value(ib)));
    if (t.requires_grad(ib)) accumulate(t, ib, num::matmul(num::transpose(t.value(ia)), g));
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("add", num::add(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    accumulate(t, ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("sub", num::sub(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, t.grad(self));
    accumulate(t, ib, num::scalar_mul(-1.0, t.grad(self)));
  });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b, "hadamard");
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("hadamard", num::hadamard(a.value(), b.value()), {ia, ib},
                         [ia, ib](Tape& t, std::size_t self) {
                           if (t.requires_grad(ia)) accumulate(t, ia, num::hadamard(t.grad(self), t.value(ib)));
                           if (t.requires_grad(ib)) accumulate(t, ib, num::hadamard(t.grad(self), t.value(ia)));
                         });
}

Var scalar_mul(double c, Var a) {
  const std::size_t ia = a.id();
  return a.tape().record("scalar_mul", num::scalar_mul(c, a.value()), {ia}, [ia, c](Tape& t, std::size_t self) {
    accumulate(t, ia, num::scalar_mul(c, t.grad(self)));
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record("transpose", num::transpose(a.value()), {ia}, [ia](Tape& t, std::size_t self) {
    accumulate(t, ia, num::transpose(t.grad(self)));
  });
}

Var add_row(Var x, Var b) {
  require_same_tape(x, b, "add_row");
  const Matrix& xv = x.value();
  const Matrix& bv = b.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_row: cannot broadcast " + num::shape_string(bv) + " over " + num::shape_string(xv));
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
  }
  const std::size_t ix = x.id(), ib = b.id();
  return x.tape().record("add_row", std::move(out), {ix, ib}, [ix, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, ix, g);
    if (t.requires_grad(ib)) {
      Matrix& gb = t.grad_slot(ib);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
    }
  });
}

Var map_sigma(Var a, Activation kind) {
  const std::size_t ia = a.id();
  return a.tape().record(std::string("sigma:").append(num::to_string(kind)), num::map_sigma(a.value(), kind), {ia},
                         [ia, kind](Tape& t, std::size_t self) {
                           const Matrix& x = t.value(ia);
                           const Matrix& g = t.grad(self);
                           Matrix& gx = t.grad_slot(ia);
                           for (std::size_t i = 0; i < x.size(); ++i)
                             gx.data()[i] += g.data()[i] * num::activate_derivative(x.data()[i], kind);
                         });
}

Var map_tanh(Var a) { return map_sigma(a, Activation::tanh); }

Var relu(Var a) { return map_sigma(a, Activation::relu); }

Var leaky_relu(Var a, double slope) {
  const std::size_t ia = a.id();
  return a.tape().record("leaky_relu", num::leaky_relu(a.value(), slope), {ia}, [ia, slope](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ia);
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_slot(ia);
    for (std::size_t i = 0; i < x.size(); ++i) gx.data()[i] += g.data()[i] * (x.data()[i] > 0.0 ? 1.0 : slope);
  });
}

Var sum(Var a) {
  const std::size_t ia = a.id();
  return a.tape().record("sum", Matrix(1, 1, num::sum(a.value())), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad_slot(ia).data()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty matrix");
  return scalar_mul(1.0 / static_cast<double>(n), sum(a));
}

Var gather_rows(Var x, std::vector<std::size_t> rows) {
  Matrix out = x.value().select_rows(rows);
  const std::size_t ix = x.id();
  auto idx = std::make_shared<const std::vector<std::size_t>>(std::move(rows));
  return x.tape().record("gather_rows", std::move(out), {ix}, [ix, idx](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_slot(ix);
    for (std::size_t i = 0; i < idx->size(); ++i) {
      auto src = g.row(i);
      auto dst = gx.row((*idx)[i]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var segment_sum(Var x, const SegmentIndex& segments) {
  const Matrix& xv = x.value();
  if (xv.rows() != segments.item_count()) {
    throw ShapeError("segment_sum: " + std::to_string(xv.rows()) + " rows for " +
                     std::to_string(segments.item_count()) + " segment items");
  }
  Matrix out(segments.segment_count(), xv.cols());
  for (std::size_t s = 0; s < segments.segment_count(); ++s) {
    auto dst = out.row(s);
    for (std::size_t e = segments.begin(s); e < segments.end(s); ++e) {
      auto src = xv.row(e);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  }
  const std::size_t ix = x.id();
  auto seg = std::make_shared<const SegmentIndex>(segments);
  return x.tape().record("segment_sum", std::move(out), {ix}, [ix, seg](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_slot(ix);
    for (std::size_t s = 0; s < seg->segment_count(); ++s) {
      auto src = g.row(s);
      for (std::size_t e = seg->begin(s); e < seg->end(s); ++e) {
        auto dst = gx.row(e);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
    }
  });
}

Var scale_rows(Var x, Var w) {
  require_same_tape(x, w, "scale_rows");
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  if (wv.cols() != 1 || wv.rows() != xv.rows()) {
    throw ShapeError("scale_rows: weights " + num::shape_string(wv) + " for " + num::shape_string(xv));
  }
  Matrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= wv(r, 0);
  const std::size_t ix = x.id(), iw = w.id();
  return x.tape().record("scale_rows", std::move(out), {ix, iw}, [ix, iw](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& xv = t.value(ix);
    const Matrix& wv = t.value(iw);
    if (t.requires_grad(ix)) {
      Matrix& gx = t.grad_slot(ix);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) += g(r, c) * wv(r, 0);
    }
    if (t.requires_grad(iw)) {
      Matrix& gw = t.grad_slot(iw);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c) * xv(r, c);
        gw(r, 0) += acc;
      }
    }
  });
}

Var row_dot(Var a, Var b) {
  require_same_tape(a, b, "row_dot");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (!num::same_shape(av, bv)) {
    throw ShapeError("row_dot: shape mismatch " + num::shape_string(av) + " vs " + num::shape_string(bv));
  }
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < av.cols(); ++c) acc += av(r, c) * bv(r, c);
    out(r, 0) = acc;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record("row_dot", std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& av = t.value(ia);
    const Matrix& bv = t.value(ib);
    const bool need_a = t.requires_grad(ia);
    const bool need_b = t.requires_grad(ib);
    for (std::size_t r = 0; r < av.rows(); ++r) {
      const double gr = g(r, 0);
      for (std::size_t c = 0; c < av.cols(); ++c) {
        if (need_a) t.grad_slot(ia)(r, c) += gr * bv(r, c);
        if (need_b) t.grad_slot(ib)(r, c) += gr * av(r, c);
      }
    }
  });
}

Var segment_softmax(Var scores, const SegmentIndex& segments) {
  const Matrix& sv = scores.value();
  if (sv.cols() != 1) throw ShapeError("segment_softmax: scores must be a column, got " + num::shape_string(sv));
  Matrix out = Matrix::column(num::segment_softmax(sv.data(), segments));
  const std::size_t is = scores.id();
  auto seg = std::make_shared<const SegmentIndex>(segments);
  return scores.tape().record("segment_softmax", std::move(out), {is}, [is, seg](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& y = t.value(self);
    Matrix& gs = t.grad_slot(is);
    for (std::size_t s = 0; s < seg->segment_count(); ++s) {
      double dot = 0.0;
      for (std::size_t e = seg->begin(s); e < seg->end(s); ++e) dot += y(e, 0) * g(e, 0);
      for (std::size_t e = seg->begin(s); e < seg->end(s); ++e) gs(e, 0) += y(e, 0) * (g(e, 0) - dot);
    }
  });
}

Var l2_normalize_rows(Var x, double eps) {
  const Matrix& xv = x.value();
  Matrix out = num::l2_normalize_rows(xv, eps);
  std::vector<double> norms(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double acc = 0.0;
    for (double v : xv.row(r)) acc += v * v;
    norms[r] = std::sqrt(acc);
  }
  const std::size_t ix = x.id();
  return x.tape().record("l2_normalize_rows", std::move(out), {ix},
                         [ix, eps, norms = std::move(norms)](Tape& t, std::size_t self) {
                           const Matrix& g = t.grad(self);
                           const Matrix& y = t.value(self);
                           Matrix& gx = t.grad_slot(ix);
                           for (std::size_t r = 0; r < y.rows(); ++r) {
                             if (norms[r] < eps) continue;
                             double dot = 0.0;
                             for (std::size_t c = 0; c < y.cols(); ++c) dot += y(r, c) * g(r, c);
                             for (std::size_t c = 0; c < y.cols(); ++c)
                               gx(r, c) += (g(r, c) - y(r, c) * dot) / norms[r];
                           }
                         });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t width = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat_cols");
    if (p.rows() != rows) {
      throw ShapeError("concat_cols: row-count mismatch " + std::to_string(rows) + " vs " + std::to_string(p.rows()));
    }
    ids.push_back(p.id());
    offsets.push_back(width);
    width += p.cols();
  }
  Matrix out(rows, width);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offsets[k] + c) = pv(r, c);
  }
  std::vector<std::size_t> parents = ids;
  return parts.front().tape().record(
      "concat_cols", std::move(out), std::move(parents),
      [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Matrix& gp = t.grad_slot(ids[k]);
          for (std::size_t r = 0; r < gp.rows(); ++r)
            for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, offsets[k] + c);
        }
      });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  const Matrix& xv = x.value();
  if (begin > end || end > xv.cols()) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of " +
                     num::shape_string(xv));
  }
  Matrix out(xv.rows(), end - begin);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = xv(r, c);
  const std::size_t ix = x.id();
  return x.tape().record("slice_cols", std::move(out), {ix}, [ix, begin](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_slot(ix);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gx(r, begin + c) += g(r, c);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t height = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != cols) {
      throw ShapeError("concat_rows: column-count mismatch " + std::to_string(cols) + " vs " + std::to_string(p.cols()));
    }
    ids.push_back(p.id());
    offsets.push_back(height);
    height += p.rows();
  }
  Matrix out(height, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Matrix& pv = parts[k].value();
    std::copy(pv.data().begin(), pv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(offsets[k] * cols));
  }
  std::vector<std::size_t> parents = ids;
  return parts.front().tape().record(
      "concat_rows", std::move(out), std::move(parents),
      [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Matrix& gp = t.grad_slot(ids[k]);
          for (std::size_t r = 0; r < gp.rows(); ++r)
            for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(offsets[k] + r, c);
        }
      });
}

}  // namespace mcsff::ad
