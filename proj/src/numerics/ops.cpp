#include "mcsff/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mcsff/error.hpp"

namespace mcsff::num {

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

double activate(double x, Activation kind) {
  switch (kind) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

double activate_derivative(double x, Activation kind) {
  switch (kind) {
    case Activation::identity: return 1.0;
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

SegmentIndex::SegmentIndex(std::vector<std::size_t> offsets) : offsets_(std::move(offsets)) {
  if (offsets_.empty() || offsets_.front() != 0) throw ShapeError("segment offsets must start at 0");
  if (!std::is_sorted(offsets_.begin(), offsets_.end())) throw ShapeError("segment offsets must be non-decreasing");
}

SegmentIndex SegmentIndex::from_sorted_keys(std::span<const std::size_t> keys, std::size_t segment_count) {
  std::vector<std::size_t> offsets(segment_count + 1, 0);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i] >= segment_count) throw ShapeError("segment key out of range");
    if (i > 0 && keys[i] < keys[i - 1]) throw ShapeError("segment keys must be sorted");
    ++offsets[keys[i] + 1];
  }
  for (std::size_t s = 0; s < segment_count; ++s) offsets[s + 1] += offsets[s];
  return SegmentIndex(std::move(offsets));
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!same_shape(a, b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Matrix out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_string(a) + " x " + shape_string(b));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: shape mismatch " + shape_string(a) + " x " + shape_string(b) + "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < arow.size(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix scalar_mul(double c, const Matrix& a) {
  return map(a, [c](double x) { return c * x; });
}

Matrix map_tanh(const Matrix& a) {
  return map(a, [](double x) { return std::tanh(x); });
}

Matrix map_sigma(const Matrix& a, Activation kind) {
  return map(a, [kind](double x) { return activate(x, kind); });
}

Matrix leaky_relu(const Matrix& a, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("leaky_relu slope must lie in (0, 1)");
  return map(a, [slope](double x) { return x > 0.0 ? x : slope * x; });
}

std::vector<double> segment_softmax(std::span<const double> scores, const SegmentIndex& segments) {
  if (scores.size() != segments.item_count()) {
    throw ShapeError("segment_softmax: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(segments.item_count()) + " segment items");
  }
  std::vector<double> out(scores.size());
  for (std::size_t s = 0; s < segments.segment_count(); ++s) {
    const std::size_t lo = segments.begin(s);
    const std::size_t hi = segments.end(s);
    if (lo == hi) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t e = lo; e < hi; ++e) top = std::max(top, scores[e]);
    double total = 0.0;
    for (std::size_t e = lo; e < hi; ++e) {
      out[e] = std::exp(scores[e] - top);
      total += out[e];
    }
    for (std::size_t e = lo; e < hi; ++e) out[e] /= total;
  }
  return out;
}

Matrix l2_normalize_rows(const Matrix& a, double eps) {
  if (!(eps > 0.0)) throw ConfigError("l2_normalize_rows: eps must be positive");
  Matrix out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto src = a.row(r);
    double norm = 0.0;
    for (double v : src) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < eps) continue;
    auto dst = out.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / norm;
  }
  return out;
}

double sum(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  return acc;
}

}  // namespace mcsff::num
