#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mcsff/numerics/matrix.hpp"

namespace mcsff::num {

enum class Activation { identity, relu, tanh, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation kind);

double activate(double x, Activation kind);
// Derivative expressed through the input x.
double activate_derivative(double x, Activation kind);

inline constexpr double kDefaultLeakySlope = 0.2;

// Contiguous slices of an item list, one per target row. offsets has
// segment_count() + 1 entries; segment i covers [offsets[i], offsets[i+1]).
class SegmentIndex {
 public:
  SegmentIndex() : offsets_{0} {}
  explicit SegmentIndex(std::vector<std::size_t> offsets);

  // keys must be sorted ascending and < segment_count.
  static SegmentIndex from_sorted_keys(std::span<const std::size_t> keys, std::size_t segment_count);

  std::size_t segment_count() const noexcept { return offsets_.size() - 1; }
  std::size_t item_count() const noexcept { return offsets_.back(); }
  std::size_t begin(std::size_t s) const { return offsets_[s]; }
  std::size_t end(std::size_t s) const { return offsets_[s + 1]; }
  std::size_t length(std::size_t s) const { return offsets_[s + 1] - offsets_[s]; }
  const std::vector<std::size_t>& offsets() const noexcept { return offsets_; }

 private:
  std::vector<std::size_t> offsets_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scalar_mul(double c, const Matrix& a);

Matrix map_tanh(const Matrix& a);
Matrix map_sigma(const Matrix& a, Activation kind);
Matrix leaky_relu(const Matrix& a, double slope = kDefaultLeakySlope);

// Per-segment softmax with max subtraction. Items of empty segments do not
// exist, so the output has one entry per input score.
std::vector<double> segment_softmax(std::span<const double> scores, const SegmentIndex& segments);

// Rows with norm below eps come back as zero rows.
Matrix l2_normalize_rows(const Matrix& a, double eps = 1e-12);

double sum(const Matrix& a);

}  // namespace mcsff::num
