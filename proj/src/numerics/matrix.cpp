#include "mcsff/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mcsff/error.hpp"

namespace mcsff::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return {r, c, std::move(data)};
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw ShapeError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                       " entries, expected " + std::to_string(cols));
    }
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return {values.size(), 1, std::vector<double>(values.begin(), values.end())};
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw ShapeError("row index " + std::to_string(rows[i]) + " out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(rows[i] * cols_), cols_,
                out.row(i).begin());
  }
  return out;
}

Matrix Matrix::select(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= rows_) throw ShapeError("row index " + std::to_string(rows[i]) + " out of range");
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j] >= cols_) throw ShapeError("column index " + std::to_string(cols[j]) + " out of range");
      out(i, j) = (*this)(rows[i], cols[j]);
    }
  }
  return out;
}

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool same_shape(const Matrix& a, const Matrix& b) noexcept {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

void require_finite(const Matrix& m, const char* where) {
  const auto d = m.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw NumericError(std::string("non-finite value in ") + where + " at (" +
                         std::to_string(i / std::max<std::size_t>(m.cols(), 1)) + ", " +
                         std::to_string(i % std::max<std::size_t>(m.cols(), 1)) + ")");
    }
  }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!same_shape(a, b)) throw ShapeError("max_abs_diff: " + shape_string(a) + " vs " + shape_string(b));
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) best = std::max(best, std::abs(a.data()[i] - b.data()[i]));
  return best;
}

void write_tsv(std::ostream& out, const Matrix& m) {
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out << '\t';
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace mcsff::num
