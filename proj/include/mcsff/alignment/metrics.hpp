#pragma once

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

#include "mcsff/numerics/matrix.hpp"

namespace mcsff::align {

struct AlignmentMetrics {
  double hits1 = 0.0;
  double hits5 = 0.0;
  double hits10 = 0.0;
  double mr = 0.0;
  double mrr = 0.0;

  friend bool operator==(const AlignmentMetrics&, const AlignmentMetrics&) = default;
};

// rank_i = 1 + #{j : S(i, j) > S(i, i)}. S must be square, truth on the diagonal.
std::vector<std::size_t> diagonal_ranks(const num::Matrix& s);
AlignmentMetrics metrics_from_ranks(const std::vector<std::size_t>& ranks);
AlignmentMetrics evaluate(const num::Matrix& s);

// Top k columns of one row by descending score, ties by ascending column.
std::vector<std::pair<std::size_t, double>> align_topk(const num::Matrix& s, std::size_t row, std::size_t k);

// hits1=0.500000 style, one metric per line.
void write_metrics_report(std::ostream& out, const AlignmentMetrics& m);

}  // namespace mcsff::align
