#include "mcsff/alignment/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>

#include "mcsff/error.hpp"

namespace mcsff::align {

std::vector<std::size_t> diagonal_ranks(const num::Matrix& s) {
  if (s.rows() != s.cols()) throw ShapeError("evaluate: identity pairing needs a square matrix, got " + num::shape_string(s));
  std::vector<std::size_t> ranks(s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double truth = s(i, i);
    std::size_t above = 0;
    for (double x : s.row(i)) above += x > truth ? 1 : 0;
    ranks[i] = 1 + above;
  }
  return ranks;
}

AlignmentMetrics metrics_from_ranks(const std::vector<std::size_t>& ranks) {
  AlignmentMetrics m;
  if (ranks.empty()) return m;
  for (std::size_t r : ranks) {
    m.hits1 += r <= 1 ? 1.0 : 0.0;
    m.hits5 += r <= 5 ? 1.0 : 0.0;
    m.hits10 += r <= 10 ? 1.0 : 0.0;
    m.mr += static_cast<double>(r);
    m.mrr += 1.0 / static_cast<double>(r);
  }
  const double n = static_cast<double>(ranks.size());
  m.hits1 /= n;
  m.hits5 /= n;
  m.hits10 /= n;
  m.mr /= n;
  m.mrr /= n;
  return m;
}

AlignmentMetrics evaluate(const num::Matrix& s) { return metrics_from_ranks(diagonal_ranks(s)); }

std::vector<std::pair<std::size_t, double>> align_topk(const num::Matrix& s, std::size_t row, std::size_t k) {
  if (row >= s.rows()) throw ConfigError("align_topk: row " + std::to_string(row) + " out of range");
  if (k < 1 || k > s.cols()) {
    throw ConfigError("align_topk: k = " + std::to_string(k) + " outside [1, " + std::to_string(s.cols()) + "]");
  }
  std::vector<std::size_t> cols(s.cols());
  std::iota(cols.begin(), cols.end(), 0);
  auto scores = s.row(row);
  std::partial_sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(k), cols.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(cols[i], scores[cols[i]]);
  return out;
}

void write_metrics_report(std::ostream& out, const AlignmentMetrics& m) {
  char buf[64];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.6f\n", key, v);
    out << buf;
  };
  line("hits1", m.hits1);
  line("hits5", m.hits5);
  line("hits10", m.hits10);
  line("mr", m.mr);
  line("mrr", m.mrr);
}

}  // namespace mcsff::align
