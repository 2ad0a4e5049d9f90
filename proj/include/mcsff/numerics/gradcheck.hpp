#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mcsff/numerics/autodiff.hpp"

namespace mcsff::num {

// Builds a scalar on the given tape from parameter leaves.
using ScalarProgram = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_coord = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Central differences (f(x+h) - f(x-h)) / 2h per coordinate, compared with
// Tape::backward. Relative error is |g - g_fd| / max(|g|, |g_fd|, 1e-8).
GradCheckResult finite_difference_check(const ScalarProgram& program, std::vector<Matrix> params,
                                        double h = 1e-5);

}  // namespace mcsff::num
