#include "mcsff/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mcsff/error.hpp"

namespace mcsff::num {

namespace {

double evaluate(const ScalarProgram& program, const std::vector<Matrix>& params) {
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(tape.parameter(p));
  ad::Var out = program(tape, leaves);
  if (out.rows() != 1 || out.cols() != 1) throw ShapeError("finite_difference_check: program must return 1x1");
  return out.value()(0, 0);
}

}  // namespace

GradCheckResult finite_difference_check(const ScalarProgram& program, std::vector<Matrix> params, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_difference_check: h must be positive");

  std::vector<Matrix> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& p : params) leaves.push_back(tape.parameter(p));
    ad::Var out = program(tape, leaves);
    tape.backward(out);
    for (const auto& leaf : leaves) analytic.push_back(leaf.grad());
  }

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double& x = params[p].data()[i];
      const double saved = x;
      x = saved + h;
      const double up = evaluate(program, params);
      x = saved - h;
      const double down = evaluate(program, params);
      x = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double g = analytic[p].data()[i];
      const double denom = std::max({std::abs(g), std::abs(numeric), 1e-8});
      const double rel = std::abs(g - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = p;
        result.worst_coord = i;
        result.analytic = g;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace mcsff::num
