#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mcsff/numerics/autodiff.hpp"

namespace mcsff::num {

// Named trainable tensors, iterated in name order.
class ParameterSet {
 public:
  void set(const std::string& name, Matrix value);
  const Matrix& get(const std::string& name) const;
  Matrix& get(const std::string& name);
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;
  const std::map<std::string, Matrix>& items() const noexcept { return values_; }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::map<std::string, Matrix> values_;
};

// Parameters placed on a tape as leaves.
class BoundParameters {
 public:
  BoundParameters(ad::Tape& tape, const ParameterSet& params);
  // Pairs existing leaves with names, e.g. inside a finite-difference program.
  BoundParameters(std::span<const std::string> names, std::span<const ad::Var> vars);

  ad::Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  const std::map<std::string, ad::Var>& items() const noexcept { return vars_; }

 private:
  std::map<std::string, ad::Var> vars_;
};

// p <- p - lr * grad for every bound parameter. Call after Tape::backward.
void sgd_step(ParameterSet& params, const BoundParameters& bound, double learning_rate);

double l2_norm(const Matrix& m);

}  // namespace mcsff::num
