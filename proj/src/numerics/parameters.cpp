#include "mcsff/numerics/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace mcsff::num {

void ParameterSet::set(const std::string& name, Matrix value) { values_[name] = std::move(value); }

const Matrix& ParameterSet::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

Matrix& ParameterSet::get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& [_, m] : values_) total += m.size();
  return total;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [name, _] : values_) out.push_back(name);
  return out;
}

BoundParameters::BoundParameters(ad::Tape& tape, const ParameterSet& params) {
  for (const auto& [name, value] : params.items()) vars_.emplace(name, tape.parameter(value));
}

BoundParameters::BoundParameters(std::span<const std::string> names, std::span<const ad::Var> vars) {
  if (names.size() != vars.size()) throw std::invalid_argument("BoundParameters: name/var count mismatch");
  for (std::size_t i = 0; i < names.size(); ++i) vars_.emplace(names[i], vars[i]);
}

ad::Var BoundParameters::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::out_of_range("parameter '" + name + "' is not bound");
  return it->second;
}

void sgd_step(ParameterSet& params, const BoundParameters& bound, double learning_rate) {
  for (const auto& [name, var] : bound.items()) {
    Matrix& p = params.get(name);
    const Matrix& g = var.grad();
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] -= learning_rate * g.data()[i];
  }
}

double l2_norm(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data()) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace mcsff::num
