#include "mcsff/alignment/training.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "mcsff/error.hpp"

namespace mcsff::align {

void check_config(const TrainConfig& c) {
  if (c.epochs == 0) throw ConfigError("epochs must be positive");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) throw ConfigError("learning rate must be positive");
  if (!(c.margin > 0.0)) throw ConfigError("margin must be positive");
  if (c.negatives == 0) throw ConfigError("negatives per seed must be at least 1");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (c.eval_samples == 0) throw ConfigError("eval_samples must be at least 1");
  const auto& w = c.fusion;
  if (!(w.entity >= 0.0 && w.visual >= 0.0 && w.attribute >= 0.0)) throw ConfigError("fusion weights must be non-negative");
  if (w.entity + w.visual + w.attribute == 0.0) throw ConfigError("fusion weights are all zero");
}

IndexPairs seed_indices(std::span<const kg::SeedAlignment> seeds) {
  IndexPairs out;
  out.reserve(seeds.size());
  for (const auto& s : seeds) out.emplace_back(s.source.index, s.target.index);
  return out;
}

std::vector<std::vector<std::size_t>> sample_negatives(const IndexPairs& seeds, std::size_t k, std::uint64_t rng_seed,
                                                       std::size_t n_t) {
  if (n_t <= 1) throw ConfigError("sample_negatives: need at least 2 targets, got " + std::to_string(n_t));
  if (k == 0) throw ConfigError("sample_negatives: k must be at least 1");
  std::mt19937_64 rng(rng_seed);
  std::uniform_int_distribution<std::size_t> draw(0, n_t - 2);
  std::vector<std::vector<std::size_t>> out(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::size_t truth = seeds[i].second;
    if (truth >= n_t) throw ValidationError("sample_negatives: target " + std::to_string(truth) + " out of range");
    out[i].reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t x = draw(rng);
      out[i].push_back(x >= truth ? x + 1 : x);
    }
  }
  return out;
}

ad::Var margin_loss(ad::Var fused_s, ad::Var fused_t, const IndexPairs& seeds,
                    const std::vector<std::vector<std::size_t>>& negatives, double margin) {
  if (seeds.empty()) throw ConfigError("margin_loss: no seeds");
  if (negatives.size() != seeds.size()) throw ShapeError("margin_loss: negatives do not match seeds");
  std::vector<std::size_t> src, pos, neg;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t t : negatives[i]) {
      src.push_back(seeds[i].first);
      pos.push_back(seeds[i].second);
      neg.push_back(t);
    }
  }
  if (src.empty()) throw ConfigError("margin_loss: no negatives");
  ad::Var us = ad::l2_normalize_rows(fused_s);
  ad::Var ut = ad::l2_normalize_rows(fused_t);
  ad::Var anchor = ad::gather_rows(us, src);
  ad::Var sim_pos = ad::row_dot(anchor, ad::gather_rows(ut, pos));
  ad::Var sim_neg = ad::row_dot(anchor, ad::gather_rows(ut, std::move(neg)));
  ad::Var gap = ad::add(fused_s.tape().constant(num::Matrix(src.size(), 1, margin)), ad::sub(sim_neg, sim_pos));
  return ad::mean(ad::relu(gap));
}

namespace {

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string norms_summary(const num::ParameterSet& params) {
  std::string out;
  char buf[64];
  for (const auto& [name, m] : params.items()) {
    std::snprintf(buf, sizeof buf, "%.6g", num::l2_norm(m));
    out += "\n  |" + name + "| = " + buf;
  }
  return out;
}

}  // namespace

TrainResult train(const cmci::PairInputs& inputs, const IndexPairs& train_seeds, const cmci::ModelConfig& model,
                  const TrainConfig& config, const Evaluator& evaluate_fn) {
  check_config(config);
  if (train_seeds.empty()) throw ConfigError("train: no training seeds");
  TrainResult result{cmci::init_parameters(inputs, model, config.rng_seed), {}};
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    try {
      auto negatives = sample_negatives(train_seeds, config.negatives, epoch_seed(config.rng_seed, epoch),
                                        inputs.target.entity_count);
      ad::Tape tape;
      num::BoundParameters bound(tape, result.params);
      auto out = cmci::forward(bound, inputs, model);
      ad::Var loss = margin_loss(out.source.fused.values, out.target.fused.values, train_seeds, negatives, config.margin);
      result.history.loss.push_back(loss.value()(0, 0));
      tape.backward(loss);
      num::sgd_step(result.params, bound, config.learning_rate);
      for (const auto& [name, m] : result.params.items()) num::require_finite(m, name.c_str());
    } catch (const NumericError& e) {
      throw NumericError("training aborted at epoch " + std::to_string(epoch) + ": " + e.what() +
                         "\nparameter norms:" + norms_summary(result.params));
    }
    if (evaluate_fn && config.eval_every > 0 && (epoch + 1) % config.eval_every == 0) {
      result.history.evaluations.emplace_back(epoch + 1, evaluate_fn(result.params));
    }
  }
  return result;
}

}  // namespace mcsff::align
