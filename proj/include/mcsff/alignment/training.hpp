#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mcsff/alignment/fusion.hpp"
#include "mcsff/alignment/metrics.hpp"
#include "mcsff/consistency/model.hpp"
#include "mcsff/kg/types.hpp"
#include "mcsff/numerics/parameters.hpp"

namespace mcsff::align {

struct AblationFlags {
  bool use_attr = true;
  bool use_vis = true;
  bool use_cmci = true;
  bool use_sm = true;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct TrainConfig {
  std::size_t epochs = 100;
  double learning_rate = 1.0;
  double margin = 0.5;
  std::size_t negatives = 5;
  std::uint64_t rng_seed = 1;
  double train_fraction = 0.3;
  std::size_t eval_every = 0;  // 0 disables periodic evaluation
  FusionWeights fusion;
  AblationFlags ablation;
  std::size_t eval_samples = 1;
  bool normalize_fusion = true;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws ConfigError on a non-positive margin, k, epoch count or rate, and
// on all-zero fusion weights.
void check_config(const TrainConfig& config);

// (source row, target row) pairs.
using IndexPairs = std::vector<std::pair<std::size_t, std::size_t>>;

IndexPairs seed_indices(std::span<const kg::SeedAlignment> seeds);

// k targets per seed, uniform over [0, n_t) without the true target.
std::vector<std::vector<std::size_t>> sample_negatives(const IndexPairs& seeds, std::size_t k, std::uint64_t rng_seed,
                                                       std::size_t n_t);

// Mean over seeds and negatives of max(0, margin - <s, t> + <s, t'>) on
// unit-normalized rows.
ad::Var margin_loss(ad::Var fused_s, ad::Var fused_t, const IndexPairs& seeds,
                    const std::vector<std::vector<std::size_t>>& negatives, double margin);

struct TrainingHistory {
  std::vector<double> loss;  // loss[e]: loss at epoch e before its update
  std::vector<std::pair<std::size_t, AlignmentMetrics>> evaluations;
};

struct TrainResult {
  num::ParameterSet params;
  TrainingHistory history;
};

using Evaluator = std::function<AlignmentMetrics(const num::ParameterSet&)>;

// Full-batch gradient descent on the margin loss. Negatives are redrawn each
// epoch from a stream keyed by (rng_seed, epoch). A non-finite value aborts
// with a NumericError naming the epoch and the parameter norms.
TrainResult train(const cmci::PairInputs& inputs, const IndexPairs& train_seeds, const cmci::ModelConfig& model,
                  const TrainConfig& config, const Evaluator& evaluate_fn = {});

}  // namespace mcsff::align
