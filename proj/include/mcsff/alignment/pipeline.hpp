#pragma once

// One experiment end to end: split seeds, train the consistency network,
// build the entity / visual / attribute matrices over the test split, fuse
// and rank.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcsff/alignment/training.hpp"
#include "mcsff/kg/seeds.hpp"
#include "mcsff/specificity/similarity.hpp"

namespace mcsff::align {

struct ExperimentData {
  kg::KnowledgeGraph source;
  kg::KnowledgeGraph target;
  std::vector<kg::SeedAlignment> seeds;
  std::optional<cmci::NameTable> names;
};

struct ExperimentConfig {
  cmci::ModelConfig model;
  TrainConfig train;
  specificity::AttributeSimParams attribute;
  bool visual_normalize = true;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Full n_s x n_t single-modality matrices.
struct SpecificMatrices {
  num::Matrix visual;
  num::Matrix attribute;
};

SpecificMatrices specific_matrices(const ExperimentData& data, const ExperimentConfig& config);

// Lambdas actually applied once the ablation flags are taken into account.
FusionWeights effective_weights(const TrainConfig& config);

// S^E over the given rows and columns, averaged over eval_samples passes.
num::Matrix entity_matrix(const num::ParameterSet& params, const cmci::PairInputs& inputs,
                          const cmci::ModelConfig& model, const std::vector<std::size_t>& rows,
                          const std::vector<std::size_t>& cols, std::size_t eval_samples);

// Fused matrix over rows x cols. params may be null when CMCI is disabled.
num::Matrix fused_matrix(const num::ParameterSet* params, const cmci::PairInputs& inputs,
                         const SpecificMatrices& specific, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& cols, const ExperimentConfig& config);

struct ExperimentResult {
  kg::SeedSplit split;
  std::optional<TrainResult> trained;
  num::Matrix fused;  // test sources x test targets, truth on the diagonal
  AlignmentMetrics metrics;
};

kg::SeedSplit split_for(const ExperimentData& data, const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentData& data, const ExperimentConfig& config);

// Evaluation with given parameters (e.g. from a checkpoint).
ExperimentResult evaluate_experiment(const ExperimentData& data, const ExperimentConfig& config,
                                     const num::ParameterSet* params);

struct AblationRow {
  std::string variant;
  AlignmentMetrics metrics;
};

// full, w/o Attr, w/o Vis, w/o CMCI, w/o SM under one shared rng_seed. The
// incoming ablation flags are ignored.
std::vector<AblationRow> run_ablation(const ExperimentData& data, const ExperimentConfig& config);

void write_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace mcsff::align
