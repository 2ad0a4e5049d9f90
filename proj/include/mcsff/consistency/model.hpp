#pragma once

// The full consistency network over a graph pair: modality tables, imputation,
// projections, stacked reflection-attention layers and the fused entity
// matrix for each side. Parameters are shared across sides except the free
// entity embeddings.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcsff/consistency/layers.hpp"
#include "mcsff/kg/types.hpp"
#include "mcsff/numerics/parameters.hpp"

namespace mcsff::cmci {

struct ModelConfig {
  std::size_t dim = 64;
  std::size_t attention_dim = 32;
  std::size_t layers = 2;
  std::size_t name_dim = 64;
  std::size_t value_features = 16;
  double leaky_slope = num::kDefaultLeakySlope;
  Activation impute_sigma = Activation::relu;
  Activation init_sigma = Activation::tanh;
  Activation gat_sigma = Activation::relu;
  ImputeNorm impute_norm = ImputeNorm::in_degree;
  bool normalize_relations = true;
  bool dense_readout = false;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Channel : std::size_t { visual = 0, name = 1, value = 2, entity = 3 };
inline constexpr std::size_t kChannelCount = 4;
std::string_view to_string(Channel c);

// Precomputed, parameter-free data of one side.
struct SideInputs {
  std::size_t entity_count = 0;
  ModalityTable visual;
  ModalityTable name;
  ModalityTable value;
  std::vector<std::size_t> relation_map;  // local relation -> shared row
  ImputePlan visual_plan;
  ImputePlan name_plan;
  ImputePlan value_plan;
  EdgeList edges;
  RelationIncidence relation_incidence;
};

struct PairInputs {
  SideInputs source;
  SideInputs target;
  std::size_t relation_count = 0;  // shared relation rows, self relation excluded
  std::vector<std::string> relation_tokens;
};

using NameTable = std::map<std::string, std::vector<double>>;

// Relations are matched across sides by token. Attribute names go through
// the name table when given, otherwise through hashed trigrams. Values are
// standardized per name over both sides and expanded on a radial basis.
PairInputs prepare_inputs(const kg::KnowledgeGraph& source, const kg::KnowledgeGraph& target,
                          const ModelConfig& config, const std::optional<NameTable>& names = std::nullopt);

// Radial features of a standardized value: exp(-(z - c_k)^2 / (2 w^2)) for
// `count` centers evenly spaced on [-3, 3], w the center spacing.
std::vector<double> value_basis(double z, std::size_t count);

num::ParameterSet init_parameters(const PairInputs& inputs, const ModelConfig& config, std::uint64_t rng_seed);

struct SideOutput {
  FusedEntityMatrix fused;
  std::vector<ad::Var> attention;  // per channel and layer, channel-major
};

struct ForwardOutput {
  SideOutput source;
  SideOutput target;
};

ForwardOutput forward(const num::BoundParameters& params, const PairInputs& inputs, const ModelConfig& config);

// Convenience: fused matrices for both sides on a scratch tape.
std::pair<Matrix, Matrix> embed(const num::ParameterSet& params, const PairInputs& inputs, const ModelConfig& config);

}  // namespace mcsff::cmci
