#pragma once

// Per-modality entity similarity: attribute matrix from name embeddings and
// value proximity, visual matrix from the best-matching image pair.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcsff/kg/types.hpp"
#include "mcsff/numerics/matrix.hpp"

namespace mcsff::specificity {

enum class Modality { attribute, visual, entity, fused };

std::string_view to_string(Modality m);

struct SimilarityMatrix {
  Modality modality = Modality::fused;
  num::Matrix values;
};

// Entity-by-instance membership. Column u is the u-th kept attribute
// instance; rows follow the entity list the incidence was built for.
struct AttributeIncidence {
  num::Matrix membership;  // rows x instances, one 1 per column
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<std::size_t> rows;  // row of each column

  std::size_t entity_count() const { return membership.rows(); }
  std::size_t instance_count() const { return names.size(); }
};

// Rows are entity_rows[0..]; instances of other entities are dropped.
AttributeIncidence build_incidence(std::span<const kg::AttributeInstance> instances,
                                   std::span<const std::size_t> entity_rows);
// Rows are entity indices 0..entity_count-1.
AttributeIncidence build_incidence(std::span<const kg::AttributeInstance> instances, std::size_t entity_count);

// Character 3-gram hashing of "^token$" into d buckets (FNV-1a), counts
// L2-normalized per row. Identical tokens give identical rows.
num::Matrix hashed_trigram_embedding(std::span<const std::string> names, std::size_t d_name);

// Returns `provided` unchanged when given (its row count must match),
// otherwise the hashed trigram fallback.
num::Matrix embed_attribute_names(std::span<const std::string> names, const std::optional<num::Matrix>& provided,
                                  std::size_t d_name);

// One row per name, looked up in a name-embedding table. Unknown names raise
// ValidationError.
num::Matrix lookup_name_embeddings(std::span<const std::string> names,
                                   const std::map<std::string, std::vector<double>>& table);

struct AttributeSimParams {
  double weight_name = 1.0;
  double weight_value = 1.0;
  double epsilon = 1e-6;
};

// P(u, v) = 1 / (|vs[u] - vt[v]| + eps); bounded by 1/eps.
num::Matrix value_proximity(std::span<const double> values_s, std::span<const double> values_t, double epsilon);

// S = A_s * M * A_t^T with M = tanh(w_K * K_s K_t^T) (.) (w_V * P).
SimilarityMatrix attribute_similarity(const AttributeIncidence& inc_s, const AttributeIncidence& inc_t,
                                      const num::Matrix& names_s, const num::Matrix& names_t,
                                      const AttributeSimParams& params = {});

// S(i, j) = max over image pairs of <u_p, w_q>; 0 when either set is empty.
// With normalize, vectors are unit-normalized first.
SimilarityMatrix visual_similarity(std::span<const kg::VisualEmbeddingSet> sets_s,
                                   std::span<const kg::VisualEmbeddingSet> sets_t, bool normalize = true);

}  // namespace mcsff::specificity
