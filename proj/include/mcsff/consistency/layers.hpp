#pragma once

// Building blocks of the consistency network: modality aggregation,
// neighbour imputation, trainable projection, relation-reflection attention
// and concatenation fusion. Each differentiable block has a tape form; the
// plain-matrix overloads evaluate it on a scratch tape.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mcsff/kg/types.hpp"
#include "mcsff/numerics/autodiff.hpp"

namespace mcsff::cmci {

using num::Activation;
using num::Matrix;
using num::SegmentIndex;

// Entity-level embeddings of one modality. Rows whose mask is false hold
// zeros (or imputed values once imputation filled them and set the mask).
struct ModalityTable {
  Matrix values;
  std::vector<bool> present;

  std::size_t count() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

// Row i = sum_j w_ij x_ij / sum_j w_ij over entity i's items. Empty weights
// mean uniform. Entities without items get a zero row and a false mask.
ModalityTable aggregate_modality(std::span<const std::vector<std::vector<double>>> items, std::size_t dim,
                                 std::span<const std::vector<double>> weights = {});

// Undirected, deduplicated neighbour lists without self loops.
std::vector<std::vector<std::size_t>> undirected_neighbors(std::span<const kg::RelationTriple> triples,
                                                           std::size_t entity_count);

enum class ImputeNorm { in_degree, symmetric };

ImputeNorm parse_impute_norm(std::string_view name);
std::string_view to_string(ImputeNorm norm);

// Precomputed gather/scale/segment layout of the imputation sum.
struct ImputePlan {
  SegmentIndex segments;              // per entity, over `sources`
  std::vector<std::size_t> sources;   // unmasked neighbour rows
  std::vector<double> coefficients;   // 1 / c_ij per gathered row
  Matrix keep;                        // n x 1, 1 for rows passed through
  Matrix fill;                        // n x 1, 1 for rows that receive an imputed value
  std::vector<bool> present_after;
};

ImputePlan plan_imputation(const std::vector<bool>& present, const std::vector<std::vector<std::size_t>>& neighbors,
                           ImputeNorm norm);

// Masked row j with unmasked neighbours becomes
// sigma(sum_i (1 / c_ij) E_i W0); other rows pass through untouched.
ad::Var impute_missing(ad::Var values, const ImputePlan& plan, ad::Var w0, Activation sigma = Activation::relu);
ModalityTable impute_missing(const ModalityTable& table, std::span<const kg::RelationTriple> triples,
                             const Matrix& w0, ImputeNorm norm = ImputeNorm::in_degree,
                             Activation sigma = Activation::relu);

// sigma(E0 W + b), row-wise.
ad::Var init_trainable(ad::Var e0, ad::Var w, ad::Var b, Activation sigma = Activation::tanh);
Matrix init_trainable(const Matrix& e0, const Matrix& w, const Matrix& b, Activation sigma = Activation::tanh);

// h - 2 (h . r) r. With normalize_r, r is unit-normalized first and a zero r
// leaves h unchanged.
std::vector<double> relation_reflection(std::span<const double> h, std::span<const double> r, bool normalize_r = true);
// Row-wise reflection of h_rows across unit rows r_rows.
ad::Var reflect_rows(ad::Var h_rows, ad::Var r_rows);

// Message edges of the attention layers, sorted by destination. Every triple
// yields one edge in each direction; each node also gets a self loop.
struct EdgeList {
  std::vector<std::size_t> dst;
  std::vector<std::size_t> src;
  std::vector<std::size_t> relation;
  SegmentIndex by_dst;

  std::size_t size() const noexcept { return dst.size(); }
};

// relation_map translates local relation indices into the shared relation
// table; self_relation is the row used for self loops.
EdgeList build_attention_edges(std::span<const kg::RelationTriple> triples, std::size_t entity_count,
                               std::span<const std::size_t> relation_map, std::size_t self_relation,
                               bool self_loops = true);

struct GatLayerVars {
  ad::Var w_rel;   // d_r x d_a
  ad::Var w_feat;  // d_h x d_a
  ad::Var attn;    // d_a x 1
  double leaky_slope = num::kDefaultLeakySlope;
};

// alpha_e = softmax over dst(e) of a^T LeakyReLU(R[rel(e)] W_rel + H[src(e)] W_feat).
ad::Var attention_scores(ad::Var h, ad::Var relations, const EdgeList& edges, const GatLayerVars& params);

struct GatOutput {
  ad::Var h;
  ad::Var alpha;
};

// h_i' = sigma(sum_{e: dst(e) = i} alpha_e reflect(H[src(e)], R[rel(e)])).
GatOutput gat_layer(ad::Var h, ad::Var relations, const EdgeList& edges, const GatLayerVars& params,
                    Activation sigma = Activation::relu, bool normalize_relations = true);

// Distinct relations incident to each entity, for the entity-level relation
// segment (mean of incident relation embeddings, zero when none).
struct RelationIncidence {
  SegmentIndex segments;
  std::vector<std::size_t> relations;
  std::vector<double> coefficients;
};

RelationIncidence build_relation_incidence(std::span<const kg::RelationTriple> triples, std::size_t entity_count,
                                           std::span<const std::size_t> relation_map);
ad::Var incident_relation_mean(ad::Var relations, const RelationIncidence& incidence);

enum Segment : std::size_t { kVisual = 0, kName = 1, kValue = 2, kRelation = 3, kEntity = 4 };
inline constexpr std::size_t kSegmentCount = 5;

// [I | K | V | R | E]. offsets[s] .. offsets[s + 1] is segment s.
struct FusedEntityMatrix {
  ad::Var values;
  std::array<std::size_t, kSegmentCount + 1> offsets{};

  std::size_t width(Segment s) const { return offsets[s + 1] - offsets[s]; }
};

FusedEntityMatrix fuse_concat(ad::Var visual, ad::Var name, ad::Var value, ad::Var relation, ad::Var entity);

}  // namespace mcsff::cmci
