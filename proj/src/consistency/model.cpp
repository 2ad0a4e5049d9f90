#include "mcsff/consistency/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "mcsff/error.hpp"
#include "mcsff/specificity/similarity.hpp"

namespace mcsff::cmci {

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::visual: return "visual";
    case Channel::name: return "name";
    case Channel::value: return "value";
    case Channel::entity: return "entity";
  }
  return "?";
}

std::vector<double> value_basis(double z, std::size_t count) {
  std::vector<double> out(count, 0.0);
  if (count == 0) return out;
  if (count == 1) {
    out[0] = std::exp(-0.5 * z * z);
    return out;
  }
  const double lo = -3.0, hi = 3.0;
  const double width = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count; ++k) {
    double c = lo + width * static_cast<double>(k);
    double d = (z - c) / width;
    out[k] = std::exp(-0.5 * d * d);
  }
  return out;
}

namespace {

using Items = std::vector<std::vector<std::vector<double>>>;

struct ValueStats {
  double mean = 0.0;
  double stddev = 0.0;
};

std::unordered_map<std::string, ValueStats> value_stats(const kg::KnowledgeGraph& s, const kg::KnowledgeGraph& t) {
  std::unordered_map<std::string, std::vector<double>> by_name;
  for (const auto* g : {&s, &t})
    for (const auto& a : g->attributes) by_name[a.name].push_back(a.value);
  std::unordered_map<std::string, ValueStats> out;
  for (auto& [name, vals] : by_name) {
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    out[name] = {mean, std::sqrt(var / static_cast<double>(vals.size()))};
  }
  return out;
}

Matrix name_rows(std::span<const std::string> names, const ModelConfig& config, const std::optional<NameTable>& table) {
  if (table) return specificity::lookup_name_embeddings(names, *table);
  return specificity::hashed_trigram_embedding(names, config.name_dim);
}

ModalityTable blank_table(std::size_t n, std::size_t dim) { return {Matrix(n, dim), std::vector<bool>(n, false)}; }

SideInputs prepare_side(const kg::KnowledgeGraph& g, std::size_t visual_dim, std::size_t name_dim,
                        const std::unordered_map<std::string, ValueStats>& stats,
                        const std::vector<std::size_t>& relation_map, std::size_t self_relation,
                        const ModelConfig& config, const std::optional<NameTable>& table) {
  const std::size_t n = g.entity_count;
  SideInputs side;
  side.entity_count = n;
  side.relation_map = relation_map;

  Items visual(n);
  for (const auto& set : g.visuals) {
    if (set.entity.index >= n) throw ValidationError("prepare_inputs: visual set for dangling entity");
    for (const auto& v : set.vectors) {
      if (v.size() != visual_dim) throw ShapeError("prepare_inputs: mixed image dimensions");
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      std::vector<double> unit(v);
      for (double& x : unit) x = norm < 1e-12 ? 0.0 : x / norm;
      visual[set.entity.index].push_back(std::move(unit));
    }
  }
  side.visual = visual_dim == 0 ? blank_table(n, 1) : aggregate_modality(visual, visual_dim);

  std::vector<std::string> names;
  for (const auto& a : g.attributes) names.push_back(a.name);
  Matrix name_emb = names.empty() ? Matrix(0, name_dim) : name_rows(names, config, table);
  if (name_emb.cols() != name_dim) throw ShapeError("prepare_inputs: name embedding width mismatch");
  Items name_items(n), value_items(n);
  for (std::size_t u = 0; u < g.attributes.size(); ++u) {
    const auto& a = g.attributes[u];
    if (a.entity.index >= n) throw ValidationError("prepare_inputs: attribute for dangling entity");
    auto row = name_emb.row(u);
    name_items[a.entity.index].emplace_back(row.begin(), row.end());
    const ValueStats& st = stats.at(a.name);
    double z = st.stddev < 1e-12 ? 0.0 : (a.value - st.mean) / st.stddev;
    value_items[a.entity.index].push_back(value_basis(z, config.value_features));
  }
  side.name = aggregate_modality(name_items, name_dim);
  side.value = aggregate_modality(value_items, config.value_features);

  auto neighbors = undirected_neighbors(g.triples, n);
  side.visual_plan = plan_imputation(side.visual.present, neighbors, config.impute_norm);
  side.name_plan = plan_imputation(side.name.present, neighbors, config.impute_norm);
  side.value_plan = plan_imputation(side.value.present, neighbors, config.impute_norm);
  side.edges = build_attention_edges(g.triples, n, relation_map, self_relation);
  side.relation_incidence = build_relation_incidence(g.triples, n, relation_map);
  return side;
}

std::size_t shared_visual_dim(const kg::KnowledgeGraph& s, const kg::KnowledgeGraph& t) {
  std::size_t ds = s.visual_dim(), dt = t.visual_dim();
  if (ds != 0 && dt != 0 && ds != dt) {
    throw ShapeError("prepare_inputs: image dimension " + std::to_string(ds) + " vs " + std::to_string(dt));
  }
  return std::max(ds, dt);
}

}  // namespace

PairInputs prepare_inputs(const kg::KnowledgeGraph& source, const kg::KnowledgeGraph& target,
                          const ModelConfig& config, const std::optional<NameTable>& names) {
  if (config.dim == 0 || config.attention_dim == 0 || config.name_dim == 0 || config.value_features == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (!(config.leaky_slope > 0.0 && config.leaky_slope < 1.0)) throw ConfigError("leaky slope must lie in (0, 1)");
  PairInputs out;
  kg::Vocabulary shared;
  std::vector<std::size_t> map_s, map_t;
  for (std::size_t r = 0; r < source.relation_count; ++r) map_s.push_back(shared.intern(source.relations.token(r)));
  for (std::size_t r = 0; r < target.relation_count; ++r) map_t.push_back(shared.intern(target.relations.token(r)));
  out.relation_count = shared.size();
  out.relation_tokens = shared.tokens();

  std::size_t name_dim = config.name_dim;
  if (names && !names->empty()) name_dim = names->begin()->second.size();
  auto stats = value_stats(source, target);
  std::size_t visual_dim = shared_visual_dim(source, target);
  out.source = prepare_side(source, visual_dim, name_dim, stats, map_s, out.relation_count, config, names);
  out.target = prepare_side(target, visual_dim, name_dim, stats, map_t, out.relation_count, config, names);
  return out;
}

namespace {

Matrix xavier(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = dist(rng);
  return m;
}

std::string modality_name(Channel c) { return std::string(to_string(c)); }

std::string gat_name(Channel c, std::size_t layer, const char* what) {
  return "gat/" + modality_name(c) + "/" + std::to_string(layer) + "/" + what;
}

constexpr std::array<Channel, 3> kFeatureChannels{Channel::visual, Channel::name, Channel::value};
constexpr std::array<Channel, kChannelCount> kAllChannels{Channel::visual, Channel::name, Channel::value,
                                                          Channel::entity};

const ModalityTable& table_of(const SideInputs& side, Channel c) {
  return c == Channel::visual ? side.visual : c == Channel::name ? side.name : side.value;
}

const ImputePlan& plan_of(const SideInputs& side, Channel c) {
  return c == Channel::visual ? side.visual_plan : c == Channel::name ? side.name_plan : side.value_plan;
}

}  // namespace

num::ParameterSet init_parameters(const PairInputs& inputs, const ModelConfig& config, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  num::ParameterSet p;
  const std::size_t d = config.dim;
  for (Channel c : kFeatureChannels) {
    std::size_t width = table_of(inputs.source, c).dim();
    std::string m = modality_name(c);
    p.set("impute/" + m + "/W", Matrix::identity(width));
    p.set("init/" + m + "/W", xavier(rng, width, d));
    p.set("init/" + m + "/b", Matrix(1, d));
  }
  p.set("entity/source", xavier(rng, inputs.source.entity_count, d));
  p.set("entity/target", xavier(rng, inputs.target.entity_count, d));
  p.set("init/entity/W", xavier(rng, d, d));
  p.set("init/entity/b", Matrix(1, d));
  p.set("relation/base", xavier(rng, std::max<std::size_t>(inputs.relation_count, 1), d));
  p.set("init/relation/W", xavier(rng, d, d));
  p.set("init/relation/b", Matrix(1, d));
  for (Channel c : kAllChannels) {
    for (std::size_t l = 0; l < config.layers; ++l) {
      p.set(gat_name(c, l, "W_rel"), xavier(rng, d, config.attention_dim));
      p.set(gat_name(c, l, "W_feat"), xavier(rng, d, config.attention_dim));
      p.set(gat_name(c, l, "a"), xavier(rng, config.attention_dim, 1));
    }
    if (config.dense_readout) {
      p.set("readout/" + modality_name(c) + "/W", xavier(rng, (config.layers + 1) * d, d));
    }
  }
  return p;
}

namespace {

ad::Var relation_table(const num::BoundParameters& p, const PairInputs& inputs, const ModelConfig& config) {
  ad::Tape& tape = p["relation/base"].tape();
  ad::Var projected = init_trainable(p["relation/base"], p["init/relation/W"], p["init/relation/b"], config.init_sigma);
  ad::Var self = tape.constant(Matrix(1, config.dim));
  if (inputs.relation_count == 0) return self;
  const std::array<ad::Var, 2> parts{projected, self};
  return ad::concat_rows(parts);
}

SideOutput forward_side(const num::BoundParameters& p, const SideInputs& side, ad::Var relations,
                        const std::string& entity_param, const ModelConfig& config) {
  ad::Tape& tape = relations.tape();
  std::array<ad::Var, kChannelCount> state;
  for (Channel c : kFeatureChannels) {
    std::string m = modality_name(c);
    ad::Var raw = tape.constant(table_of(side, c).values);
    ad::Var e0 = impute_missing(raw, plan_of(side, c), p["impute/" + m + "/W"], config.impute_sigma);
    state[static_cast<std::size_t>(c)] = init_trainable(e0, p["init/" + m + "/W"], p["init/" + m + "/b"], config.init_sigma);
  }
  state[static_cast<std::size_t>(Channel::entity)] =
      init_trainable(p[entity_param], p["init/entity/W"], p["init/entity/b"], config.init_sigma);

  SideOutput out;
  for (Channel c : kAllChannels) {
    ad::Var h = state[static_cast<std::size_t>(c)];
    std::vector<ad::Var> layers{h};
    for (std::size_t l = 0; l < config.layers; ++l) {
      GatLayerVars vars{p[gat_name(c, l, "W_rel")], p[gat_name(c, l, "W_feat")], p[gat_name(c, l, "a")], config.leaky_slope};
      GatOutput g = gat_layer(h, relations, side.edges, vars, config.gat_sigma, config.normalize_relations);
      out.attention.push_back(g.alpha);
      h = g.h;
      layers.push_back(h);
    }
    if (config.dense_readout) h = ad::matmul(ad::concat_cols(layers), p["readout/" + modality_name(c) + "/W"]);
    state[static_cast<std::size_t>(c)] = h;
  }
  ad::Var rel_segment = incident_relation_mean(relations, side.relation_incidence);
  out.fused = fuse_concat(state[0], state[1], state[2], rel_segment, state[3]);
  return out;
}

}  // namespace

ForwardOutput forward(const num::BoundParameters& params, const PairInputs& inputs, const ModelConfig& config) {
  ad::Var relations = relation_table(params, inputs, config);
  return {forward_side(params, inputs.source, relations, "entity/source", config),
          forward_side(params, inputs.target, relations, "entity/target", config)};
}

std::pair<Matrix, Matrix> embed(const num::ParameterSet& params, const PairInputs& inputs, const ModelConfig& config) {
  ad::Tape tape;
  num::BoundParameters bound(tape, params);
  ForwardOutput out = forward(bound, inputs, config);
  return {out.source.fused.values.value(), out.target.fused.values.value()};
}

}  // namespace mcsff::cmci
