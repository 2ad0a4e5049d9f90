#include "mcsff/consistency/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "mcsff/error.hpp"

namespace mcsff::cmci {

ModalityTable aggregate_modality(std::span<const std::vector<std::vector<double>>> items, std::size_t dim,
                                 std::span<const std::vector<double>> weights) {
  if (!weights.empty() && weights.size() != items.size()) {
    throw ConfigError("aggregate_modality: weights given for " + std::to_string(weights.size()) + " entities, expected " +
                      std::to_string(items.size()));
  }
  ModalityTable table{Matrix(items.size(), dim), std::vector<bool>(items.size(), false)};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& list = items[i];
    if (list.empty()) continue;
    const std::vector<double>* w = weights.empty() ? nullptr : &weights[i];
    if (w && w->size() != list.size()) throw ConfigError("aggregate_modality: weight count mismatch at entity " + std::to_string(i));
    double total = 0.0;
    auto row = table.values.row(i);
    for (std::size_t j = 0; j < list.size(); ++j) {
      if (list[j].size() != dim) {
        throw ShapeError("aggregate_modality: item of dim " + std::to_string(list[j].size()) + ", expected " +
                         std::to_string(dim));
      }
      double wj = w ? (*w)[j] : 1.0;
      if (!(wj >= 0.0) || !std::isfinite(wj)) throw ConfigError("aggregate_modality: negative weight at entity " + std::to_string(i));
      total += wj;
      for (std::size_t c = 0; c < dim; ++c) row[c] += wj * list[j][c];
    }
    if (total <= 0.0) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    for (double& x : row) x /= total;
    table.present[i] = true;
  }
  return table;
}

std::vector<std::vector<std::size_t>> undirected_neighbors(std::span<const kg::RelationTriple> triples,
                                                           std::size_t entity_count) {
  std::vector<std::set<std::size_t>> sets(entity_count);
  for (const auto& t : triples) {
    std::size_t h = t.head.index, d = t.tail.index;
    if (h >= entity_count || d >= entity_count) throw ValidationError("undirected_neighbors: dangling entity in triple");
    if (h == d) continue;
    sets[h].insert(d);
    sets[d].insert(h);
  }
  std::vector<std::vector<std::size_t>> out(entity_count);
  for (std::size_t i = 0; i < entity_count; ++i) out[i].assign(sets[i].begin(), sets[i].end());
  return out;
}

ImputeNorm parse_impute_norm(std::string_view name) {
  if (name == "in_degree") return ImputeNorm::in_degree;
  if (name == "symmetric") return ImputeNorm::symmetric;
  throw ConfigError("unknown imputation norm '" + std::string(name) + "'");
}

std::string_view to_string(ImputeNorm norm) { return norm == ImputeNorm::in_degree ? "in_degree" : "symmetric"; }

ImputePlan plan_imputation(const std::vector<bool>& present, const std::vector<std::vector<std::size_t>>& neighbors,
                           ImputeNorm norm) {
  const std::size_t n = present.size();
  if (neighbors.size() != n) throw ShapeError("plan_imputation: neighbour lists do not match mask");
  ImputePlan plan;
  plan.keep = Matrix(n, 1);
  plan.fill = Matrix(n, 1);
  plan.present_after = present;
  std::vector<std::size_t> offsets{0};
  for (std::size_t j = 0; j < n; ++j) {
    if (present[j]) {
      plan.keep(j, 0) = 1.0;
    } else {
      std::vector<std::size_t> live;
      for (std::size_t i : neighbors[j]) if (present[i]) live.push_back(i);
      for (std::size_t i : live) {
        double c = norm == ImputeNorm::in_degree
                       ? static_cast<double>(live.size())
                       : std::sqrt(static_cast<double>(neighbors[i].size()) * static_cast<double>(neighbors[j].size()));
        plan.sources.push_back(i);
        plan.coefficients.push_back(1.0 / c);
      }
      if (!live.empty()) {
        plan.fill(j, 0) = 1.0;
        plan.present_after[j] = true;
      }
    }
    offsets.push_back(plan.sources.size());
  }
  plan.segments = SegmentIndex(std::move(offsets));
  return plan;
}

ad::Var impute_missing(ad::Var values, const ImputePlan& plan, ad::Var w0, Activation sigma) {
  ad::Tape& tape = values.tape();
  if (values.rows() != plan.keep.rows()) throw ShapeError("impute_missing: plan built for a different row count");
  ad::Var kept = ad::scale_rows(values, tape.constant(plan.keep));
  if (plan.sources.empty()) return kept;
  ad::Var gathered = ad::gather_rows(values, plan.sources);
  ad::Var weighted = ad::scale_rows(gathered, tape.constant(Matrix::column(plan.coefficients)));
  ad::Var pooled = ad::segment_sum(weighted, plan.segments);
  ad::Var imputed = ad::map_sigma(ad::matmul(pooled, w0), sigma);
  return ad::add(kept, ad::scale_rows(imputed, tape.constant(plan.fill)));
}

ModalityTable impute_missing(const ModalityTable& table, std::span<const kg::RelationTriple> triples,
                             const Matrix& w0, ImputeNorm norm, Activation sigma) {
  ImputePlan plan = plan_imputation(table.present, undirected_neighbors(triples, table.count()), norm);
  ad::Tape tape;
  ad::Var out = impute_missing(tape.constant(table.values), plan, tape.constant(w0), sigma);
  return {out.value(), plan.present_after};
}

ad::Var init_trainable(ad::Var e0, ad::Var w, ad::Var b, Activation sigma) {
  return ad::map_sigma(ad::add_row(ad::matmul(e0, w), b), sigma);
}

Matrix init_trainable(const Matrix& e0, const Matrix& w, const Matrix& b, Activation sigma) {
  ad::Tape tape;
  return init_trainable(tape.constant(e0), tape.constant(w), tape.constant(b), sigma).value();
}

std::vector<double> relation_reflection(std::span<const double> h, std::span<const double> r, bool normalize_r) {
  if (h.size() != r.size()) {
    throw ShapeError("relation_reflection: dims " + std::to_string(h.size()) + " and " + std::to_string(r.size()));
  }
  std::vector<double> unit(r.begin(), r.end());
  if (normalize_r) {
    double norm = std::sqrt(std::inner_product(unit.begin(), unit.end(), unit.begin(), 0.0));
    for (double& x : unit) x = norm < 1e-12 ? 0.0 : x / norm;
  }
  double dot = std::inner_product(h.begin(), h.end(), unit.begin(), 0.0);
  std::vector<double> out(h.begin(), h.end());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] -= 2.0 * dot * unit[c];
  return out;
}

ad::Var reflect_rows(ad::Var h_rows, ad::Var r_rows) {
  ad::Var twice = ad::scalar_mul(2.0, ad::row_dot(h_rows, r_rows));
  return ad::sub(h_rows, ad::scale_rows(r_rows, twice));
}

EdgeList build_attention_edges(std::span<const kg::RelationTriple> triples, std::size_t entity_count,
                               std::span<const std::size_t> relation_map, std::size_t self_relation, bool self_loops) {
  struct Edge {
    std::size_t dst, src, rel;
  };
  std::vector<Edge> edges;
  edges.reserve(2 * triples.size() + (self_loops ? entity_count : 0));
  if (self_loops) {
    for (std::size_t i = 0; i < entity_count; ++i) edges.push_back({i, i, self_relation});
  }
  for (const auto& t : triples) {
    if (t.head.index >= entity_count || t.tail.index >= entity_count) {
      throw ValidationError("build_attention_edges: dangling entity in triple");
    }
    if (t.relation >= relation_map.size()) {
      throw ValidationError("build_attention_edges: dangling relation " + std::to_string(t.relation));
    }
    std::size_t rel = relation_map[t.relation];
    edges.push_back({t.tail.index, t.head.index, rel});
    edges.push_back({t.head.index, t.tail.index, rel});
  }
  // Stable by destination only: within a segment, edges keep triple order so
  // relabelling entities never reorders a sum.
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.dst < b.dst; });
  EdgeList out;
  for (const auto& e : edges) {
    out.dst.push_back(e.dst);
    out.src.push_back(e.src);
    out.relation.push_back(e.rel);
  }
  out.by_dst = SegmentIndex::from_sorted_keys(out.dst, entity_count);
  return out;
}

namespace {

void check_edges(ad::Var h, ad::Var relations, const EdgeList& edges) {
  if (edges.by_dst.segment_count() != h.rows()) {
    throw ShapeError("attention: edge list covers " + std::to_string(edges.by_dst.segment_count()) + " nodes, state has " +
                     std::to_string(h.rows()));
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges.relation[e] >= relations.rows()) {
      throw ValidationError("attention: dangling relation index " + std::to_string(edges.relation[e]));
    }
    if (edges.src[e] >= h.rows()) throw ValidationError("attention: dangling source node " + std::to_string(edges.src[e]));
  }
}

}  // namespace

ad::Var attention_scores(ad::Var h, ad::Var relations, const EdgeList& edges, const GatLayerVars& params) {
  check_edges(h, relations, edges);
  ad::Var rel_rows = ad::gather_rows(relations, edges.relation);
  ad::Var feat_rows = ad::gather_rows(h, edges.src);
  ad::Var pre = ad::add(ad::matmul(rel_rows, params.w_rel), ad::matmul(feat_rows, params.w_feat));
  ad::Var scores = ad::matmul(ad::leaky_relu(pre, params.leaky_slope), params.attn);
  return ad::segment_softmax(scores, edges.by_dst);
}

GatOutput gat_layer(ad::Var h, ad::Var relations, const EdgeList& edges, const GatLayerVars& params,
                    Activation sigma, bool normalize_relations) {
  if (h.cols() != relations.cols()) {
    throw ShapeError("gat_layer: state width " + std::to_string(h.cols()) + " vs relation width " +
                     std::to_string(relations.cols()));
  }
  ad::Var alpha = attention_scores(h, relations, edges, params);
  ad::Var normals = ad::gather_rows(normalize_relations ? ad::l2_normalize_rows(relations) : relations, edges.relation);
  ad::Var messages = reflect_rows(ad::gather_rows(h, edges.src), normals);
  ad::Var pooled = ad::segment_sum(ad::scale_rows(messages, alpha), edges.by_dst);
  return {ad::map_sigma(pooled, sigma), alpha};
}

RelationIncidence build_relation_incidence(std::span<const kg::RelationTriple> triples, std::size_t entity_count,
                                           std::span<const std::size_t> relation_map) {
  std::vector<std::set<std::size_t>> sets(entity_count);
  for (const auto& t : triples) {
    if (t.relation >= relation_map.size()) throw ValidationError("relation incidence: dangling relation");
    std::size_t rel = relation_map[t.relation];
    sets.at(t.head.index).insert(rel);
    sets.at(t.tail.index).insert(rel);
  }
  RelationIncidence inc;
  std::vector<std::size_t> offsets{0};
  for (const auto& s : sets) {
    for (std::size_t rel : s) {
      inc.relations.push_back(rel);
      inc.coefficients.push_back(1.0 / static_cast<double>(s.size()));
    }
    offsets.push_back(inc.relations.size());
  }
  inc.segments = SegmentIndex(std::move(offsets));
  return inc;
}

ad::Var incident_relation_mean(ad::Var relations, const RelationIncidence& incidence) {
  ad::Tape& tape = relations.tape();
  if (incidence.relations.empty()) return tape.constant(Matrix(incidence.segments.segment_count(), relations.cols()));
  ad::Var rows = ad::gather_rows(relations, incidence.relations);
  ad::Var weighted = ad::scale_rows(rows, tape.constant(Matrix::column(incidence.coefficients)));
  return ad::segment_sum(weighted, incidence.segments);
}

FusedEntityMatrix fuse_concat(ad::Var visual, ad::Var name, ad::Var value, ad::Var relation, ad::Var entity) {
  const std::array<ad::Var, kSegmentCount> parts{visual, name, value, relation, entity};
  FusedEntityMatrix out;
  for (std::size_t s = 0; s < kSegmentCount; ++s) {
    if (parts[s].rows() != visual.rows()) {
      throw ShapeError("fuse_concat: segment " + std::to_string(s) + " has " + std::to_string(parts[s].rows()) +
                       " rows, expected " + std::to_string(visual.rows()));
    }
    out.offsets[s + 1] = out.offsets[s] + parts[s].cols();
  }
  out.values = ad::concat_cols(parts);
  return out;
}

}  // namespace mcsff::cmci
