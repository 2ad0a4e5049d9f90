#include "mcsff/specificity/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "mcsff/error.hpp"
#include "mcsff/numerics/ops.hpp"

namespace mcsff::specificity {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::attribute: return "attribute";
    case Modality::visual: return "visual";
    case Modality::entity: return "entity";
    case Modality::fused: return "fused";
  }
  return "fused";
}

AttributeIncidence build_incidence(std::span<const kg::AttributeInstance> instances,
                                   std::span<const std::size_t> entity_rows) {
  constexpr std::size_t absent = std::numeric_limits<std::size_t>::max();
  std::size_t max_entity = 0;
  for (const auto& a : instances) max_entity = std::max(max_entity, a.entity.index);
  for (std::size_t e : entity_rows) max_entity = std::max(max_entity, e);
  std::vector<std::size_t> row_of(max_entity + 1, absent);
  for (std::size_t r = 0; r < entity_rows.size(); ++r) {
    if (row_of[entity_rows[r]] != absent) throw ShapeError("build_incidence: duplicate entity row");
    row_of[entity_rows[r]] = r;
  }

  AttributeIncidence inc;
  for (const auto& a : instances) {
    const std::size_t r = row_of[a.entity.index];
    if (r == absent) continue;
    inc.names.push_back(a.name);
    inc.values.push_back(a.value);
    inc.rows.push_back(r);
  }
  inc.membership = num::Matrix(entity_rows.size(), inc.names.size());
  for (std::size_t u = 0; u < inc.rows.size(); ++u) inc.membership(inc.rows[u], u) = 1.0;
  return inc;
}

AttributeIncidence build_incidence(std::span<const kg::AttributeInstance> instances, std::size_t entity_count) {
  std::vector<std::size_t> rows(entity_count);
  for (std::size_t i = 0; i < entity_count; ++i) rows[i] = i;
  for (const auto& a : instances) {
    if (a.entity.index >= entity_count) throw ShapeError("build_incidence: attribute of entity beyond entity count");
  }
  return build_incidence(instances, rows);
}

num::Matrix hashed_trigram_embedding(std::span<const std::string> names, std::size_t d_name) {
  if (d_name == 0) throw ConfigError("name embedding dimension must be positive");
  num::Matrix out(names.size(), d_name);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) continue;
    const std::string padded = "^" + names[i] + "$";
    for (std::size_t k = 0; k + 3 <= padded.size(); ++k) {
      std::uint64_t h = 14695981039346656037ull;
      for (std::size_t j = k; j < k + 3; ++j) {
        h ^= static_cast<unsigned char>(padded[j]);
        h *= 1099511628211ull;
      }
      out(i, h % d_name) += 1.0;
    }
  }
  return num::l2_normalize_rows(out, 1e-12);
}

num::Matrix embed_attribute_names(std::span<const std::string> names, const std::optional<num::Matrix>& provided,
                                  std::size_t d_name) {
  if (provided) {
    if (provided->rows() != names.size()) {
      throw ShapeError("name embeddings have " + std::to_string(provided->rows()) + " rows for " +
                       std::to_string(names.size()) + " attribute instances");
    }
    return *provided;
  }
  return hashed_trigram_embedding(names, d_name);
}

num::Matrix lookup_name_embeddings(std::span<const std::string> names,
                                   const std::map<std::string, std::vector<double>>& table) {
  if (table.empty()) throw ValidationError("name embedding table is empty");
  const std::size_t d = table.begin()->second.size();
  num::Matrix out(names.size(), d);
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = table.find(names[i]);
    if (it == table.end()) throw ValidationError("no embedding for attribute name '" + names[i] + "'");
    if (it->second.size() != d) throw ShapeError("name embedding for '" + names[i] + "' has the wrong dimension");
    std::copy(it->second.begin(), it->second.end(), out.row(i).begin());
  }
  return out;
}

num::Matrix value_proximity(std::span<const double> values_s, std::span<const double> values_t, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("attribute epsilon must be positive");
  num::Matrix p(values_s.size(), values_t.size());
  for (std::size_t u = 0; u < values_s.size(); ++u)
    for (std::size_t v = 0; v < values_t.size(); ++v) p(u, v) = 1.0 / (std::abs(values_s[u] - values_t[v]) + epsilon);
  return p;
}

SimilarityMatrix attribute_similarity(const AttributeIncidence& inc_s, const AttributeIncidence& inc_t,
                                      const num::Matrix& names_s, const num::Matrix& names_t,
                                      const AttributeSimParams& params) {
  if (params.weight_name < 0.0 || params.weight_value < 0.0) throw ConfigError("attribute weights must be non-negative");
  if (names_s.rows() != inc_s.instance_count() || names_t.rows() != inc_t.instance_count()) {
    throw ShapeError("attribute_similarity: name embeddings " + num::shape_string(names_s) + " / " +
                     num::shape_string(names_t) + " for " + std::to_string(inc_s.instance_count()) + " / " +
                     std::to_string(inc_t.instance_count()) + " instances");
  }
  if (names_s.cols() != names_t.cols()) {
    throw ShapeError("attribute_similarity: name dimensions differ (" + std::to_string(names_s.cols()) + " vs " +
                     std::to_string(names_t.cols()) + ")");
  }
  SimilarityMatrix out{Modality::attribute, {}};
  if (inc_s.instance_count() == 0 || inc_t.instance_count() == 0) {
    out.values = num::Matrix(inc_s.entity_count(), inc_t.entity_count());
    return out;
  }
  const num::Matrix name_term =
      num::map_tanh(num::scalar_mul(params.weight_name, num::matmul_nt(names_s, names_t)));
  const num::Matrix value_term =
      num::scalar_mul(params.weight_value, value_proximity(inc_s.values, inc_t.values, params.epsilon));
  const num::Matrix middle = num::hadamard(name_term, value_term);
  out.values = num::matmul_nt(num::matmul(inc_s.membership, middle), inc_t.membership);
  num::require_finite(out.values, "attribute_similarity");
  return out;
}

namespace {

struct StackedImages {
  num::Matrix vectors;
  std::vector<std::size_t> offsets;  // entity e owns rows [offsets[e], offsets[e+1])
};

StackedImages stack(std::span<const kg::VisualEmbeddingSet> sets, std::size_t& dim, bool normalize) {
  std::size_t total = 0;
  for (const auto& s : sets) {
    for (const auto& v : s.vectors) {
      if (dim == 0) dim = v.size();
      if (v.size() != dim) {
        throw ShapeError("visual_similarity: image dimension " + std::to_string(v.size()) + " vs " +
                         std::to_string(dim));
      }
    }
    total += s.vectors.size();
  }
  StackedImages out;
  out.vectors = num::Matrix(total, dim);
  out.offsets.push_back(0);
  std::size_t row = 0;
  for (const auto& s : sets) {
    for (const auto& v : s.vectors) std::copy(v.begin(), v.end(), out.vectors.row(row++).begin());
    out.offsets.push_back(row);
  }
  if (normalize) out.vectors = num::l2_normalize_rows(out.vectors, 1e-12);
  return out;
}

}  // namespace

SimilarityMatrix visual_similarity(std::span<const kg::VisualEmbeddingSet> sets_s,
                                   std::span<const kg::VisualEmbeddingSet> sets_t, bool normalize) {
  std::size_t dim = 0;
  const StackedImages s = stack(sets_s, dim, normalize);
  const StackedImages t = stack(sets_t, dim, normalize);
  SimilarityMatrix out{Modality::visual, num::Matrix(sets_s.size(), sets_t.size())};
  if (s.vectors.rows() == 0 || t.vectors.rows() == 0) return out;
  const num::Matrix dots = num::matmul_nt(s.vectors, t.vectors);

  for (std::size_t i = 0; i < sets_s.size(); ++i) {
    for (std::size_t j = 0; j < sets_t.size(); ++j) {
      if (s.offsets[i] == s.offsets[i + 1] || t.offsets[j] == t.offsets[j + 1]) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t p = s.offsets[i]; p < s.offsets[i + 1]; ++p)
        for (std::size_t q = t.offsets[j]; q < t.offsets[j + 1]; ++q) best = std::max(best, dots(p, q));
      out.values(i, j) = best;
    }
  }
  return out;
}

}  // namespace mcsff::specificity
