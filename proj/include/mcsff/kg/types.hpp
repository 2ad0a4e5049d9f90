#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mcsff::kg {

enum class Side { source, target };

std::string_view to_string(Side side);

struct EntityId {
  Side side = Side::source;
  std::size_t index = 0;

  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct RelationTriple {
  EntityId head;
  std::size_t relation = 0;
  EntityId tail;

  friend bool operator==(const RelationTriple&, const RelationTriple&) = default;
};

struct AttributeInstance {
  EntityId entity;
  std::string name;
  double value = 0.0;

  friend bool operator==(const AttributeInstance&, const AttributeInstance&) = default;
};

struct VisualEmbeddingSet {
  EntityId entity;
  std::vector<std::vector<double>> vectors;

  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }

  friend bool operator==(const VisualEmbeddingSet&, const VisualEmbeddingSet&) = default;
};

// Dense string interning in first-seen order.
class Vocabulary {
 public:
  std::size_t intern(std::string_view token);
  std::optional<std::size_t> find(std::string_view token) const;
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One side of an aligned pair. visuals has one entry per entity, in index
// order; entities without images carry an empty set.
struct KnowledgeGraph {
  Side side = Side::source;
  std::size_t entity_count = 0;
  std::size_t relation_count = 0;
  std::vector<RelationTriple> triples;
  std::vector<AttributeInstance> attributes;
  std::vector<VisualEmbeddingSet> visuals;
  Vocabulary entities;
  Vocabulary relations;

  // Image dimension of the first non-empty set, 0 when there are none.
  std::size_t visual_dim() const;

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

struct SeedAlignment {
  EntityId source;
  EntityId target{Side::target, 0};

  friend auto operator<=>(const SeedAlignment&, const SeedAlignment&) = default;
};

}  // namespace mcsff::kg
