#pragma once

// Tab-separated dataset files. Lines starting with '#' and blank lines are
// skipped. Entity and relation tokens are interned per side in first-seen
// order across the files of that side (triples, then attributes, then
// visuals).

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcsff/kg/types.hpp"

namespace mcsff::kg {

struct GraphFiles {
  std::filesystem::path triples;
  std::filesystem::path attributes;  // optional, empty = none
  std::filesystem::path visuals;     // optional, empty = none
};

// `head \t relation \t tail`
std::vector<RelationTriple> load_triples(const std::filesystem::path& path, Side side, Vocabulary& entities,
                                         Vocabulary& relations);

// `entity \t name \t value`; value must be a finite real.
std::vector<AttributeInstance> load_attributes(const std::filesystem::path& path, Side side, Vocabulary& entities);

// `entity \t f1,f2,...,fd`. Returns one set per entity of the vocabulary
// (after loading), empty for entities that have no line in the file.
std::vector<VisualEmbeddingSet> load_visual_embeddings(const std::filesystem::path& path, Side side,
                                                       Vocabulary& entities,
                                                       std::optional<std::size_t> expected_dim = std::nullopt);

KnowledgeGraph load_graph(const GraphFiles& files, Side side);

// `source \t target`, resolved against the two vocabularies. Duplicate pairs
// are dropped; unknown tokens raise ValidationError.
std::vector<SeedAlignment> load_seeds(const std::filesystem::path& path, const Vocabulary& source,
                                      const Vocabulary& target);

// `name_token \t f1,...,fd`
std::map<std::string, std::vector<double>> load_name_embeddings(const std::filesystem::path& path);

void write_triples(std::ostream& out, const KnowledgeGraph& kg);
void write_attributes(std::ostream& out, const KnowledgeGraph& kg);
void write_visuals(std::ostream& out, const KnowledgeGraph& kg);
void write_seeds(std::ostream& out, std::span<const SeedAlignment> seeds, const KnowledgeGraph& source,
                 const KnowledgeGraph& target);

void write_graph(const KnowledgeGraph& kg, const GraphFiles& files);
void write_seeds(const std::filesystem::path& path, std::span<const SeedAlignment> seeds,
                 const KnowledgeGraph& source, const KnowledgeGraph& target);

// Shortest decimal form that round-trips a double.
std::string format_real(double value);

}  // namespace mcsff::kg
