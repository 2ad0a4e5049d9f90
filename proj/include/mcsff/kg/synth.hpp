#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mcsff/kg/types.hpp"

namespace mcsff::kg {

// Knobs for the twin-graph generator. The target graph is an index-permuted
// clone of the source with Gaussian noise (std = noise_level) added to
// attribute values and image components.
struct SynthConfig {
  std::size_t n_entities = 50;
  std::size_t n_relations = 5;
  double triple_density = 3.0;  // triples per entity
  std::size_t attr_per_entity = 3;
  std::size_t attr_vocab = 12;
  std::size_t img_per_entity = 2;
  std::size_t d_img = 16;
  double noise_level = 0.01;
  // Fraction of all triples whose tail is redrawn on the target side. Only
  // non-spanning-tree triples are eligible, so both graphs stay connected.
  double rewire_fraction = 0.0;
  // Per-side fraction of entities stripped of all images / all attributes.
  double missing_visual_fraction = 0.0;
  double missing_attr_fraction = 0.0;
  std::uint64_t rng_seed = 1;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// n = 50, noise 0.01: every modality is informative.
SynthConfig easy_preset();

// Noisy images and values with missing modalities on both sides, so that no
// single similarity matrix recovers the alignment on its own.
SynthConfig discriminative_preset();

struct SyntheticPair {
  KnowledgeGraph source;
  KnowledgeGraph target;
  std::vector<SeedAlignment> ground_truth;  // one seed per source entity, by source index
};

// Both graphs come back in canonical interning order: entity and relation
// indices equal the order in which write_graph() output first mentions them,
// so a write/load round trip reproduces the graphs exactly.
SyntheticPair generate_synthetic_pair(const SynthConfig& config);

// Relabels entities and relations into first-seen order over triples, then
// attributes, then visual sets. Returns old index -> new index for entities.
std::vector<std::size_t> canonicalize_interning(KnowledgeGraph& kg);

}  // namespace mcsff::kg
