#include "mcsff/kg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "mcsff/error.hpp"

namespace mcsff::kg {

SynthConfig easy_preset() { return SynthConfig{}; }

SynthConfig discriminative_preset() {
  SynthConfig c;
  c.n_entities = 80;
  c.n_relations = 6;
  c.triple_density = 3.0;
  c.attr_per_entity = 2;
  c.attr_vocab = 8;
  c.img_per_entity = 1;
  c.d_img = 16;
  c.noise_level = 0.4;
  c.rewire_fraction = 0.05;
  c.missing_visual_fraction = 0.3;
  c.missing_attr_fraction = 0.3;
  c.rng_seed = 11;
  return c;
}

namespace {

std::string random_word(std::mt19937_64& rng, std::size_t length) {
  std::uniform_int_distribution<int> letter('a', 'z');
  std::string w(length, 'a');
  for (char& ch : w) ch = static_cast<char>(letter(rng));
  return w;
}

std::vector<std::size_t> pick_subset(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(k, n));
  return order;
}

std::size_t fraction_of(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
}

void set_tokens(KnowledgeGraph& kg, const char* prefix, std::size_t relation_vocab) {
  kg.entities = Vocabulary();
  for (std::size_t i = 0; i < kg.entity_count; ++i) kg.entities.intern(prefix + std::to_string(i));
  kg.relations = Vocabulary();
  for (std::size_t r = 0; r < relation_vocab; ++r) kg.relations.intern("r" + std::to_string(r));
}

void drop_modalities(KnowledgeGraph& kg, std::mt19937_64& rng, const SynthConfig& c) {
  const auto no_images = pick_subset(rng, kg.entity_count, fraction_of(c.missing_visual_fraction, kg.entity_count));
  for (std::size_t e : no_images) kg.visuals[e].vectors.clear();
  const auto no_attrs = pick_subset(rng, kg.entity_count, fraction_of(c.missing_attr_fraction, kg.entity_count));
  std::set<std::size_t> drop(no_attrs.begin(), no_attrs.end());
  std::erase_if(kg.attributes, [&](const AttributeInstance& a) { return drop.count(a.entity.index) != 0; });
}

}  // namespace

std::vector<std::size_t> canonicalize_interning(KnowledgeGraph& kg) {
  constexpr std::size_t unseen = static_cast<std::size_t>(-1);
  std::vector<std::size_t> entity_map(kg.entity_count, unseen);
  std::vector<std::size_t> relation_map(kg.relation_count, unseen);
  std::size_t next_entity = 0;
  std::size_t next_relation = 0;
  auto see_entity = [&](std::size_t e) {
    if (entity_map[e] == unseen) entity_map[e] = next_entity++;
  };
  for (const auto& t : kg.triples) {
    see_entity(t.head.index);
    if (relation_map[t.relation] == unseen) relation_map[t.relation] = next_relation++;
    see_entity(t.tail.index);
  }
  for (const auto& a : kg.attributes) see_entity(a.entity.index);
  for (const auto& set : kg.visuals)
    if (!set.vectors.empty()) see_entity(set.entity.index);
  for (auto& m : entity_map)
    if (m == unseen) m = next_entity++;
  for (auto& m : relation_map)
    if (m == unseen) m = next_relation++;

  Vocabulary entities;
  {
    std::vector<std::string> tokens(kg.entity_count);
    for (std::size_t e = 0; e < kg.entity_count; ++e) tokens[entity_map[e]] = kg.entities.token(e);
    for (const auto& tok : tokens) entities.intern(tok);
  }
  Vocabulary relations;
  {
    std::vector<std::string> tokens(kg.relation_count);
    for (std::size_t r = 0; r < kg.relation_count; ++r) tokens[relation_map[r]] = kg.relations.token(r);
    for (const auto& tok : tokens) relations.intern(tok);
  }

  for (auto& t : kg.triples) {
    t.head.index = entity_map[t.head.index];
    t.relation = relation_map[t.relation];
    t.tail.index = entity_map[t.tail.index];
  }
  for (auto& a : kg.attributes) a.entity.index = entity_map[a.entity.index];
  std::vector<VisualEmbeddingSet> visuals(kg.entity_count);
  for (auto& set : kg.visuals) {
    const std::size_t e = entity_map[set.entity.index];
    visuals[e].entity = {kg.side, e};
    visuals[e].vectors = std::move(set.vectors);
  }
  kg.visuals = std::move(visuals);
  kg.entities = std::move(entities);
  kg.relations = std::move(relations);
  return entity_map;
}

SyntheticPair generate_synthetic_pair(const SynthConfig& c) {
  if (c.n_entities < 2) throw ConfigError("synthetic pair needs at least 2 entities");
  if (c.n_relations < 1) throw ConfigError("synthetic pair needs at least 1 relation");
  if (c.noise_level < 0.0) throw ConfigError("noise_level must be non-negative");
  if (c.img_per_entity > 0 && c.d_img == 0) throw ConfigError("d_img must be positive when images are generated");
  for (double f : {c.rewire_fraction, c.missing_visual_fraction, c.missing_attr_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("synthetic fractions must lie in [0, 1]");
  }

  std::mt19937_64 rng(c.rng_seed);
  const std::size_t n = c.n_entities;
  std::uniform_int_distribution<std::size_t> pick_relation(0, c.n_relations - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  KnowledgeGraph src;
  src.side = Side::source;
  src.entity_count = n;
  src.relation_count = c.n_relations;

  // Spanning tree first, so every entity has at least one edge.
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> present;
  std::size_t tree_edges = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
    const bool flip = std::bernoulli_distribution(0.5)(rng);
    const std::size_t h = flip ? j : i;
    const std::size_t t = flip ? i : j;
    const std::size_t r = pick_relation(rng);
    present.emplace(h, r, t);
    src.triples.push_back({{Side::source, h}, r, {Side::source, t}});
    ++tree_edges;
  }
  const std::size_t wanted = std::max<std::size_t>(n - 1, fraction_of(c.triple_density, n));
  std::uniform_int_distribution<std::size_t> pick_entity(0, n - 1);
  for (std::size_t attempts = 0; src.triples.size() < wanted && attempts < 100 * wanted; ++attempts) {
    const std::size_t h = pick_entity(rng);
    const std::size_t t = pick_entity(rng);
    if (h == t) continue;
    const std::size_t r = pick_relation(rng);
    if (!present.emplace(h, r, t).second) continue;
    src.triples.push_back({{Side::source, h}, r, {Side::source, t}});
  }

  std::vector<std::string> names;
  {
    std::set<std::string> used;
    while (names.size() < c.attr_vocab) {
      std::string w = random_word(rng, 6);
      if (used.insert(w).second) names.push_back(w);
    }
  }
  const std::size_t per_entity = std::min(c.attr_per_entity, names.size());
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t k : pick_subset(rng, names.size(), per_entity)) {
      src.attributes.push_back({{Side::source, e}, names[k], gauss(rng)});
    }
  }

  const double component_scale = c.d_img ? 1.0 / std::sqrt(static_cast<double>(c.d_img)) : 0.0;
  src.visuals.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    src.visuals[e].entity = {Side::source, e};
    for (std::size_t k = 0; k < c.img_per_entity; ++k) {
      std::vector<double> v(c.d_img);
      for (double& x : v) x = component_scale * gauss(rng);
      src.visuals[e].vectors.push_back(std::move(v));
    }
  }

  // Target: permuted clone.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto noisy = [&](double x) { return c.noise_level > 0.0 ? x + c.noise_level * gauss(rng) : x; };

  KnowledgeGraph tgt;
  tgt.side = Side::target;
  tgt.entity_count = n;
  tgt.relation_count = c.n_relations;
  for (const auto& t : src.triples) {
    tgt.triples.push_back({{Side::target, perm[t.head.index]}, t.relation, {Side::target, perm[t.tail.index]}});
  }
  {
    const std::size_t eligible = tgt.triples.size() - tree_edges;
    const std::size_t count = std::min(eligible, fraction_of(c.rewire_fraction, tgt.triples.size()));
    for (std::size_t k : pick_subset(rng, eligible, count)) {
      auto& t = tgt.triples[tree_edges + k];
      std::size_t tail = pick_entity(rng);
      while (tail == t.head.index) tail = pick_entity(rng);
      t.tail.index = tail;
    }
  }
  std::shuffle(tgt.triples.begin(), tgt.triples.end(), rng);

  for (const auto& a : src.attributes) tgt.attributes.push_back({{Side::target, perm[a.entity.index]}, a.name, noisy(a.value)});
  std::shuffle(tgt.attributes.begin(), tgt.attributes.end(), rng);

  tgt.visuals.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    auto& set = tgt.visuals[perm[e]];
    set.entity = {Side::target, perm[e]};
    for (const auto& v : src.visuals[e].vectors) {
      std::vector<double> w(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) w[i] = noisy(v[i]);
      set.vectors.push_back(std::move(w));
    }
  }

  drop_modalities(src, rng, c);
  drop_modalities(tgt, rng, c);

  set_tokens(src, "s", c.n_relations);
  set_tokens(tgt, "t", c.n_relations);
  const auto src_map = canonicalize_interning(src);
  const auto tgt_map = canonicalize_interning(tgt);
  // Entity tokens name canonical indices.
  for (auto* kg : {&src, &tgt}) {
    Vocabulary relations = std::move(kg->relations);
    set_tokens(*kg, kg->side == Side::source ? "s" : "t", 0);
    kg->relations = std::move(relations);
  }

  SyntheticPair out;
  out.ground_truth.resize(n);
  for (std::size_t e = 0; e < n; ++e) {
    out.ground_truth[src_map[e]] = {{Side::source, src_map[e]}, {Side::target, tgt_map[perm[e]]}};
  }
  out.source = std::move(src);
  out.target = std::move(tgt);
  return out;
}

}  // namespace mcsff::kg
