#include <cmath>
#include <random>

#include "../common/oracles.hpp"
#include "doctest.h"
#include "mcsff/error.hpp"
#include "mcsff/numerics/ops.hpp"
#include "mcsff/specificity/similarity.hpp"
#include "test_support.hpp"

using namespace mcsff;
using namespace mcsff::specificity;
using kg::AttributeInstance;
using kg::Side;
using kg::VisualEmbeddingSet;

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

std::vector<AttributeInstance> random_instances(std::mt19937_64& rng, Side side, std::size_t n, std::size_t a) {
  std::uniform_int_distribution<std::size_t> ent(0, n - 1);
  std::uniform_int_distribution<int> name(0, 3);
  std::normal_distribution<double> val(0.0, 2.0);
  std::vector<AttributeInstance> out;
  for (std::size_t u = 0; u < a; ++u) out.push_back({{side, ent(rng)}, "n" + std::to_string(name(rng)), val(rng)});
  return out;
}

}  // namespace

TEST_CASE("embed_attribute_names") {
  const std::vector<std::string> same{"height", "height"};
  const auto k = embed_attribute_names(same, std::nullopt, 64);
  CHECK(k.rows() == 2);
  CHECK(std::equal(k.row(0).begin(), k.row(0).end(), k.row(1).begin()));
  CHECK(cosine(k.row(0), k.row(1)) == doctest::Approx(1.0).epsilon(1e-15));

  const num::Matrix provided = num::Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(embed_attribute_names(same, provided, 64) == provided);
  CHECK_THROWS_AS(embed_attribute_names(std::vector<std::string>{"a"}, provided, 64), ShapeError);

  // "^height$" has 3-grams {^he hei eig igh ght ht$}; "^width$" has
  // {^wi wid idt dth th$}: disjoint. "^heights$" shares 5 of its 7 grams with
  // "height", so cosine = 5 / sqrt(6 * 7) barring bucket collisions.
  const std::vector<std::string> words{"height", "width", "heights"};
  const auto w = hashed_trigram_embedding(words, 4096);
  CHECK(cosine(w.row(0), w.row(1)) < 1.0);
  CHECK(cosine(w.row(0), w.row(1)) == doctest::Approx(0.0));
  CHECK(cosine(w.row(0), w.row(2)) == doctest::Approx(5.0 / std::sqrt(42.0)).epsilon(1e-12));
  const auto w16 = hashed_trigram_embedding(words, 16);
  CHECK(cosine(w16.row(0), w16.row(1)) < 1.0);
}

TEST_CASE("lookup_name_embeddings") {
  std::map<std::string, std::vector<double>> table{{"a", {1, 0}}, {"b", {0, 1}}};
  const auto m = lookup_name_embeddings(std::vector<std::string>{"b", "a", "b"}, table);
  CHECK(m == num::Matrix::from_rows({{0, 1}, {1, 0}, {0, 1}}));
  CHECK_THROWS_AS(lookup_name_embeddings(std::vector<std::string>{"c"}, table), ValidationError);
}

TEST_CASE("attribute_similarity: single shared instance") {
  std::vector<AttributeInstance> s{{{Side::source, 0}, "height", 180.0}};
  std::vector<AttributeInstance> t{{{Side::target, 0}, "height", 180.0}};
  auto inc_s = build_incidence(s, 1);
  auto inc_t = build_incidence(t, 1);
  auto k_s = embed_attribute_names(inc_s.names, std::nullopt, 32);
  auto k_t = embed_attribute_names(inc_t.names, std::nullopt, 32);
  const auto sim = attribute_similarity(inc_s, inc_t, k_s, k_t, {1.0, 1.0, 1e-6});
  CHECK(sim.modality == Modality::attribute);
  CHECK(sim.values(0, 0) == doctest::Approx(std::tanh(1.0) / 1e-6).epsilon(1e-12));
}

TEST_CASE("attribute_similarity: entities without attributes give zero rows") {
  std::vector<AttributeInstance> s{{{Side::source, 1}, "a", 1.0}};
  std::vector<AttributeInstance> t{{{Side::target, 0}, "a", 1.5}, {{Side::target, 1}, "b", 2.0}};
  auto inc_s = build_incidence(s, 3);
  auto inc_t = build_incidence(t, 2);
  auto sim = attribute_similarity(inc_s, inc_t, embed_attribute_names(inc_s.names, std::nullopt, 16),
                                  embed_attribute_names(inc_t.names, std::nullopt, 16));
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(sim.values(0, j) == 0.0);
    CHECK(sim.values(2, j) == 0.0);
  }
  CHECK(sim.values(1, 0) > 0.0);

  auto empty = build_incidence(std::vector<AttributeInstance>{}, 2);
  auto none = attribute_similarity(empty, inc_t, num::Matrix(0, 16), embed_attribute_names(inc_t.names, std::nullopt, 16));
  CHECK(none.values == num::Matrix(2, 2));
  CHECK_THROWS_AS(attribute_similarity(inc_s, inc_t, num::Matrix(1, 8), num::Matrix(2, 16)), ShapeError);
}

TEST_CASE("attribute_similarity equals the instance-pair oracle") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> small(1, 8);
  std::uniform_int_distribution<std::size_t> count(0, 12);
  std::uniform_real_distribution<double> weight(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_s = trial == 0 ? 4 : small(rng);
    const std::size_t n_t = trial == 0 ? 4 : small(rng);
    const auto s = random_instances(rng, Side::source, n_s, trial == 0 ? 6 : count(rng));
    const auto t = random_instances(rng, Side::target, n_t, trial == 0 ? 6 : count(rng));
    const AttributeSimParams params{weight(rng), weight(rng), 1e-6};
    auto inc_s = build_incidence(s, n_s);
    auto inc_t = build_incidence(t, n_t);
    const num::Matrix k_s = test::random_matrix(rng, s.size(), 5);
    const num::Matrix k_t = test::random_matrix(rng, t.size(), 5);
    const auto sim = attribute_similarity(inc_s, inc_t, k_s, k_t, params);

    std::vector<std::size_t> es, et;
    std::vector<double> vs, vt;
    for (const auto& a : s) es.push_back(a.entity.index), vs.push_back(a.value);
    for (const auto& a : t) et.push_back(a.entity.index), vt.push_back(a.value);
    const auto expected = oracle::attribute_similarity(n_s, n_t, es, et, k_s, k_t, vs, vt, params.weight_name,
                                                       params.weight_value, params.epsilon);
    CHECK(oracle::max_scaled_diff(sim.values, expected) < 1e-9);
  }
}

TEST_CASE("value proximity is monotone in the value gap") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double a = g(rng), b = g(rng), c = g(rng);
    const double near = std::abs(a - b) < std::abs(a - c) ? b : c;
    const double far = near == b ? c : b;
    const std::vector<double> vs{a};
    const std::vector<double> vt{near, far};
    const auto p = value_proximity(vs, vt, 1e-6);
    CHECK(p(0, 0) >= p(0, 1));
    CHECK(p(0, 0) <= 1e6);
  }
}

TEST_CASE("visual_similarity") {
  std::vector<VisualEmbeddingSet> s(2), t(1);
  s[0] = {{Side::source, 0}, {{0.6, 0.8}}};
  s[1] = {{Side::source, 1}, {}};
  t[0] = {{Side::target, 0}, {{3.0, 4.0}}};
  const auto sim = visual_similarity(s, t, true);
  CHECK(sim.modality == Modality::visual);
  CHECK(sim.values(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sim.values(1, 0) == 0.0);

  std::vector<VisualEmbeddingSet> bad(1);
  bad[0] = {{Side::target, 0}, {{1.0, 2.0, 3.0}}};
  CHECK_THROWS_AS(visual_similarity(s, bad, true), ShapeError);

  std::vector<VisualEmbeddingSet> blank(2);
  CHECK(visual_similarity(blank, t, true).values == num::Matrix(2, 1));
  CHECK(visual_similarity(s, blank, false).values == num::Matrix(2, 2));
}

TEST_CASE("visual_similarity equals the all-pairs oracle and is swap-symmetric") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_sets = [&](Side side, std::size_t n, std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> size(lo, hi);
    std::vector<VisualEmbeddingSet> sets(n);
    for (std::size_t i = 0; i < n; ++i) {
      sets[i].entity = {side, i};
      const std::size_t k = size(rng);
      for (std::size_t p = 0; p < k; ++p) {
        std::vector<double> v(6);
        for (double& x : v) x = g(rng);
        sets[i].vectors.push_back(v);
      }
    }
    return sets;
  };
  {
    auto s = random_sets(Side::source, 1, 3, 3);
    auto t = random_sets(Side::target, 1, 2, 2);
    CHECK(std::abs(visual_similarity(s, t, false).values(0, 0) - oracle::visual_similarity(s, t, false)(0, 0)) <
          1e-12);
  }
  for (int trial = 0; trial < 30; ++trial) {
    auto s = random_sets(Side::source, 5, 0, 4);
    auto t = random_sets(Side::target, 4, 0, 4);
    for (bool normalize : {true, false}) {
      const auto sim = visual_similarity(s, t, normalize);
      CHECK(num::max_abs_diff(sim.values, oracle::visual_similarity(s, t, normalize)) < 1e-12);
      CHECK(visual_similarity(t, s, normalize).values == num::transpose(sim.values));
      if (normalize) {
        for (double v : sim.values.data()) {
          CHECK(v >= -1.0 - 1e-12);
          CHECK(v <= 1.0 + 1e-12);
        }
      }
    }
  }
}
