#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "../common/oracles.hpp"
#include "doctest.h"
#include "mcsff/consistency/checkpoint.hpp"
#include "mcsff/consistency/model.hpp"
#include "mcsff/error.hpp"
#include "mcsff/kg/synth.hpp"
#include "mcsff/numerics/gradcheck.hpp"
#include "test_support.hpp"

using namespace mcsff;
using namespace mcsff::cmci;
using kg::RelationTriple;
using kg::Side;

namespace {

RelationTriple edge(std::size_t h, std::size_t r, std::size_t t) { return {{Side::source, h}, r, {Side::source, t}}; }

std::vector<RelationTriple> random_graph(std::mt19937_64& rng, std::size_t n, std::size_t m, std::size_t n_rel) {
  std::uniform_int_distribution<std::size_t> node(0, n - 1), rel(0, n_rel - 1);
  std::vector<RelationTriple> out;
  while (out.size() < m) {
    std::size_t a = node(rng), b = node(rng);
    if (a != b) out.push_back(edge(a, rel(rng), b));
  }
  return out;
}

std::vector<std::size_t> identity_map(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double norm(std::span<const double> v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

struct LayerFixture {
  ad::Tape tape;
  ad::Var h, r;
  GatLayerVars vars;
};

}  // namespace

TEST_CASE("aggregate_modality") {
  using Items = std::vector<std::vector<std::vector<double>>>;
  SUBCASE("one item per entity is passed through") {
    Items items{{{1.5, -2.0}}, {{0.25, 4.0}}};
    auto t = aggregate_modality(items, 2);
    CHECK(t.values == num::Matrix::from_rows({{1.5, -2.0}, {0.25, 4.0}}));
    CHECK(t.present == std::vector<bool>{true, true});
  }
  SUBCASE("uniform and weighted means") {
    Items items{{{1.0, 0.0}, {0.0, 1.0}}};
    CHECK(aggregate_modality(items, 2).values == num::Matrix::from_rows({{0.5, 0.5}}));
    std::vector<std::vector<double>> w{{3.0, 1.0}};
    CHECK(aggregate_modality(items, 2, w).values == num::Matrix::from_rows({{0.75, 0.25}}));
  }
  SUBCASE("no items leaves a masked zero row") {
    Items items{{}, {{2.0, 2.0}}};
    auto t = aggregate_modality(items, 2);
    CHECK(t.present == std::vector<bool>{false, true});
    CHECK(t.values(0, 0) == 0.0);
    CHECK(t.values(0, 1) == 0.0);
  }
  SUBCASE("negative weight is rejected") {
    Items items{{{1.0}, {2.0}}};
    std::vector<std::vector<double>> w{{1.0, -1.0}};
    CHECK_THROWS_AS(aggregate_modality(items, 1, w), ConfigError);
  }
}

TEST_CASE("impute_missing") {
  SUBCASE("mean of two neighbours through identity and relu") {
    ModalityTable t{num::Matrix::from_rows({{0, 0}, {2, 0}, {0, 2}}), {false, true, true}};
    std::vector<RelationTriple> triples{edge(1, 0, 0), edge(0, 0, 2)};
    auto out = impute_missing(t, triples, num::Matrix::identity(2));
    CHECK(out.values == num::Matrix::from_rows({{1, 1}, {2, 0}, {0, 2}}));
    CHECK(out.present == std::vector<bool>{true, true, true});
  }
  SUBCASE("isolated masked node stays zero and masked") {
    ModalityTable t{num::Matrix::from_rows({{0, 0}, {2, 0}, {0, 2}}), {false, true, true}};
    std::vector<RelationTriple> triples{edge(1, 0, 2)};
    auto out = impute_missing(t, triples, num::Matrix::identity(2));
    CHECK(out.values(0, 0) == 0.0);
    CHECK(out.values(0, 1) == 0.0);
    CHECK_FALSE(out.present[0]);
  }
  SUBCASE("masked neighbours do not contribute") {
    ModalityTable t{num::Matrix::from_rows({{0.0}, {0.0}, {4.0}}), {false, false, true}};
    std::vector<RelationTriple> triples{edge(0, 0, 1), edge(0, 0, 2)};
    auto out = impute_missing(t, triples, num::Matrix::identity(1));
    CHECK(out.values(0, 0) == 4.0);
    CHECK(out.values(1, 0) == 0.0);
    CHECK_FALSE(out.present[1]);
  }
  SUBCASE("random 6-node graphs match the loop oracle") {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution keep(0.5);
    for (int trial = 0; trial < 50; ++trial) {
      auto triples = random_graph(rng, 6, 7, 2);
      num::Matrix e = test::random_matrix(rng, 6, 3);
      num::Matrix w0 = test::random_matrix(rng, 3, 3);
      std::vector<bool> present(6);
      for (std::size_t i = 0; i < 6; ++i) present[i] = keep(rng);
      for (std::size_t i = 0; i < 6; ++i) if (!present[i]) e.row(i)[0] = e.row(i)[1] = e.row(i)[2] = 0.0;
      for (bool symmetric : {false, true}) {
        auto out = impute_missing({e, present}, triples, w0, symmetric ? ImputeNorm::symmetric : ImputeNorm::in_degree);
        auto ref = oracle::impute(e, present, triples, w0, symmetric);
        CHECK(num::max_abs_diff(out.values, ref) < 1e-12);
      }
    }
  }
  SUBCASE("complete data is left untouched") {
    std::mt19937_64 rng(6);
    num::Matrix e = test::random_matrix(rng, 6, 4);
    auto out = impute_missing({e, std::vector<bool>(6, true)}, random_graph(rng, 6, 8, 2),
                              test::random_matrix(rng, 4, 4));
    CHECK(out.values == e);
  }
}

TEST_CASE("init_trainable") {
  CHECK(init_trainable(num::Matrix(3, 2), num::Matrix::identity(2), num::Matrix(1, 2)) == num::Matrix(3, 2));

  auto e0 = num::Matrix::from_rows({{1.0, 2.0}});
  auto w = num::Matrix::from_rows({{0.5, -1.0}, {0.25, 0.5}});
  auto b = num::Matrix::from_rows({{0.1, -0.2}});
  auto out = init_trainable(e0, w, b);
  CHECK(out(0, 0) == doctest::Approx(std::tanh(1.1)).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(std::tanh(-0.2)).epsilon(1e-15));

  // d sum(E1) / d b_c = sum over rows of 1 - tanh(pre)^2.
  std::mt19937_64 rng(7);
  num::Matrix x = test::random_matrix(rng, 5, 3);
  num::Matrix wr = test::random_matrix(rng, 3, 4, 0.5);
  num::Matrix br = test::random_matrix(rng, 1, 4, 0.5);
  ad::Tape tape;
  ad::Var bv = tape.parameter(br);
  ad::Var total = ad::sum(init_trainable(tape.constant(x), tape.constant(wr), bv));
  tape.backward(total);
  num::Matrix pre = num::matmul(x, wr);
  for (std::size_t c = 0; c < 4; ++c) {
    double expect = 0.0;
    for (std::size_t r = 0; r < 5; ++r) expect += 1.0 - std::pow(std::tanh(pre(r, c) + br(0, c)), 2);
    CHECK(bv.grad()(0, c) == doctest::Approx(expect).epsilon(1e-12));
  }
  auto fd = num::finite_difference_check(
      [&](ad::Tape& t, std::span<const ad::Var> p) {
        return ad::sum(init_trainable(t.constant(x), t.constant(wr), p[0]));
      },
      {br});
  CHECK(fd.max_rel_error < 1e-4);
}

TEST_CASE("relation_reflection") {
  std::vector<double> e1{1, 0, 0};
  CHECK(relation_reflection(e1, e1) == std::vector<double>{-1, 0, 0});
  std::vector<double> h{0, 2.5, -1};
  CHECK(relation_reflection(h, e1) == h);
  CHECK(relation_reflection(h, std::vector<double>{0, 0, 0}) == h);
  CHECK(relation_reflection(std::vector<double>{1, 0}, std::vector<double>{3, 0}) == std::vector<double>{-1, 0});
  CHECK_THROWS_AS(relation_reflection(h, std::vector<double>{1, 0}), ShapeError);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> hv(5), rv(5);
    for (auto& x : hv) x = g(rng);
    for (auto& x : rv) x = g(rng);
    auto once = relation_reflection(hv, rv);
    auto twice = relation_reflection(once, rv);
    CHECK(std::abs(norm(once) - norm(hv)) < 1e-12);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(twice[k] - hv[k]) < 1e-12);
  }

  // Row form against the vector form.
  num::Matrix hm = test::random_matrix(rng, 4, 5);
  num::Matrix rm = num::l2_normalize_rows(test::random_matrix(rng, 4, 5));
  ad::Tape tape;
  num::Matrix rows = reflect_rows(tape.constant(hm), tape.constant(rm)).value();
  for (std::size_t i = 0; i < 4; ++i) {
    auto ref = relation_reflection(hm.row(i), rm.row(i));
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(rows(i, k) - ref[k]) < 1e-12);
  }
}

TEST_CASE("build_attention_edges") {
  std::vector<RelationTriple> triples{edge(0, 1, 1), edge(2, 0, 1)};
  auto map = identity_map(2);
  auto e = build_attention_edges(triples, 3, map, 2);
  CHECK(e.size() == 7);
  CHECK(e.by_dst.length(0) == 2);
  CHECK(e.by_dst.length(1) == 3);
  CHECK(e.by_dst.length(2) == 2);
  // Self loop first, then triple order.
  CHECK(e.src[e.by_dst.begin(1)] == 1);
  CHECK(e.relation[e.by_dst.begin(1)] == 2);
  CHECK(e.src[e.by_dst.begin(1) + 1] == 0);
  CHECK(e.src[e.by_dst.begin(1) + 2] == 2);
  CHECK_THROWS_AS(build_attention_edges(std::vector<RelationTriple>{edge(0, 5, 1)}, 3, map, 2), ValidationError);
}

TEST_CASE("attention_scores") {
  std::mt19937_64 rng(9);
  auto make = [&](ad::Tape& tape, std::size_t n, std::size_t n_rel, std::size_t d, std::size_t da) {
    return std::tuple{tape.constant(test::random_matrix(rng, n, d)), tape.constant(test::random_matrix(rng, n_rel, d)),
                      GatLayerVars{tape.constant(test::random_matrix(rng, d, da)),
                                   tape.constant(test::random_matrix(rng, d, da)),
                                   tape.constant(test::random_matrix(rng, da, 1))}};
  };
  SUBCASE("single neighbour gets all the weight") {
    ad::Tape tape;
    auto [h, r, vars] = make(tape, 2, 1, 3, 2);
    auto edges = build_attention_edges(std::vector<RelationTriple>{edge(0, 0, 1)}, 2, identity_map(1), 1, false);
    auto alpha = attention_scores(h, r, edges, vars).value();
    CHECK(alpha == num::Matrix::from_rows({{1.0}, {1.0}}));
  }
  SUBCASE("identical neighbours split evenly") {
    ad::Tape tape;
    auto hm = num::Matrix::from_rows({{0.3, -0.1}, {1.0, 2.0}, {1.0, 2.0}});
    auto [h0, r, vars] = make(tape, 3, 1, 2, 2);
    auto edges = build_attention_edges(std::vector<RelationTriple>{edge(1, 0, 0), edge(2, 0, 0)}, 3, identity_map(1), 1,
                                       false);
    auto alpha = attention_scores(tape.constant(hm), r, edges, vars).value();
    CHECK(alpha(0, 0) == 0.5);
    CHECK(alpha(1, 0) == 0.5);
  }
  SUBCASE("dangling relation") {
    ad::Tape tape;
    auto [h, r, vars] = make(tape, 2, 1, 3, 2);
    auto edges = build_attention_edges(std::vector<RelationTriple>{edge(0, 0, 1)}, 2, identity_map(1), 4);
    CHECK_THROWS_AS(attention_scores(h, r, edges, vars), ValidationError);
  }
  SUBCASE("random 5-edge graphs match direct evaluation") {
    for (int trial = 0; trial < 30; ++trial) {
      ad::Tape tape;
      auto [h, r, vars] = make(tape, 5, 4, 3, 2);
      auto triples = random_graph(rng, 5, 5, 3);
      auto edges = build_attention_edges(triples, 5, identity_map(3), 3);
      auto alpha = attention_scores(h, r, edges, vars).value();
      auto ref = oracle::gat_layer(h.value(), r.value(), triples, 3, vars.w_rel.value(), vars.w_feat.value(),
                                   vars.attn.value(), 0.2, true);
      for (std::size_t i = 0; i < 5; ++i) {
        double total = 0.0;
        REQUIRE(ref.alpha[i].size() == edges.by_dst.length(i));
        for (std::size_t k = 0; k < ref.alpha[i].size(); ++k) {
          std::size_t e = edges.by_dst.begin(i) + k;
          CHECK(edges.src[e] == std::get<0>(ref.alpha[i][k]));
          CHECK(std::abs(alpha(e, 0) - std::get<2>(ref.alpha[i][k])) < 1e-12);
          total += alpha(e, 0);
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("gat_layer") {
  std::mt19937_64 rng(10);
  SUBCASE("self loop with zero relation is relu") {
    ad::Tape tape;
    auto hm = num::Matrix::from_rows({{0.5, -1.5, 2.0}});
    GatLayerVars vars{tape.constant(test::random_matrix(rng, 3, 2)), tape.constant(test::random_matrix(rng, 3, 2)),
                      tape.constant(test::random_matrix(rng, 2, 1))};
    auto edges = build_attention_edges({}, 1, {}, 0);
    auto out = gat_layer(tape.constant(hm), tape.constant(num::Matrix(1, 3)), edges, vars);
    CHECK(out.h.value() == num::Matrix::from_rows({{0.5, 0.0, 2.0}}));
  }
  SUBCASE("symmetric pair with equal states") {
    ad::Tape tape;
    auto hm = num::Matrix::from_rows({{0.4, 1.0}, {0.4, 1.0}});
    GatLayerVars vars{tape.constant(test::random_matrix(rng, 2, 2)), tape.constant(test::random_matrix(rng, 2, 2)),
                      tape.constant(test::random_matrix(rng, 2, 1))};
    auto edges = build_attention_edges(std::vector<RelationTriple>{edge(0, 0, 1)}, 2, identity_map(1), 1);
    num::Matrix rel = num::Matrix::from_rows({{0.6, -0.8}, {0.0, 0.0}});
    auto out = gat_layer(tape.constant(hm), tape.constant(rel), edges, vars).h.value();
    CHECK(out(0, 0) == out(1, 0));
    CHECK(out(0, 1) == out(1, 1));
  }
  SUBCASE("random 4-node graphs match the loop oracle") {
    for (int trial = 0; trial < 30; ++trial) {
      ad::Tape tape;
      num::Matrix hm = test::random_matrix(rng, 4, 3);
      num::Matrix rm = test::random_matrix(rng, 3, 3);
      for (double& x : rm.row(2)) x = 0.0;
      GatLayerVars vars{tape.constant(test::random_matrix(rng, 3, 2)), tape.constant(test::random_matrix(rng, 3, 2)),
                        tape.constant(test::random_matrix(rng, 2, 1))};
      auto triples = random_graph(rng, 4, 5, 2);
      auto edges = build_attention_edges(triples, 4, identity_map(2), 2);
      auto out = gat_layer(tape.constant(hm), tape.constant(rm), edges, vars).h.value();
      auto ref = oracle::gat_layer(hm, rm, triples, 2, vars.w_rel.value(), vars.w_feat.value(), vars.attn.value(), 0.2,
                                   true);
      CHECK(num::max_abs_diff(out, ref.h) < 1e-10);
    }
  }
  SUBCASE("relabelling entities permutes the output exactly") {
    for (int trial = 0; trial < 20; ++trial) {
      num::Matrix hm = test::random_matrix(rng, 6, 4);
      num::Matrix rm = test::random_matrix(rng, 4, 4);
      num::Matrix wr = test::random_matrix(rng, 4, 3), wf = test::random_matrix(rng, 4, 3), a = test::random_matrix(rng, 3, 1);
      auto triples = random_graph(rng, 6, 9, 3);
      std::vector<std::size_t> perm = identity_map(6);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<RelationTriple> moved;
      for (const auto& t : triples) moved.push_back(edge(perm[t.head.index], t.relation, perm[t.tail.index]));
      num::Matrix hp(6, 4);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < 4; ++k) hp(perm[i], k) = hm(i, k);

      auto run = [&](const num::Matrix& h, const std::vector<RelationTriple>& tr) {
        ad::Tape tape;
        GatLayerVars vars{tape.constant(wr), tape.constant(wf), tape.constant(a)};
        return gat_layer(tape.constant(h), tape.constant(rm), build_attention_edges(tr, 6, identity_map(3), 3), vars)
            .h.value();
      };
      num::Matrix base = run(hm, triples), relabelled = run(hp, moved);
      bool exact = true;
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < 4; ++k) exact = exact && relabelled(perm[i], k) == base(i, k);
      CHECK(exact);
    }
  }
}

TEST_CASE("fuse_concat") {
  std::mt19937_64 rng(11);
  ad::Tape tape;
  std::vector<num::Matrix> parts;
  std::vector<ad::Var> vars;
  for (int s = 0; s < 5; ++s) {
    parts.push_back(test::random_matrix(rng, 3, 2));
    vars.push_back(tape.constant(parts.back()));
  }
  auto fused = fuse_concat(vars[0], vars[1], vars[2], vars[3], vars[4]);
  CHECK(fused.values.cols() == 10);
  CHECK(fused.offsets == std::array<std::size_t, 6>{0, 2, 4, 6, 8, 10});
  CHECK(ad::slice_cols(fused.values, fused.offsets[kName], fused.offsets[kName + 1]).value() == parts[1]);
  CHECK(fused.width(kEntity) == 2);

  ad::Var z = tape.constant(num::Matrix(2, 2));
  CHECK(fuse_concat(z, z, z, z, z).values.value() == num::Matrix(2, 10));
  CHECK_THROWS_AS(fuse_concat(vars[0], z, vars[2], vars[3], vars[4]), ShapeError);
}

namespace {

kg::SyntheticPair small_pair(std::uint64_t seed) {
  kg::SynthConfig c;
  c.n_entities = 8;
  c.n_relations = 3;
  c.triple_density = 1.5;
  c.attr_per_entity = 2;
  c.attr_vocab = 4;
  c.img_per_entity = 1;
  c.d_img = 4;
  c.noise_level = 0.1;
  c.missing_visual_fraction = 0.25;
  c.missing_attr_fraction = 0.25;
  c.rng_seed = seed;
  return kg::generate_synthetic_pair(c);
}

ModelConfig small_model() {
  ModelConfig m;
  m.dim = 4;
  m.attention_dim = 3;
  m.name_dim = 6;
  m.value_features = 4;
  return m;
}

}  // namespace

TEST_CASE("model forward") {
  auto pair = small_pair(3);
  auto cfg = small_model();
  auto inputs = prepare_inputs(pair.source, pair.target, cfg);
  CHECK(inputs.relation_count == 3);
  CHECK(std::count(inputs.source.visual.present.begin(), inputs.source.visual.present.end(), false) == 2);

  auto params = init_parameters(inputs, cfg, 42);
  CHECK(params == init_parameters(inputs, cfg, 42));
  CHECK_FALSE(params == init_parameters(inputs, cfg, 43));

  ad::Tape tape;
  num::BoundParameters bound(tape, params);
  auto out = forward(bound, inputs, cfg);
  CHECK(out.source.fused.values.rows() == 8);
  CHECK(out.source.fused.values.cols() == 20);
  CHECK(out.target.fused.offsets[kSegmentCount] == 20);
  CHECK(out.source.attention.size() == kChannelCount * cfg.layers);
  for (const auto& alpha : out.source.attention) {
    const auto& seg = inputs.source.edges.by_dst;
    for (std::size_t i = 0; i < seg.segment_count(); ++i) {
      double total = 0.0;
      for (std::size_t e = seg.begin(i); e < seg.end(i); ++e) total += alpha.value()(e, 0);
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }

  auto [s, t] = embed(params, inputs, cfg);
  CHECK(s == out.source.fused.values.value());
  CHECK(t == out.target.fused.values.value());

  cfg.dense_readout = true;
  auto with_readout = init_parameters(inputs, cfg, 42);
  CHECK(with_readout.contains("readout/entity/W"));
  CHECK(embed(with_readout, inputs, cfg).first.cols() == 20);
}

TEST_CASE("model is differentiable end to end") {
  auto pair = small_pair(4);
  auto cfg = small_model();
  auto inputs = prepare_inputs(pair.source, pair.target, cfg);
  auto params = init_parameters(inputs, cfg, 5);
  std::mt19937_64 rng(12);
  num::Matrix cs = test::random_matrix(rng, 8, 20), ct = test::random_matrix(rng, 8, 20);
  auto names = params.names();
  std::vector<num::Matrix> values;
  // Zero biases put isolated zero rows exactly on a relu kink; move off it.
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (const auto& n : names) {
    values.push_back(params.get(n));
    for (double& x : values.back().data()) x += jitter(rng);
  }

  auto fd = num::finite_difference_check(
      [&](ad::Tape& t, std::span<const ad::Var> leaves) {
        num::BoundParameters bound(names, leaves);
        auto out = forward(bound, inputs, cfg);
        return ad::add(ad::sum(ad::hadamard(out.source.fused.values, t.constant(cs))),
                       ad::sum(ad::hadamard(out.target.fused.values, t.constant(ct))));
      },
      values);
  CAPTURE(names[fd.worst_param]);
  CAPTURE(fd.analytic);
  CAPTURE(fd.numeric);
  CHECK(fd.max_rel_error < 1e-4);
}

TEST_CASE("checkpoint round trip") {
  auto pair = small_pair(5);
  auto cfg = small_model();
  auto params = init_parameters(prepare_inputs(pair.source, pair.target, cfg), cfg, 9);
  std::ostringstream first;
  write_checkpoint(first, params);
  std::istringstream in(first.str());
  auto loaded = read_checkpoint(in);
  CHECK(loaded == params);
  std::ostringstream second;
  write_checkpoint(second, loaded);
  CHECK(second.str() == first.str());
  CHECK(first.str().substr(0, 8) == "MCSFFCK1");

  test::TempDir dir("ckpt");
  write_checkpoint(dir / "p.bin", params);
  CHECK(test::read_file(dir / "p.bin") == first.str());
  CHECK(read_checkpoint(dir / "p.bin") == params);

  std::istringstream bad("NOTMAGIC");
  CHECK_THROWS_AS(read_checkpoint(bad), IoError);
  std::istringstream truncated(first.str().substr(0, first.str().size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), IoError);
}
