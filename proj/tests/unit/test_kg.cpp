#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mcsff/error.hpp"
#include "mcsff/kg/io.hpp"
#include "mcsff/kg/seeds.hpp"
#include "mcsff/kg/synth.hpp"
#include "mcsff/kg/validate.hpp"
#include "test_support.hpp"

using namespace mcsff;
using namespace mcsff::kg;

TEST_CASE("load_triples") {
  test::TempDir dir("triples");
  Vocabulary ents, rels;
  auto t = load_triples(dir.write("a.tsv", "0\tr0\t1\n1\tr0\t2\n"), Side::source, ents, rels);
  CHECK(t.size() == 2);
  CHECK(rels.size() == 1);
  CHECK(ents.size() == 3);
  CHECK(t[1].head.index == 1);
  CHECK(t[1].tail.index == 2);

  Vocabulary e2, r2;
  try {
    load_triples(dir.write("bad.tsv", "0\tr0\n"), Side::source, e2, r2);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }

  Vocabulary e3, r3;
  CHECK(load_triples(dir.write("empty.tsv", ""), Side::source, e3, r3).empty());

  Vocabulary e4, r4;
  auto c = load_triples(dir.write("c.tsv", "# header\n\na\tx\tb\r\n"), Side::target, e4, r4);
  REQUIRE(c.size() == 1);
  CHECK(e4.token(1) == "b");
  CHECK(c[0].head.side == Side::target);
}

TEST_CASE("load_triples interns MID strings densely") {
  test::TempDir dir("mids");
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 40);
  std::ostringstream file;
  std::vector<std::string> lines;
  for (int i = 0; i < 200; ++i) {
    const std::string line = "/m/0" + std::to_string(pick(rng)) + "\t/film/rel" + std::to_string(pick(rng) % 7) +
                             "\t/m/0" + std::to_string(pick(rng));
    lines.push_back(line);
    file << line << '\n';
  }
  Vocabulary ents, rels;
  auto triples = load_triples(dir.write("fb.tsv", file.str()), Side::source, ents, rels);

  // Independent count over the raw lines.
  std::set<std::string> entity_tokens, relation_tokens;
  for (const auto& line : lines) {
    std::istringstream in(line);
    std::string h, r, t;
    std::getline(in, h, '\t');
    std::getline(in, r, '\t');
    std::getline(in, t, '\t');
    entity_tokens.insert(h);
    entity_tokens.insert(t);
    relation_tokens.insert(r);
  }
  CHECK(triples.size() == lines.size());
  CHECK(ents.size() == entity_tokens.size());
  CHECK(rels.size() == relation_tokens.size());
  for (const auto& tr : triples) {
    CHECK(tr.head.index < ents.size());
    CHECK(tr.tail.index < ents.size());
  }
}

TEST_CASE("load_attributes") {
  test::TempDir dir("attrs");
  Vocabulary ents;
  auto one = load_attributes(dir.write("a.tsv", "0\theight\t180.0\n"), Side::source, ents);
  REQUIRE(one.size() == 1);
  CHECK(one[0].entity.index == 0);
  CHECK(one[0].name == "height");
  CHECK(one[0].value == 180.0);

  CHECK_THROWS_AS(load_attributes(dir.write("nan.tsv", "0\theight\tNaN\n"), Side::source, ents), ParseError);
  CHECK_THROWS_AS(load_attributes(dir.write("inf.tsv", "0\theight\tinf\n"), Side::source, ents), ParseError);
  CHECK_THROWS_AS(load_attributes(dir.write("txt.tsv", "0\theight\ttall\n"), Side::source, ents), ParseError);

  auto three = load_attributes(dir.write("b.tsv", "0\ta\t1\n1\tb\t2\n0\tc\t-3.5e2\n"), Side::source, ents);
  REQUIRE(three.size() == 3);
  CHECK(three[0].name == "a");
  CHECK(three[1].name == "b");
  CHECK(three[2].value == -350.0);
}

TEST_CASE("load_visual_embeddings") {
  test::TempDir dir("vis");
  Vocabulary ents;
  ents.intern("0");
  ents.intern("1");
  auto sets = load_visual_embeddings(dir.write("v.tsv", "0\t1,2,3,4\n0\t0.5,0,0,1\n"), Side::source, ents);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].vectors.size() == 2);
  CHECK(sets[0].dim() == 4);
  CHECK(sets[1].vectors.empty());

  try {
    load_visual_embeddings(dir.write("m.tsv", "0\t1,2,3,4\n1\t1,2,3\n"), Side::source, ents);
    FAIL("expected a dimension mismatch");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(e.line() == 2);
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('4') != std::string::npos);
  }
  CHECK_THROWS_AS(load_visual_embeddings(dir.write("x.tsv", "0\t1,2\n"), Side::source, ents, 3), ParseError);

  Vocabulary fresh;
  auto per_entity = load_visual_embeddings(dir.write("p.tsv", "a\t1,0\nb\t0,1\nc\t1,1\n"), Side::target, fresh);
  REQUIRE(per_entity.size() == 3);
  for (const auto& s : per_entity) CHECK(s.vectors.size() == 1);
}

TEST_CASE("load_seeds") {
  test::TempDir dir("seeds");
  Vocabulary s, t;
  for (int i = 0; i < 10; ++i) {
    s.intern(std::to_string(i));
    t.intern(std::to_string(i));
  }
  CHECK(load_seeds(dir.write("a.tsv", "0\t0\n1\t2\n"), s, t).size() == 2);
  auto dedup = load_seeds(dir.write("b.tsv", "3\t4\n3\t4\n5\t5\n"), s, t);
  REQUIRE(dedup.size() == 2);
  CHECK(dedup[0].source.index == 3);
  CHECK(dedup[1].source.index == 5);
  CHECK_THROWS_AS(load_seeds(dir.write("c.tsv", "999\t0\n"), s, t), ValidationError);
  CHECK_THROWS_AS(load_seeds(dir.write("d.tsv", "0\t999\n"), s, t), ValidationError);
}

namespace {

std::vector<SeedAlignment> make_seeds(std::size_t n) {
  std::vector<SeedAlignment> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back({{Side::source, i}, {Side::target, (i * 7) % n}});
  return seeds;
}

}  // namespace

TEST_CASE("split_seeds") {
  auto seeds = make_seeds(10);
  auto split = split_seeds(seeds, 0.2, 5);
  CHECK(split.train.size() == 2);
  CHECK(split.test.size() == 8);
  for (const auto& a : split.train)
    for (const auto& b : split.test) CHECK(a != b);

  auto again = split_seeds(seeds, 0.2, 5);
  CHECK(again.train == split.train);
  CHECK(again.test == split.test);

  // Round-half-up: 0.5 * 11 = 5.5 -> 6 training seeds, namely the first six
  // entries of the seeded permutation.
  auto eleven = make_seeds(11);
  auto half = split_seeds(eleven, 0.5, 17);
  CHECK(half.train.size() == 6);
  CHECK(half.test.size() == 5);
  std::vector<std::size_t> order(11);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(17);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < 6; ++i) CHECK(half.train[i] == eleven[order[i]]);

  CHECK_THROWS_AS(split_seeds(seeds, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_seeds(seeds, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(split_seeds(make_seeds(1), 0.5, 1), ConfigError);
}

TEST_CASE("split_seeds is a partition") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> count(2, 60);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    auto seeds = make_seeds(count(rng));
    const double f = frac(rng);
    const std::size_t k = train_size(seeds.size(), f);
    if (k == 0 || k == seeds.size()) continue;
    auto split = split_seeds(seeds, f, rng());
    std::vector<SeedAlignment> all = split.train;
    all.insert(all.end(), split.test.begin(), split.test.end());
    std::sort(all.begin(), all.end());
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    CHECK(all == sorted);
    CHECK(split.train.size() == k);
  }
}

TEST_CASE("validate_pair") {
  auto pair = generate_synthetic_pair(easy_preset());
  CHECK(validate_pair(pair.source, pair.target, pair.ground_truth).ok());

  auto seeds = pair.ground_truth;
  seeds[0].target.index = 10'000;
  auto report = validate_pair(pair.source, pair.target, seeds);
  CHECK(report.issues.size() == 1);
  CHECK(report.count(IssueKind::dangling_id) == 1);

  auto target = pair.target;
  for (auto& set : target.visuals) {
    if (!set.vectors.empty()) {
      set.vectors.push_back(std::vector<double>(3, 0.0));
      break;
    }
  }
  report = validate_pair(pair.source, target, pair.ground_truth);
  CHECK(report.issues.size() == 1);
  CHECK(report.count(IssueKind::dimension_mismatch) == 1);

  auto dup = pair.ground_truth;
  dup.push_back(dup.front());
  CHECK(validate_pair(pair.source, pair.target, dup).count(IssueKind::duplicate_seed) == 1);

  auto source = pair.source;
  source.attributes[0].value = std::numeric_limits<double>::infinity();
  source.triples[0].relation = 99;
  report = validate_pair(source, pair.target, pair.ground_truth);
  CHECK(report.count(IssueKind::non_finite) == 1);
  CHECK(report.count(IssueKind::dangling_id) == 1);
}

TEST_CASE("synthetic pair: noise-free clone is isomorphic") {
  SynthConfig c = easy_preset();
  c.noise_level = 0.0;
  auto pair = generate_synthetic_pair(c);
  REQUIRE(pair.ground_truth.size() == c.n_entities);
  std::vector<std::size_t> to_target(c.n_entities);
  std::set<std::size_t> targets;
  for (const auto& s : pair.ground_truth) {
    to_target[s.source.index] = s.target.index;
    targets.insert(s.target.index);
  }
  CHECK(targets.size() == c.n_entities);

  // Relations match by token across sides.
  auto rel_token_s = [&](std::size_t r) { return pair.source.relations.token(r); };
  auto rel_token_t = [&](std::size_t r) { return pair.target.relations.token(r); };
  std::multiset<std::tuple<std::size_t, std::string, std::size_t>> mapped, target;
  for (const auto& t : pair.source.triples) mapped.emplace(to_target[t.head.index], rel_token_s(t.relation), to_target[t.tail.index]);
  for (const auto& t : pair.target.triples) target.emplace(t.head.index, rel_token_t(t.relation), t.tail.index);
  CHECK(mapped == target);

  std::multiset<std::tuple<std::size_t, std::string, double>> ma, ta;
  for (const auto& a : pair.source.attributes) ma.emplace(to_target[a.entity.index], a.name, a.value);
  for (const auto& a : pair.target.attributes) ta.emplace(a.entity.index, a.name, a.value);
  CHECK(ma == ta);

  for (std::size_t e = 0; e < c.n_entities; ++e) {
    CHECK(pair.source.visuals[e].vectors == pair.target.visuals[to_target[e]].vectors);
  }
}

TEST_CASE("synthetic pair is deterministic and round-trips through files") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    SynthConfig c = trial % 2 ? discriminative_preset() : easy_preset();
    c.rng_seed = rng();
    c.n_entities = 10 + trial * 7;
    auto a = generate_synthetic_pair(c);
    auto b = generate_synthetic_pair(c);
    CHECK(a.source == b.source);
    CHECK(a.target == b.target);
    CHECK(a.ground_truth == b.ground_truth);
    CHECK(validate_pair(a.source, a.target, a.ground_truth).ok());

    test::TempDir dir("synth");
    GraphFiles fs{dir / "ts.tsv", dir / "as.tsv", dir / "vs.tsv"};
    GraphFiles ft{dir / "tt.tsv", dir / "at.tsv", dir / "vt.tsv"};
    write_graph(a.source, fs);
    write_graph(a.target, ft);
    write_seeds(dir / "seeds.tsv", a.ground_truth, a.source, a.target);
    auto s = load_graph(fs, Side::source);
    auto t = load_graph(ft, Side::target);
    CHECK(s == a.source);
    CHECK(t == a.target);
    CHECK(load_seeds(dir / "seeds.tsv", s.entities, t.entities) == a.ground_truth);
  }
}

TEST_CASE("synthetic pair honours missing-modality and rewire fractions") {
  SynthConfig c = discriminative_preset();
  auto pair = generate_synthetic_pair(c);
  std::size_t no_images = 0;
  for (const auto& s : pair.target.visuals) no_images += s.vectors.empty();
  CHECK(no_images == 24);  // round(0.3 * 80)
  std::set<std::size_t> with_attrs;
  for (const auto& a : pair.source.attributes) with_attrs.insert(a.entity.index);
  CHECK(with_attrs.size() == 56);
  CHECK_THROWS_AS(generate_synthetic_pair(SynthConfig{.n_entities = 1}), ConfigError);
}
