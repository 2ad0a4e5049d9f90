#include "mcsff/kg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <string_view>

#include "mcsff/error.hpp"

namespace mcsff::kg {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

// Calls f(line_number, fields) for every data line.
template <typename F>
void for_each_record(const std::filesystem::path& path, F&& f) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t number = 0;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fields.clear();
    std::string_view rest(line);
    for (;;) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    f(number, fields);
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
}

void expect_fields(const std::filesystem::path& path, std::size_t line, const std::vector<std::string_view>& fields,
                   std::size_t expected) {
  if (fields.size() != expected) {
    throw ParseError(path.string(), line,
                     "expected " + std::to_string(expected) + " tab-separated fields, found " +
                         std::to_string(fields.size()));
  }
  for (auto f : fields) {
    if (f.empty()) throw ParseError(path.string(), line, "empty field");
  }
}

double parse_real(const std::filesystem::path& path, std::size_t line, std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(path.string(), line, "'" + std::string(text) + "' is not a number");
  }
  if (!std::isfinite(value)) {
    throw ParseError(path.string(), line, "non-finite value '" + std::string(text) + "'");
  }
  return value;
}

std::vector<double> parse_vector(const std::filesystem::path& path, std::size_t line, std::string_view text) {
  std::vector<double> out;
  for (;;) {
    const auto comma = text.find(',');
    out.push_back(parse_real(path, line, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

void write_vector(std::ostream& out, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    out << format_real(v[i]);
  }
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<RelationTriple> load_triples(const std::filesystem::path& path, Side side, Vocabulary& entities,
                                         Vocabulary& relations) {
  std::vector<RelationTriple> out;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string_view>& f) {
    expect_fields(path, line, f, 3);
    RelationTriple t;
    t.head = {side, entities.intern(f[0])};
    t.relation = relations.intern(f[1]);
    t.tail = {side, entities.intern(f[2])};
    out.push_back(t);
  });
  return out;
}

std::vector<AttributeInstance> load_attributes(const std::filesystem::path& path, Side side, Vocabulary& entities) {
  std::vector<AttributeInstance> out;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string_view>& f) {
    expect_fields(path, line, f, 3);
    const double value = parse_real(path, line, f[2]);
    out.push_back({{side, entities.intern(f[0])}, std::string(f[1]), value});
  });
  return out;
}

std::vector<VisualEmbeddingSet> load_visual_embeddings(const std::filesystem::path& path, Side side,
                                                       Vocabulary& entities, std::optional<std::size_t> expected_dim) {
  std::vector<std::pair<std::size_t, std::vector<double>>> rows;
  std::optional<std::size_t> dim = expected_dim;
  std::size_t dim_line = 0;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string_view>& f) {
    expect_fields(path, line, f, 2);
    std::vector<double> v = parse_vector(path, line, f[1]);
    if (!dim) {
      dim = v.size();
      dim_line = line;
    } else if (v.size() != *dim) {
      const std::string origin = dim_line ? "line " + std::to_string(dim_line) : std::string("expected");
      throw ParseError(path.string(), line,
                       "dimension mismatch: " + std::to_string(v.size()) + " vs " + std::to_string(*dim) + " (" +
                           origin + ")");
    }
    rows.emplace_back(entities.intern(f[0]), std::move(v));
  });
  std::vector<VisualEmbeddingSet> sets(entities.size());
  for (std::size_t i = 0; i < sets.size(); ++i) sets[i].entity = {side, i};
  for (auto& [entity, v] : rows) sets[entity].vectors.push_back(std::move(v));
  return sets;
}

KnowledgeGraph load_graph(const GraphFiles& files, Side side) {
  KnowledgeGraph kg;
  kg.side = side;
  kg.triples = load_triples(files.triples, side, kg.entities, kg.relations);
  if (!files.attributes.empty()) kg.attributes = load_attributes(files.attributes, side, kg.entities);
  if (!files.visuals.empty()) kg.visuals = load_visual_embeddings(files.visuals, side, kg.entities);
  kg.entity_count = kg.entities.size();
  kg.relation_count = kg.relations.size();
  const std::size_t before = kg.visuals.size();
  kg.visuals.resize(kg.entity_count);
  for (std::size_t i = before; i < kg.entity_count; ++i) kg.visuals[i].entity = {side, i};
  return kg;
}

std::vector<SeedAlignment> load_seeds(const std::filesystem::path& path, const Vocabulary& source,
                                      const Vocabulary& target) {
  std::vector<SeedAlignment> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string_view>& f) {
    expect_fields(path, line, f, 2);
    const auto s = source.find(f[0]);
    const auto t = target.find(f[1]);
    if (!s) {
      throw ValidationError(path.string() + ":" + std::to_string(line) + ": dangling source entity '" +
                            std::string(f[0]) + "'");
    }
    if (!t) {
      throw ValidationError(path.string() + ":" + std::to_string(line) + ": dangling target entity '" +
                            std::string(f[1]) + "'");
    }
    if (seen.emplace(*s, *t).second) out.push_back({{Side::source, *s}, {Side::target, *t}});
  });
  return out;
}

std::map<std::string, std::vector<double>> load_name_embeddings(const std::filesystem::path& path) {
  std::map<std::string, std::vector<double>> out;
  std::optional<std::size_t> dim;
  for_each_record(path, [&](std::size_t line, const std::vector<std::string_view>& f) {
    expect_fields(path, line, f, 2);
    std::vector<double> v = parse_vector(path, line, f[1]);
    if (dim && v.size() != *dim) {
      throw ParseError(path.string(), line,
                       "dimension mismatch: " + std::to_string(v.size()) + " vs " + std::to_string(*dim));
    }
    dim = v.size();
    out[std::string(f[0])] = std::move(v);
  });
  return out;
}

void write_triples(std::ostream& out, const KnowledgeGraph& kg) {
  for (const auto& t : kg.triples) {
    out << kg.entities.token(t.head.index) << '\t' << kg.relations.token(t.relation) << '\t'
        << kg.entities.token(t.tail.index) << '\n';
  }
}

void write_attributes(std::ostream& out, const KnowledgeGraph& kg) {
  for (const auto& a : kg.attributes) {
    out << kg.entities.token(a.entity.index) << '\t' << a.name << '\t' << format_real(a.value) << '\n';
  }
}

void write_visuals(std::ostream& out, const KnowledgeGraph& kg) {
  for (const auto& set : kg.visuals) {
    for (const auto& v : set.vectors) {
      out << kg.entities.token(set.entity.index) << '\t';
      write_vector(out, v);
      out << '\n';
    }
  }
}

void write_seeds(std::ostream& out, std::span<const SeedAlignment> seeds, const KnowledgeGraph& source,
                 const KnowledgeGraph& target) {
  for (const auto& s : seeds) {
    out << source.entities.token(s.source.index) << '\t' << target.entities.token(s.target.index) << '\n';
  }
}

void write_graph(const KnowledgeGraph& kg, const GraphFiles& files) {
  {
    auto out = open_output(files.triples);
    write_triples(out, kg);
    if (!out) throw IoError("write failure on '" + files.triples.string() + "'");
  }
  if (!files.attributes.empty()) {
    auto out = open_output(files.attributes);
    write_attributes(out, kg);
    if (!out) throw IoError("write failure on '" + files.attributes.string() + "'");
  }
  if (!files.visuals.empty()) {
    auto out = open_output(files.visuals);
    write_visuals(out, kg);
    if (!out) throw IoError("write failure on '" + files.visuals.string() + "'");
  }
}

void write_seeds(const std::filesystem::path& path, std::span<const SeedAlignment> seeds,
                 const KnowledgeGraph& source, const KnowledgeGraph& target) {
  auto out = open_output(path);
  write_seeds(out, seeds, source, target);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace mcsff::kg
