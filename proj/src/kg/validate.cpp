#include "mcsff/kg/validate.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace mcsff::kg {

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::dangling_id: return "dangling_id";
    case IssueKind::dimension_mismatch: return "dimension_mismatch";
    case IssueKind::non_finite: return "non_finite";
    case IssueKind::empty_name: return "empty_name";
    case IssueKind::side_mismatch: return "side_mismatch";
    case IssueKind::duplicate_seed: return "duplicate_seed";
  }
  return "unknown";
}

std::size_t ValidationReport::count(IssueKind kind) const {
  std::size_t n = 0;
  for (const auto& issue : issues) n += issue.kind == kind;
  return n;
}

namespace {

class Checker {
 public:
  explicit Checker(ValidationReport& report) : report_(report) {}

  void entity(const KnowledgeGraph& kg, const EntityId& id, const std::string& where) {
    if (id.side != kg.side) {
      add(IssueKind::side_mismatch, where + ": entity " + std::to_string(id.index) + " belongs to the " +
                                        std::string(to_string(id.side)) + " side");
    }
    if (id.index >= kg.entity_count) {
      add(IssueKind::dangling_id, where + ": entity " + std::to_string(id.index) + " >= entity count " +
                                      std::to_string(kg.entity_count));
    }
  }

  void add(IssueKind kind, std::string message) { report_.issues.push_back({kind, std::move(message)}); }

 private:
  ValidationReport& report_;
};

void check_graph(const KnowledgeGraph& kg, Checker& check) {
  const std::string side(to_string(kg.side));
  for (std::size_t i = 0; i < kg.triples.size(); ++i) {
    const auto& t = kg.triples[i];
    const std::string where = side + " triple " + std::to_string(i);
    check.entity(kg, t.head, where);
    check.entity(kg, t.tail, where);
    if (t.relation >= kg.relation_count) {
      check.add(IssueKind::dangling_id, where + ": relation " + std::to_string(t.relation) + " >= relation count " +
                                            std::to_string(kg.relation_count));
    }
  }
  for (std::size_t i = 0; i < kg.attributes.size(); ++i) {
    const auto& a = kg.attributes[i];
    const std::string where = side + " attribute " + std::to_string(i);
    check.entity(kg, a.entity, where);
    if (a.name.empty()) check.add(IssueKind::empty_name, where + ": empty name token");
    if (!std::isfinite(a.value)) check.add(IssueKind::non_finite, where + ": non-finite value");
  }
  if (kg.visuals.size() > kg.entity_count) {
    check.add(IssueKind::dangling_id, side + ": " + std::to_string(kg.visuals.size()) + " visual sets for " +
                                          std::to_string(kg.entity_count) + " entities");
  }
  const std::size_t dim = kg.visual_dim();
  for (const auto& set : kg.visuals) {
    const std::string where = side + " visual set of entity " + std::to_string(set.entity.index);
    check.entity(kg, set.entity, where);
    bool finite = true;
    bool consistent = true;
    for (const auto& v : set.vectors) {
      consistent = consistent && v.size() == dim;
      for (double x : v) finite = finite && std::isfinite(x);
    }
    if (!consistent) check.add(IssueKind::dimension_mismatch, where + ": vectors differ from dimension " + std::to_string(dim));
    if (!finite) check.add(IssueKind::non_finite, where + ": non-finite component");
  }
}

}  // namespace

ValidationReport validate_graph(const KnowledgeGraph& kg) {
  ValidationReport report;
  Checker check(report);
  check_graph(kg, check);
  return report;
}

ValidationReport validate_pair(const KnowledgeGraph& source, const KnowledgeGraph& target,
                               std::span<const SeedAlignment> seeds) {
  ValidationReport report;
  Checker check(report);
  if (source.side != Side::source) check.add(IssueKind::side_mismatch, "first graph is not the source side");
  if (target.side != Side::target) check.add(IssueKind::side_mismatch, "second graph is not the target side");
  check_graph(source, check);
  check_graph(target, check);

  const std::size_t ds = source.visual_dim();
  const std::size_t dt = target.visual_dim();
  if (ds != 0 && dt != 0 && ds != dt) {
    check.add(IssueKind::dimension_mismatch,
              "visual dimension differs across sides: " + std::to_string(ds) + " vs " + std::to_string(dt));
  }

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::map<std::size_t, std::size_t> source_uses;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& s = seeds[i];
    const std::string where = "seed " + std::to_string(i);
    check.entity(source, s.source, where);
    check.entity(target, s.target, where);
    if (!pairs.emplace(s.source.index, s.target.index).second) {
      check.add(IssueKind::duplicate_seed, where + ": duplicate pair");
    } else if (++source_uses[s.source.index] == 2) {
      check.add(IssueKind::duplicate_seed, where + ": source entity " + std::to_string(s.source.index) +
                                               " is aligned more than once");
    }
  }
  return report;
}

void print_report(std::ostream& out, const ValidationReport& report) {
  if (report.ok()) {
    out << "validation: ok\n";
    return;
  }
  std::map<std::string_view, std::size_t> counts;
  for (const auto& issue : report.issues) {
    ++counts[to_string(issue.kind)];
    out << "error\t" << to_string(issue.kind) << '\t' << issue.message << '\n';
  }
  for (const auto& [kind, n] : counts) out << "count\t" << kind << '\t' << n << '\n';
}

}  // namespace mcsff::kg
