#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcsff/kg/types.hpp"

namespace mcsff::kg {

enum class IssueKind { dangling_id, dimension_mismatch, non_finite, empty_name, side_mismatch, duplicate_seed };

std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  IssueKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
  std::size_t count(IssueKind kind) const;
};

ValidationReport validate_graph(const KnowledgeGraph& kg);

// Checks both graphs, the shared image dimension and the seeds.
ValidationReport validate_pair(const KnowledgeGraph& source, const KnowledgeGraph& target,
                               std::span<const SeedAlignment> seeds);

void print_report(std::ostream& out, const ValidationReport& report);

}  // namespace mcsff::kg
