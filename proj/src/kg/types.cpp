#include "mcsff/kg/types.hpp"

namespace mcsff::kg {

std::string_view to_string(Side side) { return side == Side::source ? "source" : "target"; }

std::size_t Vocabulary::intern(std::string_view token) {
  std::string key(token);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const std::size_t id = tokens_.size();
  tokens_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeGraph::visual_dim() const {
  for (const auto& set : visuals)
    if (!set.vectors.empty()) return set.vectors.front().size();
  return 0;
}

}  // namespace mcsff::kg
