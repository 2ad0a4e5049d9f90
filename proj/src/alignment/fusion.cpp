#include "mcsff/alignment/fusion.hpp"

#include <algorithm>
#include <array>

#include "mcsff/error.hpp"
#include "mcsff/numerics/ops.hpp"

namespace mcsff::align {

SimilarityMatrix entity_similarity(const num::Matrix& lvec, const num::Matrix& rvec) {
  if (lvec.cols() != rvec.cols()) {
    throw ShapeError("entity_similarity: " + num::shape_string(lvec) + " vs " + num::shape_string(rvec));
  }
  return {specificity::Modality::entity, num::matmul_nt(num::l2_normalize_rows(lvec), num::l2_normalize_rows(rvec))};
}

num::Matrix minmax_scale(const num::Matrix& m) {
  num::Matrix out(m.rows(), m.cols());
  if (m.empty()) return out;
  auto [lo, hi] = std::minmax_element(m.data().begin(), m.data().end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = (m.data()[i] - *lo) / span;
  return out;
}

SimilarityMatrix fuse_similarity(const num::Matrix* s_entity, const num::Matrix* s_visual,
                                 const num::Matrix* s_attribute, const FusionWeights& weights, bool normalize) {
  const std::array<const num::Matrix*, 3> inputs{s_entity, s_visual, s_attribute};
  const std::array<double, 3> lambda{weights.entity, weights.visual, weights.attribute};
  for (double l : lambda) {
    if (!(l >= 0.0)) throw ConfigError("fusion weights must be non-negative");
  }
  const num::Matrix* shape = nullptr;
  for (const auto* m : inputs) {
    if (!m) continue;
    if (shape && !num::same_shape(*m, *shape)) {
      throw ShapeError("fuse_similarity: " + num::shape_string(*m) + " vs " + num::shape_string(*shape));
    }
    shape = m;
  }
  if (!shape) throw ConfigError("fuse_similarity: no similarity matrix given");
  num::Matrix out(shape->rows(), shape->cols());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k] || lambda[k] == 0.0) continue;
    const num::Matrix scaled = normalize ? minmax_scale(*inputs[k]) : *inputs[k];
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += lambda[k] * scaled.data()[i];
  }
  return {specificity::Modality::fused, std::move(out)};
}

}  // namespace mcsff::align
