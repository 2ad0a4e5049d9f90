#pragma once

#include "mcsff/numerics/matrix.hpp"
#include "mcsff/specificity/similarity.hpp"

namespace mcsff::align {

using specificity::SimilarityMatrix;

struct FusionWeights {
  double entity = 1.0;     // lambda_E
  double visual = 0.2;     // lambda_I
  double attribute = 0.2;  // lambda_A

  friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

// S^E = Lvec Rvec^T after unit-normalizing the rows of both sides.
SimilarityMatrix entity_similarity(const num::Matrix& lvec, const num::Matrix& rvec);

// (x - min) / (max - min); a constant matrix maps to zeros.
num::Matrix minmax_scale(const num::Matrix& m);

// lambda_E S^E + lambda_I S^I + lambda_A S^A. A null input contributes zero;
// with normalize each input is min-max scaled first.
SimilarityMatrix fuse_similarity(const num::Matrix* s_entity, const num::Matrix* s_visual,
                                 const num::Matrix* s_attribute, const FusionWeights& weights, bool normalize = true);

}  // namespace mcsff::align
