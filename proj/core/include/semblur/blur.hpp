#pragma once

#include "semblur/embeddings.hpp"
#include "semblur/matrix.hpp"

namespace semblur {

// Semantic term blurring. Each covered term k spreads its unit occurrence
// weight over its self-inclusive embedding neighborhood with a self-tuned
// Gaussian:
//
//   W(k, j) = exp(-d(k, j)^2 / sigma_k^2) / s_k     for j in knn(k)
//   s_k     = sum of those kernel values over the whole neighborhood
//             (the self term contributes exp(0) = 1)
//   sigma_k = max distance inside knn(k)
//
// so every row of W sums to 1 and DSE = DT * W preserves document row sums.
// Uncovered terms keep an identity row. When sigma_k is 0 (fully coincident
// neighborhood) the weights fall back to uniform over the coincident set.
struct BlurOperator {
  SpMat weights;  // |T| x |T|, row-stochastic
};

struct BlurOptions {
  // kernel values below this are dropped from W to preserve sparsity
  double weight_floor = 1e-15;
};

BlurOperator build_blur_operator(const NeighborhoodIndex& index,
                                 const BlurOptions& opts = {});

// DSE = DT * W. Throws DimensionMismatch when shapes disagree.
SpMat apply_blur(const SpMat& occurrence, const BlurOperator& op);

}  // namespace semblur
