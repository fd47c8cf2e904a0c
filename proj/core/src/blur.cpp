#include "semblur/blur.hpp"

#include <cmath>

#include "semblur/error.hpp"

namespace semblur {

BlurOperator build_blur_operator(const NeighborhoodIndex& index,
                                 const BlurOptions& opts) {
  const Index vocab_size = static_cast<Index>(index.table().row_of.size());
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(vocab_size) * (index.k() + 1));

  std::vector<bool> covered(vocab_size, false);
  for (Index t : index.covered_terms()) covered[t] = true;

  for (Index term = 0; term < vocab_size; ++term) {
    if (!covered[term]) {
      trips.emplace_back(term, term, 1.0);
      continue;
    }
    const Neighborhood& nb = index.neighborhood(term);
    if (nb.sigma <= 0.0) {
      // coincident neighborhood: uniform over the set
      const double w = 1.0 / static_cast<double>(nb.terms.size());
      for (Index j : nb.terms) trips.emplace_back(term, j, w);
      continue;
    }
    const double inv_sigma2 = 1.0 / (nb.sigma * nb.sigma);
    std::vector<double> kernel(nb.terms.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < nb.terms.size(); ++i) {
      kernel[i] = std::exp(-nb.distances[i] * nb.distances[i] * inv_sigma2);
      mass += kernel[i];
    }
    for (std::size_t i = 0; i < nb.terms.size(); ++i) {
      const double w = kernel[i] / mass;
      if (w >= opts.weight_floor) trips.emplace_back(term, nb.terms[i], w);
    }
  }

  BlurOperator op;
  op.weights.resize(vocab_size, vocab_size);
  op.weights.setFromTriplets(trips.begin(), trips.end());
  return op;
}

SpMat apply_blur(const SpMat& occurrence, const BlurOperator& op) {
  if (occurrence.cols() != op.weights.rows())
    throw Error(ErrorCode::DimensionMismatch,
                "occurrence has " + std::to_string(occurrence.cols()) +
                    " columns but blur operator expects " +
                    std::to_string(op.weights.rows()));
  SpMat result = occurrence * op.weights;
  result.prune(0.0);
  return result;
}

}  // namespace semblur
