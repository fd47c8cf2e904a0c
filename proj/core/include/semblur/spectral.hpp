#pragma once

#include <cstdint>
#include <vector>

#include "semblur/matrix.hpp"

namespace semblur {

// Degree-normalized bipartite matrix D1^{-1/2} M D2^{-1/2}. Rows or columns
// whose sum is zero are exempted: their scale is zero, so the normalized row
// or column is zero. The largest singular value of a fully nonzero instance
// is 1 (attained by the degree vector), which downstream code exploits.
struct NormalizedMatrix {
  SpMat matrix;
  Vector row_sums;
  Vector col_sums;
  std::vector<Index> zero_rows;
  std::vector<Index> zero_cols;
};

NormalizedMatrix normalize_bipartite(const SpMat& m);

struct SvdOptions {
  int subspace = 0;        // Lanczos basis size; 0 picks max(2r+10, 20)
  int max_restarts = 500;
  double tol = 1e-10;      // residual bound relative to the leading value
  std::uint64_t seed = 7;  // start-vector seed
};

struct SvdResult {
  DenseMat left;   // rows x r, orthonormal columns
  DenseMat right;  // cols x r, orthonormal columns
  Vector values;   // r leading singular values, nonincreasing
  int restarts = 0;
  double max_residual = 0.0;
};

// Truncated SVD by Golub-Kahan-Lanczos bidiagonalization with full
// reorthogonalization and thick restarts. Every returned triplet satisfies
// ||A v - s u|| and ||A^T u - s v|| <= tol * s_max.
// Throws NoConvergence at the restart cap and RankDeficient when the matrix
// has fewer than r numerically nonzero singular values.
SvdResult truncated_svd(const SpMat& a, int r, const SvdOptions& opts = {});

// Known singular pairs to project out of the Krylov space; used to strip the
// trivial degree pair of a normalized bipartite matrix so the returned
// triplets are s_2..s_{r+1}.
struct KnownPair {
  Vector left;
  Vector right;
};

SvdResult truncated_svd_deflated(const SpMat& a, int r,
                                 const std::vector<KnownPair>& deflate,
                                 const SvdOptions& opts = {});

struct EmbedOptions {
  bool skip_leading = true;  // drop the trivial degree vector (default)
  SvdOptions svd;
};

struct SpectralEmbedding {
  DenseMat coords;         // docs x r document coordinates
  Vector singular_values;  // values of the vectors actually used
  std::vector<Index> zero_rows;  // exempted documents (zero coordinates)
};

// normalize_bipartite + truncated SVD; coordinates are the left singular
// vectors (no singular-value scaling).
SpectralEmbedding embed_documents(const SpMat& m, int r,
                                  const EmbedOptions& opts = {});

}  // namespace semblur
