#include "semblur/spectral.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "semblur/error.hpp"
#include "semblur/rng.hpp"

namespace semblur {

NormalizedMatrix normalize_bipartite(const SpMat& m) {
  NormalizedMatrix out;
  out.row_sums = row_sums(m);
  out.col_sums = col_sums(m);
  Vector rscale(m.rows()), cscale(m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    if (out.row_sums[i] > 0.0) {
      rscale[i] = 1.0 / std::sqrt(out.row_sums[i]);
    } else {
      rscale[i] = 0.0;
      out.zero_rows.push_back(i);
    }
  }
  for (Index j = 0; j < m.cols(); ++j) {
    if (out.col_sums[j] > 0.0) {
      cscale[j] = 1.0 / std::sqrt(out.col_sums[j]);
    } else {
      cscale[j] = 0.0;
      out.zero_cols.push_back(j);
    }
  }
  out.matrix = m;
  for (Index i = 0; i < out.matrix.outerSize(); ++i)
    for (SpMat::InnerIterator it(out.matrix, i); it; ++it)
      it.valueRef() *= rscale[it.row()] * cscale[it.col()];
  return out;
}

namespace {

// Lanczos bidiagonalization state with full reorthogonalization and thick
// restarts (Baglama-Reichel style). Deflation pairs are treated as already
// converged singular directions: matvecs subtract them and every new basis
// vector is orthogonalized against them.
class LanczosSvd {
 public:
  LanczosSvd(const SpMat& a, int r, const std::vector<KnownPair>& deflate,
             const SvdOptions& opts)
      : a_(a), r_(r), deflate_(deflate), opts_(opts), rng_(opts.seed) {
    const Index min_dim = std::min(a_.rows(), a_.cols());
    if (r_ < 1 || r_ > min_dim - 1)
      throw Error(ErrorCode::ConfigError,
                  "svd rank must satisfy 1 <= r <= min(rows, cols) - 1");
    // deflated directions shrink the reachable subspace
    const Index available = min_dim - static_cast<Index>(deflate_.size());
    if (r_ > available)
      throw Error(ErrorCode::ConfigError,
                  "svd rank exceeds the dimension left after deflation");
    m_ = opts_.subspace > 0 ? opts_.subspace : std::max(2 * r_ + 10, 20);
    m_ = std::max(m_, std::min<Index>(r_ + 6, available));
    m_ = std::min<Index>(m_, available);
    scale_ = 0.0;
    for (Index i = 0; i < a_.outerSize(); ++i)
      for (SpMat::InnerIterator it(a_, i); it; ++it)
        scale_ += it.value() * it.value();
    scale_ = std::sqrt(scale_);
    zero_tol_ = 1e-13 * std::max(scale_, 1e-300);
  }

  SvdResult run() {
    if (scale_ == 0.0)
      throw Error(ErrorCode::RankDeficient, "matrix is numerically zero");
    u_.resize(a_.rows(), m_);
    v_.resize(a_.cols(), m_);
    b_ = DenseMat::Zero(m_, m_);

    Vector v0 = random_unit(a_.cols());
    ortho_against_deflation_right(v0);
    normalize_or_random(v0, a_.cols(), true);
    v_.col(0) = v0;
    Index filled = 0;  // columns of U/V that hold restart Ritz vectors

    for (int cycle = 0; cycle < opts_.max_restarts; ++cycle) {
      extend_basis(filled);
      Eigen::JacobiSVD<DenseMat> small(
          b_, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vector& s = small.singularValues();
      const DenseMat& x = small.matrixU();

      double max_res = 0.0;
      for (int i = 0; i < r_; ++i)
        max_res = std::max(max_res, beta_last_ * std::abs(x(m_ - 1, i)));
      const double bound = opts_.tol * std::max(s[0], 1e-300);
      if (max_res <= bound) {
        return finish(small, cycle, max_res);
      }

      // thick restart: keep leading Ritz triplets plus the residual direction
      const Index keep = std::min<Index>(r_ + 4, m_ - 2);
      DenseMat new_u = u_ * x.leftCols(keep);
      DenseMat new_v = v_ * small.matrixV().leftCols(keep);
      u_.leftCols(keep) = new_u;
      v_.leftCols(keep) = new_v;
      b_.setZero();
      for (Index i = 0; i < keep; ++i) {
        b_(i, i) = s[i];
        b_(i, keep) = beta_last_ * x(m_ - 1, i);  // arrow column of A v_next
      }
      Vector carried =
          v_next_valid_ ? v_next_ : random_unit(a_.cols());
      ortho_against_deflation_right(carried);
      reorthogonalize(v_, keep, carried);
      normalize_or_random(carried, a_.cols(), true, keep);
      v_.col(keep) = carried;
      filled = keep;
    }
    throw Error(ErrorCode::NoConvergence,
                "svd did not converge within restart cap");
  }

 private:
  Vector random_unit(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = rng_.normal();
    const double norm = v.norm();
    return norm > 0 ? Vector(v / norm) : Vector(Vector::Unit(n, 0));
  }

  void ortho_against_deflation_right(Vector& v) const {
    for (const auto& p : deflate_) v -= p.right * p.right.dot(v);
  }
  void ortho_against_deflation_left(Vector& u) const {
    for (const auto& p : deflate_) u -= p.left * p.left.dot(u);
  }

  // twice-is-enough classical Gram-Schmidt against the first `count` columns
  static void reorthogonalize(const DenseMat& basis, Index count, Vector& w) {
    if (count <= 0) return;
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(count) * (basis.leftCols(count).transpose() * w);
  }

  // replace a vanished direction with a random vector orthogonal to the
  // basis built so far; returns false when even that fails (exhausted space)
  void normalize_or_random(Vector& w, Index dim, bool right, Index count = 0) {
    double norm = w.norm();
    if (norm > zero_tol_) {
      w /= norm;
      return;
    }
    for (int attempt = 0; attempt < 5; ++attempt) {
      w = random_unit(dim);
      if (right) {
        ortho_against_deflation_right(w);
        reorthogonalize(v_, count, w);
      } else {
        ortho_against_deflation_left(w);
        reorthogonalize(u_, count, w);
      }
      norm = w.norm();
      if (norm > 1e-6) {
        w /= norm;
        return;
      }
    }
    throw Error(ErrorCode::RankDeficient, "cannot extend orthonormal basis");
  }

  // restriction of A to the orthogonal complement of the deflated pairs:
  // project the input, apply, project the output
  Vector apply(const Vector& v) const {
    Vector vin = v;
    for (const auto& p : deflate_) vin -= p.right * p.right.dot(vin);
    Vector u = a_ * vin;
    for (const auto& p : deflate_) u -= p.left * p.left.dot(u);
    return u;
  }
  Vector apply_transpose(const Vector& u) const {
    Vector uin = u;
    for (const auto& p : deflate_) uin -= p.left * p.left.dot(uin);
    Vector v = a_.transpose() * uin;
    for (const auto& p : deflate_) v -= p.right * p.right.dot(v);
    return v;
  }

  // grows the factorization from column `from` to the full subspace size,
  // leaving the final residual in v_next_ / beta_last_
  void extend_basis(Index from) {
    for (Index j = from; j < m_; ++j) {
      Vector u = apply(v_.col(j));
      if (j > 0) u -= u_.leftCols(j) * b_.topRows(j).col(j);
      ortho_against_deflation_left(u);
      reorthogonalize(u_, j, u);
      const double alpha = u.norm();
      if (alpha > zero_tol_) {
        b_(j, j) = alpha;
        u /= alpha;
      } else {
        b_(j, j) = 0.0;
        normalize_or_random(u, a_.rows(), false, j);
      }
      u_.col(j) = u;

      Vector w = apply_transpose(u_.col(j));
      w -= b_(j, j) * v_.col(j);
      ortho_against_deflation_right(w);
      reorthogonalize(v_, j + 1, w);
      const double beta = w.norm();
      if (j + 1 < m_) {
        if (beta > zero_tol_) {
          b_(j, j + 1) = beta;
          w /= beta;
        } else {
          b_(j, j + 1) = 0.0;
          normalize_or_random(w, a_.cols(), true, j + 1);
        }
        v_.col(j + 1) = w;
      } else {
        // zero final residual means the factorization is exact; every Ritz
        // residual vanishes and the cycle converges, so v_next_ is unused
        if (beta > zero_tol_) {
          beta_last_ = beta;
          v_next_ = w / beta;
          v_next_valid_ = true;
        } else {
          beta_last_ = 0.0;
          v_next_valid_ = false;
        }
      }
    }
  }

  SvdResult finish(const Eigen::JacobiSVD<DenseMat>& small, int cycles,
                   double max_res) const {
    const Vector& s = small.singularValues();
    const double rank_tol =
        static_cast<double>(std::max(a_.rows(), a_.cols())) *
        std::numeric_limits<double>::epsilon() * std::max(s[0], scale_);
    int nonzero = 0;
    for (int i = 0; i < r_; ++i)
      if (s[i] > rank_tol) ++nonzero;
    if (nonzero < r_)
      throw Error(ErrorCode::RankDeficient,
                  "matrix has fewer than " + std::to_string(r_) +
                      " nonzero singular values");
    SvdResult res;
    res.values = s.head(r_);
    res.left = u_ * small.matrixU().leftCols(r_);
    res.right = v_ * small.matrixV().leftCols(r_);
    res.restarts = cycles;
    res.max_residual = max_res;
    return res;
  }

  const SpMat& a_;
  int r_;
  std::vector<KnownPair> deflate_;
  SvdOptions opts_;
  Rng rng_;
  Index m_ = 0;
  double scale_ = 0.0;
  double zero_tol_ = 0.0;
  DenseMat u_, v_, b_;
  Vector v_next_;
  bool v_next_valid_ = false;
  double beta_last_ = 0.0;
};

}  // namespace

SvdResult truncated_svd(const SpMat& a, int r, const SvdOptions& opts) {
  return LanczosSvd(a, r, {}, opts).run();
}

SvdResult truncated_svd_deflated(const SpMat& a, int r,
                                 const std::vector<KnownPair>& deflate,
                                 const SvdOptions& opts) {
  return LanczosSvd(a, r, deflate, opts).run();
}

SpectralEmbedding embed_documents(const SpMat& m, int r,
                                  const EmbedOptions& opts) {
  NormalizedMatrix norm = normalize_bipartite(m);

  SvdResult svd;
  if (opts.skip_leading) {
    // the degree pair (sqrt of row/col sums) is the known leading singular
    // pair with value 1; projecting it out yields vectors 2..r+1 directly
    KnownPair trivial;
    trivial.left = norm.row_sums.cwiseMax(0.0).cwiseSqrt();
    trivial.right = norm.col_sums.cwiseMax(0.0).cwiseSqrt();
    const double lnorm = trivial.left.norm();
    const double rnorm = trivial.right.norm();
    if (lnorm == 0.0 || rnorm == 0.0)
      throw Error(ErrorCode::EmptyMatrix, "matrix has no mass to embed");
    trivial.left /= lnorm;
    trivial.right /= rnorm;
    svd = truncated_svd_deflated(norm.matrix, r, {trivial}, opts.svd);
  } else {
    svd = truncated_svd(norm.matrix, r, opts.svd);
  }

  SpectralEmbedding emb;
  emb.coords = svd.left;
  emb.singular_values = svd.values;
  emb.zero_rows = norm.zero_rows;
  for (Index i : norm.zero_rows) emb.coords.row(i).setZero();
  return emb;
}

}  // namespace semblur
