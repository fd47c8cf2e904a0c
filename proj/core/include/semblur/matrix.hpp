#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace semblur {

// Document-feature matrices are row-major sparse: rows are documents and the
// hot loops (blur product, barcode sums, reassignment) stream over rows.
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;
using DenseMat = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = SpMat::Index;

inline Vector row_sums(const SpMat& m) {
  Vector s = Vector::Zero(m.rows());
  for (Index i = 0; i < m.outerSize(); ++i)
    for (SpMat::InnerIterator it(m, i); it; ++it) s[it.row()] += it.value();
  return s;
}

inline Vector col_sums(const SpMat& m) {
  Vector s = Vector::Zero(m.cols());
  for (Index i = 0; i < m.outerSize(); ++i)
    for (SpMat::InnerIterator it(m, i); it; ++it) s[it.col()] += it.value();
  return s;
}

// Keep the listed columns (in the given order), dropping the rest.
inline SpMat select_columns(const SpMat& m, const std::vector<Index>& keep) {
  std::vector<Index> remap(m.cols(), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) remap[keep[k]] = static_cast<Index>(k);
  SpMat out(m.rows(), static_cast<Index>(keep.size()));
  std::vector<Triplet> trips;
  trips.reserve(m.nonZeros());
  for (Index i = 0; i < m.outerSize(); ++i)
    for (SpMat::InnerIterator it(m, i); it; ++it)
      if (remap[it.col()] >= 0)
        trips.emplace_back(it.row(), remap[it.col()], it.value());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace semblur
