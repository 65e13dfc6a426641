#pragma once

// Dense real linear algebra with explicit relative tolerances.
//
// Every rank decision is made against tol * sigma_max, where sigma_max is the
// largest singular value of the matrix in question. The zero matrix has rank 0.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "funnelctl/errors.hpp"

namespace funnelctl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr double kRankTol = 1e-9;

namespace detail {

inline void require_finite(const Mat& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericError(std::string(op) + ": matrix has non-finite entries");
  }
}

inline void require_tol(double tol, const char* op) {
  if (!(tol > 0.0 && tol < 1.0)) {
    throw NumericError(std::string(op) + ": tolerance must lie in (0, 1)");
  }
}

inline int count_above(const Vec& sigma, double tol) {
  if (sigma.size() == 0) return 0;
  const double smax = sigma.maxCoeff();
  if (smax == 0.0) return 0;
  return static_cast<int>((sigma.array() > tol * smax).count());
}

}  // namespace detail

/// Moore-Penrose pseudoinverse via SVD. Singular values <= tol * sigma_max
/// are treated as zero.
inline Mat pinv(const Mat& m, double tol = kRankTol) {
  detail::require_finite(m, "pinv");
  detail::require_tol(tol, "pinv");
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? tol * s.maxCoeff() : 0.0;
  Vec inv = Vec::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline int rank_of(const Mat& m, double tol = kRankTol) {
  detail::require_finite(m, "rank_of");
  detail::require_tol(tol, "rank_of");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  return detail::count_above(svd.singularValues(), tol);
}

/// Orthonormal basis of ker(m), one column per kernel dimension.
///
/// Each column is signed so that its largest-magnitude entry is positive,
/// which makes one-dimensional kernels reproducible.
inline Mat nullspace_basis(const Mat& m, double tol = kRankTol) {
  detail::require_finite(m, "nullspace_basis");
  detail::require_tol(tol, "nullspace_basis");
  const auto cols = m.cols();
  if (m.rows() == 0) return Mat::Identity(cols, cols);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const int rank = detail::count_above(svd.singularValues(), tol);
  Mat basis = svd.matrixV().rightCols(cols - rank);
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index imax = 0;
    basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, j) < 0.0) basis.col(j) *= -1.0;
  }
  return basis;
}

/// Smallest eigenvalue of m + m^T.
inline double min_sym_eig(const Mat& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("min_sym_eig: matrix is " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + ", expected square");
  }
  detail::require_finite(m, "min_sym_eig");
  Mat sym = m + m.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

// Smallest of the first k singular values relative to the largest one; used
// to report how far a matrix is from losing rank k.
inline double relative_sigma(const Mat& m, Eigen::Index k) {
  if (m.size() == 0 || k < 1) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s.size() < k || s(0) == 0.0) return 0.0;
  return s(k - 1) / s(0);
}

}  // namespace funnelctl
