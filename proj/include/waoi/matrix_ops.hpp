#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace waoi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Induced 2-norm (largest singular value).
inline double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

inline double spectral_radius(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const MatrixXd& m, double tol = 1e-9) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline double min_eigenvalue_sym(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().minCoeff();
}

inline bool is_positive_definite(const MatrixXd& m, double tol = 0.0) {
  return is_symmetric(m) && min_eigenvalue_sym(m) > tol;
}

inline bool is_positive_semidefinite(const MatrixXd& m, double tol = 1e-12) {
  return is_symmetric(m) && min_eigenvalue_sym(m) >= -tol;
}

// Symmetric PSD square root; tiny negative eigenvalues are clamped to zero.
inline MatrixXd sqrt_psd(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

inline bool is_controllable(const MatrixXd& A, const MatrixXd& B) {
  const auto n = A.rows();
  MatrixXd ctrb(n, n * B.cols());
  MatrixXd block = B;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * B.cols(), B.cols()) = block;
    block = A * block;
  }
  return Eigen::ColPivHouseholderQR<MatrixXd>(ctrb).rank() == n;
}

inline bool is_observable(const MatrixXd& A, const MatrixXd& C) {
  return is_controllable(A.transpose(), C.transpose());
}

}  // namespace waoi
