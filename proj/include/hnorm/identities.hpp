#pragma once

#include <Eigen/Core>

// Pieces of the score outer-product algebra behind the L4 sandwich covariance.
// With s the vector of column sums of X:
//   E[psi psi'] = 16 (mu6 S + mu3^2 Q),  E[psi] E[psi]' = 16 mu3^2 R,
// and Q - R = -S collapses B to 16 S (mu6 - mu3^2). These exist for testing.

namespace hnorm::identities {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Q_{jl} = sum over ordered pairs i != i' of X_{ij} X_{i'l}, by direct enumeration.
template <typename Scalar>
Matrix<Scalar> cross_pair_matrix(const Matrix<Scalar>& X) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Matrix<Scalar> Q = Matrix<Scalar>::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index ip = 0; ip < n; ++ip) {
      if (i == ip) continue;
      for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index l = 0; l < p; ++l) Q(j, l) += X(i, j) * X(ip, l);
    }
  return Q;
}

/// R = s s', the outer product of column sums.
template <typename Scalar>
Matrix<Scalar> column_sum_outer(const Matrix<Scalar>& X) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s = X.colwise().sum().transpose();
  return s * s.transpose();
}

}  // namespace hnorm::identities
