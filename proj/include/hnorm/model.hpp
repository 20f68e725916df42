#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hnorm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or degenerate input data (dimensions, rank, non-finite values).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain an operation accepts.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// RegressionData
// ---------------------------------------------------------------------------

/// Design matrix (first column all ones) plus response vector.
///
/// Construction validates shape, finiteness, the leading intercept column and
/// full column rank; instances are immutable afterwards.
class RegressionData {
 public:
  RegressionData(MatrixXd design, VectorXd response)
      : design_(std::move(design)), response_(std::move(response)) {
    const auto n = design_.rows();
    const auto p = design_.cols();
    if (p < 1) throw DataError("design matrix has no columns");
    if (response_.size() != n)
      throw DataError("dimension mismatch: design has " + std::to_string(n) +
                      " rows but response has " + std::to_string(response_.size()) +
                      " entries");
    if (n < p + 1)
      throw DataError("need at least p + 1 = " + std::to_string(p + 1) +
                      " observations, got " + std::to_string(n));
    if (!design_.allFinite() || !response_.allFinite())
      throw DataError("non-finite entry in design or response");
    if ((design_.col(0).array() != 1.0).any())
      throw DataError("first design column must be the intercept (all ones)");
    Eigen::ColPivHouseholderQR<MatrixXd> qr(design_);
    qr.setThreshold(1e-10);
    if (qr.rank() < p)
      throw DataError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                      " < " + std::to_string(p) + " columns)");
  }

  const MatrixXd& design() const noexcept { return design_; }
  const VectorXd& response() const noexcept { return response_; }
  Eigen::Index n() const noexcept { return design_.rows(); }
  Eigen::Index p() const noexcept { return design_.cols(); }

  /// Residuals y - X b.
  VectorXd residuals(const VectorXd& beta) const { return response_ - design_ * beta; }

  /// S = X'X, the cross-product matrix that carries all design information.
  MatrixXd cross_product() const { return design_.transpose() * design_; }

 private:
  MatrixXd design_;
  VectorXd response_;
};

enum class InterceptPolicy {
  prepend_if_absent,  ///< add a ones column unless column 0 already is one
  require_present,    ///< column 0 must already be all ones
};

/// Validates raw inputs and returns a RegressionData.
inline RegressionData validate_data(const MatrixXd& raw_design, const VectorXd& response,
                                    InterceptPolicy policy = InterceptPolicy::prepend_if_absent) {
  const bool has_ones =
      raw_design.cols() > 0 && raw_design.rows() > 0 && (raw_design.col(0).array() == 1.0).all();
  if (policy == InterceptPolicy::require_present || has_ones)
    return RegressionData(raw_design, response);
  MatrixXd design(raw_design.rows(), raw_design.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(raw_design.cols()) = raw_design;
  return RegressionData(std::move(design), response);
}

// ---------------------------------------------------------------------------
// MomentVector
// ---------------------------------------------------------------------------

enum class Provenance { sample, population };

inline constexpr int kMaxMomentOrder = 12;

/// Central moments mu_0 .. mu_order, with mu_0 = 1 and mu_1 = 0 exactly.
///
/// Population vectors may carry +inf for moments that do not exist (heavy
/// tails); sample vectors are always finite.
class MomentVector {
 public:
  /// `central` lists mu_2, mu_3, ..., mu_order.
  MomentVector(std::initializer_list<double> central, Provenance provenance)
      : MomentVector(std::vector<double>(central), provenance) {}

  MomentVector(const std::vector<double>& central, Provenance provenance)
      : order_(static_cast<int>(central.size()) + 1), provenance_(provenance) {
    if (order_ < 2 || order_ > kMaxMomentOrder)
      throw DomainError("moment vector order must be in [2, 12], got " + std::to_string(order_));
    mu_.fill(0.0);
    mu_[0] = 1.0;
    mu_[1] = 0.0;
    std::copy(central.begin(), central.end(), mu_.begin() + 2);
    if (!(mu_[2] >= 0.0)) throw DomainError("second central moment must be non-negative");
  }

  /// mu_r; throws if r exceeds the stored order.
  double operator[](int r) const {
    if (r < 0 || r > order_)
      throw DomainError("moment of order " + std::to_string(r) + " requested but only " +
                        std::to_string(order_) + " available");
    return mu_[static_cast<std::size_t>(r)];
  }

  int order() const noexcept { return order_; }
  Provenance provenance() const noexcept { return provenance_; }
  double variance() const noexcept { return mu_[2]; }

  /// Cauchy-Schwarz consequences mu4 >= mu2^2, mu6 mu2 >= mu4^2, mu6 >= mu3^2,
  /// checked to relative tolerance `rel_tol`. Orders not stored are skipped.
  bool satisfies_moment_inequalities(double rel_tol = 1e-10) const {
    auto ge = [rel_tol](double lhs, double rhs) {
      return lhs >= rhs - rel_tol * std::max(std::abs(lhs), std::abs(rhs));
    };
    bool ok = mu_[2] >= 0.0;
    if (order_ >= 4) ok = ok && ge(mu_[4], mu_[2] * mu_[2]);
    if (order_ >= 6) {
      ok = ok && ge(mu_[6] * mu_[2], mu_[4] * mu_[4]);
      ok = ok && ge(mu_[6], mu_[3] * mu_[3]);
    }
    return ok;
  }

 private:
  std::array<double, kMaxMomentOrder + 1> mu_{};
  int order_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class SolverStatus { converged, max_iterations, stalled };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iterations: return "max_iterations";
    case SolverStatus::stalled: return "stalled";
  }
  return "unknown";
}

/// Result of one L_{2k} fit (loss_order = 2k).
struct EstimateReport {
  int loss_order = 2;
  VectorXd beta_hat;
  MatrixXd covariance;  ///< V / n: directly the covariance of beta_hat
  VectorXd std_errors;
  double objective_value = 0.0;
  double gradient_norm = 0.0;
  double gradient_tolerance = 0.0;  ///< absolute threshold actually applied
  int iterations = 0;
  bool converged = false;
  SolverStatus status = SolverStatus::converged;
  bool ill_conditioned = false;  ///< Hessian condition number above 1e12 at exit
};

/// Relative-gain pseudo R^2 ingredients (Q is the negated loss).
struct FitQuality {
  double q_fit = 0.0;
  double q_zero = 0.0;
  double q_max = 0.0;
  double r2_rg = 0.0;
};

}  // namespace hnorm
