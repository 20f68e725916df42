#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hnorm/model.hpp"
#include "hnorm/moments.hpp"

namespace hnorm {

/// Largest supported half-order: inference needs moments up to 4k - 2 <= 12.
inline constexpr int kMaxHalfOrder = 3;

/// Newton solver settings for fit_l2k.
struct SolverConfig {
  /// Relative: the fit converges once ||score|| <= gradient_tolerance times
  /// 2k sum_i |r_i|^{2k-1} ||x_i||_inf, the magnitude of the terms the score adds up.
  double gradient_tolerance = 1e-10;
  int max_iterations = 200;
  double line_search_shrink = 0.5;
  double armijo = 1e-4;
  int max_backtracks = 60;

  void validate() const {
    if (!(gradient_tolerance > 0.0)) throw DomainError("gradient_tolerance must be positive");
    if (max_iterations < 0) throw DomainError("max_iterations must be non-negative");
    if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0))
      throw DomainError("line_search_shrink must lie in (0, 1)");
    if (!(armijo > 0.0 && armijo < 1.0)) throw DomainError("armijo constant must lie in (0, 1)");
    if (max_backtracks < 1) throw DomainError("max_backtracks must be positive");
  }
};

namespace detail {

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

inline void check_half_order(int k, int lo) {
  if (k < lo) throw DomainError("half loss order k must be at least " + std::to_string(lo));
}

inline void check_beta(const RegressionData& data, const VectorXd& beta) {
  if (beta.size() != data.p())
    throw DataError("coefficient vector has length " + std::to_string(beta.size()) +
                    ", expected " + std::to_string(data.p()));
}

}  // namespace detail

/// sum_i r_i^{2k}, r = y - X beta.
inline double l2k_objective(const RegressionData& data, const VectorXd& beta, int k) {
  detail::check_half_order(k, 1);
  detail::check_beta(data, beta);
  const VectorXd r = data.residuals(beta);
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += detail::ipow(r[i], 2 * k);
  return total;
}

/// Gradient of l2k_objective: -2k sum_i r_i^{2k-1} x_i.
inline VectorXd l2k_score(const RegressionData& data, const VectorXd& beta, int k) {
  detail::check_half_order(k, 1);
  detail::check_beta(data, beta);
  const VectorXd r = data.residuals(beta);
  VectorXd w(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) w[i] = detail::ipow(r[i], 2 * k - 1);
  return -2.0 * k * (data.design().transpose() * w);
}

/// Hessian of l2k_objective: 2k(2k-1) sum_i r_i^{2k-2} x_i x_i'.
inline MatrixXd l2k_hessian(const RegressionData& data, const VectorXd& beta, int k) {
  detail::check_half_order(k, 1);
  detail::check_beta(data, beta);
  const VectorXd r = data.residuals(beta);
  VectorXd w(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) w[i] = detail::ipow(r[i], 2 * k - 2);
  const MatrixXd& X = data.design();
  return 2.0 * k * (2.0 * k - 1.0) * (X.transpose() * w.asDiagonal() * X);
}

/// Asymptotic covariance of sqrt(n)(beta_hat - beta) for the L_{2k} M-estimator:
///
///   V = A^{-1} B A^{-1},  A = 2k(2k-1) mu_{2k-2} S/n,  B = (2k)^2 (mu_{4k-2} - mu_{2k-1}^2) S/n
///     = (mu_{4k-2} - mu_{2k-1}^2) / ((2k-1)^2 mu_{2k-2}^2) * (S/n)^{-1}.
///
/// `S` is the unnormalized cross product X'X, so V / n is the covariance of beta_hat.
inline MatrixXd sandwich_covariance(const MatrixXd& S, const MomentVector& residual_moments,
                                    int k, Eigen::Index n) {
  detail::check_half_order(k, 1);
  if (k > kMaxHalfOrder)
    throw DomainError("half loss order k > 3 needs moments above order 12");
  if (n < 1) throw DomainError("sample size must be positive");
  if (residual_moments.order() < 4 * k - 2)
    throw DomainError("sandwich covariance for k = " + std::to_string(k) +
                      " needs central moments up to order " + std::to_string(4 * k - 2));
  const double curvature = residual_moments[2 * k - 2];
  if (!(curvature > 0.0))
    throw DomainError("moment mu_{2k-2} must be positive for the sandwich covariance");
  const double score_var =
      residual_moments[4 * k - 2] - residual_moments[2 * k - 1] * residual_moments[2 * k - 1];
  const double factor = score_var / ((2.0 * k - 1.0) * (2.0 * k - 1.0) * curvature * curvature);

  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericalError("cross-product matrix is not positive definite");
  const MatrixXd S_inv = llt.solve(MatrixXd::Identity(S.rows(), S.cols()));
  MatrixXd V = factor * static_cast<double>(n) * S_inv;
  return 0.5 * (V + V.transpose());
}

namespace detail {

inline VectorXd std_errors_of(const MatrixXd& covariance) {
  return covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
}

inline bool hessian_ill_conditioned(const MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  return !(lo > 0.0) || hi / lo > 1e12;
}

}  // namespace detail

/// Ordinary least squares; covariance sigma2_hat (X'X)^{-1}, divisor n.
inline EstimateReport fit_ols(const RegressionData& data) {
  const MatrixXd& X = data.design();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw NumericalError("singular normal equations");
  EstimateReport rep;
  rep.loss_order = 2;
  rep.beta_hat = qr.solve(data.response());

  const VectorXd r = data.residuals(rep.beta_hat);
  const double n = static_cast<double>(data.n());
  const double sigma2 = r.squaredNorm() / n;
  Eigen::LDLT<MatrixXd> ldlt(data.cross_product());
  rep.covariance = sigma2 * ldlt.solve(MatrixXd::Identity(X.cols(), X.cols()));
  rep.covariance = 0.5 * (rep.covariance + rep.covariance.transpose()).eval();
  rep.std_errors = detail::std_errors_of(rep.covariance);
  rep.objective_value = r.squaredNorm();
  rep.gradient_norm = (2.0 * (X.transpose() * r)).norm();
  double scale = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    scale += 2.0 * std::abs(r[i]) * X.row(i).cwiseAbs().maxCoeff();
  rep.gradient_tolerance = 1e-10 * scale;
  rep.iterations = 0;
  rep.converged = true;
  rep.status = SolverStatus::converged;
  return rep;
}

/// L_{2k} fit by damped Newton with Armijo backtracking, started from OLS
/// (or `init`). The objective is convex, so any stationary point is global.
///
/// Non-convergence is reported through `converged` / `status`, not thrown.
inline EstimateReport fit_l2k(const RegressionData& data, int k, const SolverConfig& config = {},
                              const std::optional<VectorXd>& init = std::nullopt) {
  detail::check_half_order(k, 2);
  if (k > kMaxHalfOrder) throw DomainError("loss orders above 6 are not supported");
  config.validate();

  const MatrixXd& X = data.design();
  const Eigen::Index p = data.p();
  VectorXd beta = init ? *init : fit_ols(data).beta_hat;
  detail::check_beta(data, beta);

  const int two_k = 2 * k;
  VectorXd r = data.residuals(beta);
  auto objective_at = [&](const VectorXd& b) {
    const VectorXd res = data.residuals(b);
    double s = 0.0;
    for (Eigen::Index i = 0; i < res.size(); ++i) s += detail::ipow(res[i], two_k);
    return s;
  };

  // Residuals at the rounding level of the fitted values: Newton on r^{2k}
  // only shrinks them linearly there, and the relative score test cannot fire.
  const VectorXd& y = data.response();
  auto exact_fit = [&](const VectorXd& b, const VectorXd& res) {
    const VectorXd magnitude = y.cwiseAbs() + X.cwiseAbs() * b.cwiseAbs();
    return (res.cwiseAbs().array() <= 64.0 * std::numeric_limits<double>::epsilon() * magnitude.array()).all();
  };

  EstimateReport rep;
  rep.loss_order = two_k;
  rep.status = SolverStatus::max_iterations;
  double f = objective_at(beta);
  VectorXd g(p);
  MatrixXd H(p, p);
  double tol_abs = 0.0;

  for (int it = 0;; ++it) {
    r = data.residuals(beta);
    VectorXd w1(r.size()), w2(r.size());
    double scale = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      w2[i] = detail::ipow(r[i], two_k - 2);
      w1[i] = w2[i] * r[i];
      scale += two_k * std::abs(w1[i]) * X.row(i).cwiseAbs().maxCoeff();
    }
    g = -two_k * (X.transpose() * w1);
    H = two_k * (two_k - 1.0) * (X.transpose() * w2.asDiagonal() * X);
    tol_abs = config.gradient_tolerance * scale;
    rep.iterations = it;

    if (scale == 0.0 || g.norm() <= tol_abs || exact_fit(beta, r)) {
      rep.status = SolverStatus::converged;
      break;
    }
    if (it >= config.max_iterations) {
      rep.status = SolverStatus::max_iterations;
      break;
    }

    VectorXd direction;
    Eigen::LDLT<MatrixXd> ldlt(H);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) direction = -ldlt.solve(g);
    const bool newton_ok = direction.size() == p && direction.allFinite() && direction.dot(g) < 0.0;
    const double diag = std::max(H.diagonal().maxCoeff(), std::numeric_limits<double>::min());
    const VectorXd gradient_direction = -g / diag;

    // Decreases smaller than the rounding error of f still count.
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * f;
    auto backtrack = [&](const VectorXd& d, VectorXd& next, double& f_next) {
      const double slope = g.dot(d);
      double t = 1.0;
      for (int b = 0; b < config.max_backtracks; ++b) {
        next = beta + t * d;
        f_next = objective_at(next);
        if (f_next <= f + config.armijo * t * slope + slack) return true;
        t *= config.line_search_shrink;
      }
      return false;
    };

    VectorXd next;
    double f_next = f;
    bool stepped = newton_ok && backtrack(direction, next, f_next);
    if (!stepped) stepped = backtrack(gradient_direction, next, f_next);
    if (!stepped) {
      rep.status = SolverStatus::stalled;
      break;
    }
    beta = std::move(next);
    f = f_next;
  }

  rep.beta_hat = beta;
  rep.objective_value = f;
  rep.gradient_norm = g.norm();
  rep.gradient_tolerance = tol_abs;
  rep.converged = rep.status == SolverStatus::converged;
  rep.ill_conditioned = rep.objective_value > 0.0 && detail::hessian_ill_conditioned(H);

  const VectorXd residuals = data.residuals(beta);
  const MomentVector m = sample_central_moments(residuals, 4 * k - 2);
  if (m[2 * k - 2] > 0.0) {
    rep.covariance = sandwich_covariance(data.cross_product(), m, k, data.n()) /
                     static_cast<double>(data.n());
  } else {
    rep.covariance = MatrixXd::Zero(p, p);
  }
  rep.std_errors = detail::std_errors_of(rep.covariance);
  return rep;
}

}  // namespace hnorm
