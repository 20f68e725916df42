#pragma once

#include "hnorm/estimator.hpp"
#include "hnorm/model.hpp"

namespace hnorm {

/// Relative-gain pseudo R^2: (Q_fit - Q_0) / (Q_max - Q_0).
inline FitQuality pseudo_r2(double q_fit, double q_zero, double q_max = 0.0) {
  if (!(q_zero < q_max))
    throw DomainError("pseudo R^2 undefined: intercept-only objective already attains Q_max");
  return {q_fit, q_zero, q_max, (q_fit - q_zero) / (q_max - q_zero)};
}

/// Pseudo R^2 of an L_{2k} fit, with Q = -sum r^{2k}. Q_0 comes from the
/// intercept-only L_{2k} fit; Q_max = 0.
inline FitQuality fit_quality(const RegressionData& data, const EstimateReport& fit,
                              const SolverConfig& config = {}) {
  const int k = fit.loss_order / 2;
  if (data.response().maxCoeff() == data.response().minCoeff())
    throw DomainError("pseudo R^2 undefined: the response is constant");
  const RegressionData null_model(MatrixXd::Ones(data.n(), 1), data.response());
  const VectorXd intercept_only =
      k == 1 ? fit_ols(null_model).beta_hat : fit_l2k(null_model, k, config).beta_hat;
  const double q_zero = -l2k_objective(null_model, intercept_only, k);
  const double q_fit = -l2k_objective(data, fit.beta_hat, k);
  return pseudo_r2(q_fit, q_zero, 0.0);
}

}  // namespace hnorm
