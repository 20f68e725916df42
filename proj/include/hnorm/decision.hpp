#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Dense>

#include "hnorm/estimator.hpp"
#include "hnorm/model.hpp"
#include "hnorm/moments.hpp"

namespace hnorm {

using Vector4d = Eigen::Vector4d;
using Matrix4d = Eigen::Matrix4d;

enum class DecisionMode { plugin, test };
enum class Verdict { prefer_l4, prefer_l2, inconclusive };

inline const char* to_string(DecisionMode m) { return m == DecisionMode::plugin ? "plugin" : "test"; }

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::prefer_l4: return "prefer_l4";
    case Verdict::prefer_l2: return "prefer_l2";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Everything the L2-versus-L4 decision rule computes from one residual sample.
struct DecisionStatistics {
  Eigen::Index n = 0;
  double v_hat = 0.0;
  Vector4d alpha0_hat = Vector4d::Zero();
  Matrix4d gamma_hat = Matrix4d::Zero();
  double s_squared = 0.0;
  bool s_squared_clamped = false;
  double t_stat = 0.0;
  std::pair<double, double> confidence_interval{};  ///< for v, level 1 - alpha
  std::pair<double, double> null_region{};          ///< 9 -/+ z_{1-alpha/2} s / sqrt(n)
  Verdict verdict = Verdict::inconclusive;
  DecisionMode mode = DecisionMode::plugin;
  double alpha_level = 0.05;
};

/// v = (mu6 - mu3^2) / sigma^6 from a moment vector.
inline double v_from_moments(const MomentVector& m) {
  const double s2 = m[2];
  if (!(s2 > 0.0)) throw DomainError("zero variance: v is undefined");
  return (m[6] - m[3] * m[3]) / (s2 * s2 * s2);
}

/// Plug-in v_hat = (muhat6 - muhat3^2) / sigmahat^6 of a residual sample.
inline double v_hat(std::span<const double> residuals) {
  if (residuals.size() < 7) throw DataError("v_hat needs at least 7 residuals");
  return v_from_moments(sample_central_moments(residuals, 6));
}

inline double v_hat(const VectorXd& residuals) {
  return v_hat(std::span<const double>(residuals.data(), residuals.size()));
}

/// Influence weights (1, -(6 mu5 - 3 mu2 mu3), -mu3, -3 sigma^4 v).
inline Vector4d alpha0(const MomentVector& m, double v) {
  const double mu2 = m[2], mu3 = m[3], mu5 = m[5];
  return {1.0, -(6.0 * mu5 - 3.0 * mu2 * mu3), -mu3, -3.0 * mu2 * mu2 * v};
}

/// Limiting covariance of sqrt(n) Zbar, Z_i = ((x-mu)^6 - mu6, x-mu, (x-mu)^3 - mu3, (x-mu)^2 - sigma^2).
inline Matrix4d gamma_hat(const MomentVector& m) {
  if (m.order() < 12) throw DomainError("gamma matrix needs central moments up to order 12");
  const auto mu = [&m](int r) { return m[r]; };
  Matrix4d G;
  // clang-format off
  G << mu(12) - mu(6) * mu(6), mu(7), mu(9) - mu(3) * mu(6), mu(8) - mu(2) * mu(6),
       mu(7),                  mu(2), mu(4),                 mu(3),
       mu(9) - mu(3) * mu(6),  mu(4), mu(6) - mu(3) * mu(3), mu(5) - mu(2) * mu(3),
       mu(8) - mu(2) * mu(6),  mu(3), mu(5) - mu(2) * mu(3), mu(4) - mu(2) * mu(2);
  // clang-format on
  return G;
}

/// s^2 = alpha0 Gamma alpha0' / sigma^12 (unclamped).
inline double influence_variance(const MomentVector& m, double v) {
  const Vector4d a = alpha0(m, v);
  const double s6 = std::pow(m[2], 3);
  return a.dot(gamma_hat(m) * a) / (s6 * s6);
}

inline double standard_normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Full decision statistics for a residual sample.
///
/// T = sqrt(n)(v_hat - 9)/s. Test mode prefers L4 iff T < -z_{1-alpha} and L2
/// iff T > z_{1-alpha}; plug-in mode prefers L4 iff v_hat < 9. A negative
/// plug-in s^2 is clamped to 1e-12 v_hat^2 and the test verdict becomes
/// inconclusive.
inline DecisionStatistics t_statistic(std::span<const double> residuals, double alpha_level,
                                      DecisionMode mode = DecisionMode::plugin) {
  if (!(alpha_level > 0.0 && alpha_level < 1.0))
    throw DomainError("alpha level must lie in (0, 1)");
  if (residuals.size() < 7) throw DataError("decision statistic needs at least 7 residuals");

  DecisionStatistics st;
  st.n = static_cast<Eigen::Index>(residuals.size());
  st.mode = mode;
  st.alpha_level = alpha_level;

  const MomentVector m = sample_central_moments(residuals, kMaxMomentOrder);
  double max_abs = 0.0;
  for (double r : residuals) max_abs = std::max(max_abs, std::abs(r));
  if (!(m[2] > 1e-24 * max_abs * max_abs)) throw DataError("residuals have zero variance");
  st.v_hat = v_from_moments(m);
  st.alpha0_hat = alpha0(m, st.v_hat);
  st.gamma_hat = gamma_hat(m);
  const double s6 = std::pow(m[2], 3);
  double s2 = st.alpha0_hat.dot(st.gamma_hat * st.alpha0_hat) / (s6 * s6);
  if (s2 == 0.0) throw NumericalError("influence variance s^2 is exactly zero");
  if (!(s2 > 0.0)) {
    s2 = 1e-12 * st.v_hat * st.v_hat;
    st.s_squared_clamped = true;
  }
  st.s_squared = s2;

  const double root_n = std::sqrt(static_cast<double>(st.n));
  const double s = std::sqrt(s2);
  st.t_stat = root_n * (st.v_hat - 9.0) / s;

  const double z_two = standard_normal_quantile(1.0 - alpha_level / 2.0);
  const double half = z_two * s / root_n;
  st.confidence_interval = {st.v_hat - half, st.v_hat + half};
  st.null_region = {9.0 - half, 9.0 + half};

  if (mode == DecisionMode::plugin) {
    st.verdict = st.v_hat < 9.0 ? Verdict::prefer_l4 : Verdict::prefer_l2;
  } else if (st.s_squared_clamped) {
    st.verdict = Verdict::inconclusive;
  } else {
    const double z_one = standard_normal_quantile(1.0 - alpha_level);
    if (st.t_stat < -z_one) {
      st.verdict = Verdict::prefer_l4;
    } else if (st.t_stat > z_one) {
      st.verdict = Verdict::prefer_l2;
    } else {
      st.verdict = Verdict::inconclusive;
    }
  }
  return st;
}

inline DecisionStatistics t_statistic(const VectorXd& residuals, double alpha_level,
                                      DecisionMode mode = DecisionMode::plugin) {
  return t_statistic(std::span<const double>(residuals.data(), residuals.size()), alpha_level,
                     mode);
}

/// Decision on OLS residuals: v describes the error law, and the L2 fit keeps
/// the statistic independent of the L4 estimate.
inline DecisionStatistics decide(const RegressionData& data, DecisionMode mode = DecisionMode::plugin,
                                 double alpha_level = 0.05) {
  const VectorXd& y = data.response();
  const double y_spread = std::sqrt((y.array() - y.mean()).square().mean());
  if (!(y_spread > 0.0)) throw DataError("response is constant");
  const EstimateReport ols = fit_ols(data);
  const VectorXd residuals = data.residuals(ols.beta_hat);
  if (!(std::sqrt(residuals.squaredNorm() / data.n()) > 1e-10 * y_spread))
    throw DataError("residuals vanish: the data are fitted exactly");
  return t_statistic(residuals, alpha_level, mode);
}

}  // namespace hnorm
