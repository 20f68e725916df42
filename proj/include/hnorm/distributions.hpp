#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hnorm/model.hpp"

namespace hnorm::dist {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

/// Raw moments E[X^r], r = 0..order, each a vector of size order + 1.
using RawMoments = std::vector<double>;

/// Raw moments of N(mean, sigma^2).
inline RawMoments normal_raw(double mean, double sigma, int order) {
  // standard normal: E Z^i = (i-1)!! for even i
  std::vector<double> z(static_cast<std::size_t>(order + 1), 0.0);
  z[0] = 1.0;
  for (int i = 2; i <= order; i += 2) z[i] = z[i - 2] * (i - 1);
  RawMoments out(z.size(), 0.0);
  for (int r = 0; r <= order; ++r)
    for (int i = 0; i <= r; i += 2)
      out[r] += binomial(r, i) * std::pow(mean, r - i) * std::pow(sigma, i) * z[i];
  return out;
}

/// Raw moments of mean + T with T Student-t(df); +inf where the moment diverges.
inline RawMoments student_t_raw(double mean, double df, int order) {
  std::vector<double> t(static_cast<std::size_t>(order + 1), 0.0);
  t[0] = 1.0;
  for (int i = 1; i <= order; ++i) {
    if (df <= i) {
      t[i] = kInf;
    } else if (i % 2 == 0) {
      t[i] = t[i - 2] * df * (i - 1) / (df - i);
    }
  }
  RawMoments out(t.size(), 0.0);
  for (int r = 0; r <= order; ++r) {
    for (int i = 0; i <= r; ++i) {
      if (std::isinf(t[i])) {
        out[r] = kInf;
        break;
      }
      out[r] += binomial(r, i) * std::pow(mean, r - i) * t[i];
    }
  }
  return out;
}

/// Raw moments of Beta(a, b): prod_{i<r} (a + i) / (a + b + i).
inline RawMoments beta_raw(double a, double b, int order) {
  RawMoments out(static_cast<std::size_t>(order + 1), 1.0);
  for (int r = 1; r <= order; ++r) out[r] = out[r - 1] * (a + r - 1) / (a + b + r - 1);
  return out;
}

/// Raw moments of the uniform law on (-a, a).
inline RawMoments uniform_raw(double a, int order) {
  RawMoments out(static_cast<std::size_t>(order + 1), 0.0);
  for (int r = 0; r <= order; r += 2) out[r] = std::pow(a, r) / (r + 1);
  return out;
}

/// Raw moments of the Laplace law with scale lambda: r! lambda^r for even r.
inline RawMoments laplace_raw(double lambda, int order) {
  RawMoments out(static_cast<std::size_t>(order + 1), 0.0);
  double fact = 1.0;
  for (int r = 0; r <= order; ++r) {
    if (r > 0) fact *= r;
    if (r % 2 == 0) out[r] = fact * std::pow(lambda, r);
  }
  return out;
}

/// Central moments mu_2..mu_order from raw moments (binomial expansion about
/// the mean). A diverging raw moment makes every higher central moment +inf.
inline MomentVector central_from_raw(const RawMoments& raw, int order,
                                     Provenance provenance = Provenance::population) {
  const double m = raw[1];
  std::vector<double> central;
  for (int r = 2; r <= order; ++r) {
    double mu = 0.0;
    for (int i = 0; i <= r; ++i) {
      if (std::isinf(raw[i])) {
        mu = kInf;
        break;
      }
      mu += binomial(r, i) * raw[i] * std::pow(-m, r - i);
    }
    central.push_back(mu);
  }
  return MomentVector(central, provenance);
}

/// Weighted combination of component raw moments.
inline RawMoments mix_raw(const std::vector<RawMoments>& components,
                          const std::vector<double>& weights) {
  RawMoments out(components.front().size(), 0.0);
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (weights[j] == 0.0) continue;
    for (std::size_t r = 0; r < out.size(); ++r) {
      if (std::isinf(components[j][r])) {
        out[r] = kInf;
      } else if (!std::isinf(out[r])) {
        out[r] += weights[j] * components[j][r];
      }
    }
  }
  return out;
}

// Named population central moments, up to order 12.

inline MomentVector uniform_moments(double a = 1.0) {
  return central_from_raw(uniform_raw(a, kMaxMomentOrder), kMaxMomentOrder);
}

inline MomentVector normal_moments(double sigma = 1.0) {
  return central_from_raw(normal_raw(0.0, sigma, kMaxMomentOrder), kMaxMomentOrder);
}

inline MomentVector laplace_moments(double lambda = 1.0) {
  return central_from_raw(laplace_raw(lambda, kMaxMomentOrder), kMaxMomentOrder);
}

inline MomentVector beta_moments(double a, double b) {
  return central_from_raw(beta_raw(a, b, kMaxMomentOrder), kMaxMomentOrder);
}

/// Equal-weight two-component normal mixture with means -c, +c and unit variance.
inline MomentVector symmetric_normal_mixture_moments(double c) {
  return central_from_raw(
      mix_raw({normal_raw(-c, 1.0, kMaxMomentOrder), normal_raw(c, 1.0, kMaxMomentOrder)},
              {0.5, 0.5}),
      kMaxMomentOrder);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace hnorm::dist
