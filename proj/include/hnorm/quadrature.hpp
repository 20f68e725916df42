#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hnorm/model.hpp"

namespace hnorm::quad {

/// Absolute tolerance required of every normalized moment integral.
inline constexpr double kMomentTolerance = 1e-10;

/// Adaptive double-exponential quadrature on a finite interval. Integrable
/// endpoint singularities are fine; an interval straddling 0 is split there,
/// where the family densities have their kinks. Throws NumericalError when
/// the error estimate exceeds `abs_tol`.
template <typename F>
double integrate(F&& f, double lo, double hi, double abs_tol = kMomentTolerance) {
  if (lo < 0.0 && hi > 0.0)
    return integrate(f, lo, 0.0, 0.5 * abs_tol) + integrate(f, 0.0, hi, 0.5 * abs_tol);
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(f, lo, hi, 1e-13, &error, &l1);
  if (!std::isfinite(value) || error > abs_tol)
    throw NumericalError("quadrature did not converge on [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "] (error estimate " + std::to_string(error) + ")");
  return value;
}

/// Central moments mu_2..max_order of an (unnormalized) density on [lo, hi].
inline MomentVector density_moments(const std::function<double(double)>& density, double lo,
                                    double hi, int max_order = 6) {
  if (!(hi > lo)) throw DomainError("empty integration interval");
  const double mass = integrate(density, lo, hi);
  if (!(mass > 0.0)) throw NumericalError("density integrates to a non-positive mass");
  const double mean = integrate([&](double x) { return x * density(x); }, lo, hi,
                                kMomentTolerance * mass) /
                      mass;
  std::vector<double> central;
  for (int r = 2; r <= max_order; ++r) {
    const double mu = integrate([&](double x) { return std::pow(x - mean, r) * density(x); },
                                lo, hi, kMomentTolerance * mass) /
                      mass;
    central.push_back(mu);
  }
  return MomentVector(central, Provenance::population);
}

}  // namespace hnorm::quad
