#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hnorm/model.hpp"

namespace hnorm {

/// Plain central moments mu_r = (1/n) sum (x_i - xbar)^r for r = 2..max_order.
///
/// Two passes: the mean first, then powers of the centered values, so that
/// high orders of near-constant samples do not cancel catastrophically.
inline MomentVector sample_central_moments(std::span<const double> sample,
                                           int max_order = kMaxMomentOrder) {
  if (sample.size() < 2) throw DataError("need at least two observations for moments");
  if (max_order < 2 || max_order > kMaxMomentOrder)
    throw DomainError("max_order must be in [2, 12], got " + std::to_string(max_order));

  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double x : sample) {
    if (!std::isfinite(x)) throw DataError("non-finite value in sample");
    mean += x;
  }
  mean /= n;
  // One refinement step removes the rounding left in the first mean.
  double correction = 0.0;
  for (double x : sample) correction += x - mean;
  mean += correction / n;

  std::vector<double> sums(static_cast<std::size_t>(max_order - 1), 0.0);
  for (double x : sample) {
    const double d = x - mean;
    double power = d;
    for (int r = 2; r <= max_order; ++r) {
      power *= d;
      sums[static_cast<std::size_t>(r - 2)] += power;
    }
  }
  for (double& s : sums) s /= n;
  return MomentVector(sums, Provenance::sample);
}

inline MomentVector sample_central_moments(const VectorXd& sample,
                                           int max_order = kMaxMomentOrder) {
  return sample_central_moments(std::span<const double>(sample.data(), sample.size()), max_order);
}

/// Remainder of the first-order expansion of a sample central moment:
///
///   sqrt(n) muhat_r - [ n^{-1/2} sum (x_i - mu)^r - r mu_{r-1} n^{-1/2} sum (x_i - mu) ].
///
/// `population` supplies mu_{r-1} of the sampling distribution. The remainder
/// is o_p(1); it exists to test that claim.
inline double lemma2_linearization(std::span<const double> sample, int r, double true_mean,
                                   const MomentVector& population) {
  if (r < 2) throw DomainError("expansion order r must be at least 2");
  if (r > kMaxMomentOrder) throw DomainError("expansion order r must be at most 12");
  if (sample.size() < 2) throw DataError("need at least two observations");

  const double n = static_cast<double>(sample.size());
  const double root_n = std::sqrt(n);
  const double muhat = sample_central_moments(sample, std::max(r, 2))[r];

  double sum_r = 0.0;
  double sum_1 = 0.0;
  for (double x : sample) {
    const double d = x - true_mean;
    sum_r += std::pow(d, r);
    sum_1 += d;
  }
  const double linear = sum_r / root_n - r * population[r - 1] * sum_1 / root_n;
  return root_n * muhat - linear;
}

}  // namespace hnorm
