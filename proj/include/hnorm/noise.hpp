#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hnorm/criterion.hpp"
#include "hnorm/distributions.hpp"
#include "hnorm/model.hpp"

namespace hnorm {

using Rng = std::mt19937_64;

/// Independent generator for (master seed, stream, substream). Every
/// replication owns one, so results do not depend on scheduling.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(substream),
                    static_cast<std::uint32_t>(substream >> 32), 0x6c326bu};
  return Rng(seq);
}

namespace noise {
struct NormalMixture {
  std::vector<double> means;
  double sigma = 1.0;
};
struct TMixture {
  std::vector<double> means;
  int df = 6;
};
struct BetaMixture {
  std::vector<std::pair<double, double>> shapes;
};
/// Uniform on (-a, a).
struct Uniform {
  double a = 1.0;
};
enum class SingleKind { normal, laplace, uniform };
/// One unimodal law; `scale` is sigma, the Laplace scale, or the uniform half-width.
struct Single {
  SingleKind kind = SingleKind::normal;
  double scale = 1.0;
};

struct FixedWeights {
  std::vector<double> weights;  ///< empty: equal weights
};
/// Flat Dirichlet weights, drawn once per data set (w ~ U(0,1) for two components).
struct RandomUniformWeights {};
}  // namespace noise

struct NoiseSpec {
  std::variant<noise::NormalMixture, noise::TMixture, noise::BetaMixture, noise::Uniform,
               noise::Single>
      kind = noise::Single{};
  std::variant<noise::FixedWeights, noise::RandomUniformWeights> weights = noise::FixedWeights{};

  std::size_t components() const {
    return std::visit(overloaded{
                          [](const noise::NormalMixture& m) { return m.means.size(); },
                          [](const noise::TMixture& m) { return m.means.size(); },
                          [](const noise::BetaMixture& m) { return m.shapes.size(); },
                          [](const auto&) { return std::size_t{1}; },
                      },
                      kind);
  }

  bool random_weights() const {
    return std::holds_alternative<noise::RandomUniformWeights>(weights);
  }

  void validate() const {
    std::visit(overloaded{
                   [](const noise::NormalMixture& m) {
                     if (m.means.empty()) throw DomainError("normal mixture needs at least one mean");
                     if (!(m.sigma > 0.0)) throw DomainError("normal mixture sigma must be positive");
                   },
                   [](const noise::TMixture& m) {
                     if (m.means.empty()) throw DomainError("t mixture needs at least one mean");
                     if (m.df < 1) throw DomainError("t mixture degrees of freedom must be >= 1");
                   },
                   [](const noise::BetaMixture& m) {
                     if (m.shapes.empty()) throw DomainError("beta mixture needs at least one component");
                     for (auto [a, b] : m.shapes)
                       if (!(a > 0.0 && b > 0.0)) throw DomainError("beta shapes must be positive");
                   },
                   [](const noise::Uniform& u) {
                     if (!(u.a >= 0.0)) throw DomainError("uniform half-width must be non-negative");
                   },
                   [](const noise::Single& s) {
                     if (!(s.scale >= 0.0)) throw DomainError("noise scale must be non-negative");
                   },
               },
               kind);
    if (const auto* fixed = std::get_if<noise::FixedWeights>(&weights)) {
      if (!fixed->weights.empty()) {
        if (fixed->weights.size() != components())
          throw DomainError("number of weights does not match number of components");
        double total = 0.0;
        for (double w : fixed->weights) {
          if (!(w >= 0.0)) throw DomainError("mixture weights must be non-negative");
          total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw DomainError("fixed mixture weights must sum to 1");
      }
    }
  }

  /// Heavy tails: t components with df <= 12 lack the moments the decision
  /// statistic relies on.
  bool moments_may_not_exist() const {
    const auto* t = std::get_if<noise::TMixture>(&kind);
    return t != nullptr && t->df <= 12;
  }
};

/// Mixture weights for one data set.
inline std::vector<double> draw_mixture_weights(const NoiseSpec& spec, Rng& rng) {
  const std::size_t m = spec.components();
  if (spec.random_weights()) {
    if (m == 1) return {1.0};
    if (m == 2) {
      const double w = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      return {w, 1.0 - w};
    }
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(m);
    for (double& x : w) x = e(rng);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    return w;
  }
  const auto& fixed = std::get<noise::FixedWeights>(spec.weights).weights;
  if (!fixed.empty()) return fixed;
  return std::vector<double>(m, 1.0 / static_cast<double>(m));
}

namespace detail {

inline double draw_beta(double a, double b, Rng& rng) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

inline std::size_t pick(const std::vector<double>& weights, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < weights.size(); ++j) {
    acc += weights[j];
    if (u < acc) return j;
  }
  return weights.size() - 1;
}

}  // namespace detail

/// n i.i.d. draws given explicit mixture weights. The error mean is not
/// forced to zero; the regression intercept absorbs it.
inline VectorXd sample_noise(const NoiseSpec& spec, const std::vector<double>& weights,
                             Eigen::Index n, Rng& rng) {
  spec.validate();
  if (n < 1) throw DomainError("sample size must be at least 1");
  VectorXd out(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::visit(overloaded{
                 [&](const noise::NormalMixture& m) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     const std::size_t j = detail::pick(weights, unit(rng));
                     out[i] = m.means[j] + m.sigma * z(rng);
                   }
                 },
                 [&](const noise::TMixture& m) {
                   std::student_t_distribution<double> t(m.df);
                   for (Eigen::Index i = 0; i < n; ++i) {
                     const std::size_t j = detail::pick(weights, unit(rng));
                     out[i] = m.means[j] + t(rng);
                   }
                 },
                 [&](const noise::BetaMixture& m) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     const std::size_t j = detail::pick(weights, unit(rng));
                     out[i] = detail::draw_beta(m.shapes[j].first, m.shapes[j].second, rng);
                   }
                 },
                 [&](const noise::Uniform& u) {
                   std::uniform_real_distribution<double> d(-u.a, u.a);
                   for (Eigen::Index i = 0; i < n; ++i) out[i] = u.a > 0.0 ? d(rng) : 0.0;
                 },
                 [&](const noise::Single& s) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     switch (s.kind) {
                       case noise::SingleKind::normal: out[i] = s.scale * z(rng); break;
                       case noise::SingleKind::uniform: out[i] = s.scale * (2.0 * unit(rng) - 1.0); break;
                       case noise::SingleKind::laplace: {
                         const double e = std::exponential_distribution<double>(1.0)(rng);
                         out[i] = (unit(rng) < 0.5 ? -e : e) * s.scale;
                         break;
                       }
                     }
                   }
                 },
             },
             spec.kind);
  return out;
}

/// Draws weights (if random) and then n observations.
inline VectorXd sample_noise(const NoiseSpec& spec, Eigen::Index n, Rng& rng) {
  spec.validate();
  const auto weights = draw_mixture_weights(spec, rng);
  return sample_noise(spec, weights, n, rng);
}

/// Population central moments up to order 12 for given mixture weights;
/// +inf marks moments that do not exist.
inline MomentVector population_moments(const NoiseSpec& spec, const std::vector<double>& weights) {
  spec.validate();
  constexpr int order = kMaxMomentOrder;
  std::vector<dist::RawMoments> parts;
  std::visit(overloaded{
                 [&](const noise::NormalMixture& m) {
                   for (double mu : m.means) parts.push_back(dist::normal_raw(mu, m.sigma, order));
                 },
                 [&](const noise::TMixture& m) {
                   for (double mu : m.means) parts.push_back(dist::student_t_raw(mu, m.df, order));
                 },
                 [&](const noise::BetaMixture& m) {
                   for (auto [a, b] : m.shapes) parts.push_back(dist::beta_raw(a, b, order));
                 },
                 [&](const noise::Uniform& u) { parts.push_back(dist::uniform_raw(u.a, order)); },
                 [&](const noise::Single& s) {
                   switch (s.kind) {
                     case noise::SingleKind::normal: parts.push_back(dist::normal_raw(0.0, s.scale, order)); break;
                     case noise::SingleKind::uniform: parts.push_back(dist::uniform_raw(s.scale, order)); break;
                     case noise::SingleKind::laplace: parts.push_back(dist::laplace_raw(s.scale, order)); break;
                   }
                 },
             },
             spec.kind);
  const std::vector<double> w = parts.size() == 1 ? std::vector<double>{1.0} : weights;
  return dist::central_from_raw(dist::mix_raw(parts, w), order);
}

/// Whether L4 is the asymptotically better estimator for this error law.
inline bool population_prefers_l4(const NoiseSpec& spec, const std::vector<double>& weights) {
  return criterion_from_moments(population_moments(spec, weights)).prefers_l4;
}

}  // namespace hnorm
