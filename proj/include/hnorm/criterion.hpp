#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "hnorm/distributions.hpp"
#include "hnorm/model.hpp"
#include "hnorm/quadrature.hpp"

namespace hnorm {

// ---------------------------------------------------------------------------
// Moment criteria
// ---------------------------------------------------------------------------

enum class CriterionMethod { closed_form, quadrature };

inline const char* to_string(CriterionMethod m) {
  return m == CriterionMethod::closed_form ? "closed_form" : "quadrature";
}

/// ratio = (mu6 - mu3^2) / (9 mu2^3); L4 is asymptotically more precise than
/// OLS exactly when ratio < 1.
struct CriterionResult {
  double ratio = 0.0;
  bool prefers_l4 = false;
  CriterionMethod method = CriterionMethod::closed_form;
  /// Gaussian mixture only: 6 + 18c^2 - 12c^4 - 8c^6 (negative iff L4 wins).
  std::optional<double> mixture_polynomial;
};

inline CriterionResult criterion_from_moments(const MomentVector& m,
                                              CriterionMethod method = CriterionMethod::closed_form) {
  if (m.order() < 6) throw DomainError("criterion needs central moments up to order 6");
  const double mu2 = m[2];
  if (!(mu2 > 0.0)) throw DomainError("degenerate distribution: mu2 = 0");
  double ratio = std::numeric_limits<double>::infinity();
  if (std::isfinite(m[6])) ratio = (m[6] - m[3] * m[3]) / (9.0 * mu2 * mu2 * mu2);
  return {ratio, ratio < 1.0, method, std::nullopt};
}

/// Both readings of an efficiency ratio: the published closed form and the
/// one implied by the sandwich covariance. They agree at k = 2.
struct RatioForms {
  double paper_form = 0.0;
  double sandwich_form = 0.0;
};

namespace detail {

inline void check_corollary_inputs(const MomentVector& m, int k) {
  if (k < 2 || k > 3) throw DomainError("corollary ratios are defined here for k in {2, 3}");
  if (m.order() < 4 * k - 2)
    throw DomainError("need central moments up to order " + std::to_string(4 * k - 2));
  if (!(m[2] > 0.0)) throw DomainError("degenerate distribution: mu2 = 0");
}

/// Var(eps^j) for central eps.
inline double power_variance(const MomentVector& m, int j) { return m[2 * j] - m[j] * m[j]; }

}  // namespace detail

/// L_{2k} versus L_2 efficiency ratio (below 1 favours L_{2k}).
///
/// paper_form    = Var(eps^{2k-1}) / ((2k-1)^2 mu2^{2k-1})
/// sandwich_form = Var(eps^{2k-1}) / ((2k-1)^2 mu_{2k-2}^2 mu2)
inline RatioForms corollary1_ratio(const MomentVector& m, int k) {
  detail::check_corollary_inputs(m, k);
  const double num = detail::power_variance(m, 2 * k - 1);
  const double c = (2.0 * k - 1.0) * (2.0 * k - 1.0);
  const double curvature = m[2 * k - 2];
  return {num / (c * std::pow(m[2], 2 * k - 1)), num / (c * curvature * curvature * m[2])};
}

/// L_{2k} versus L_{2k-2} efficiency ratio (below 1 favours L_{2k}).
///
/// paper_form    = Var(eps^{2k-1}) (2k-3)^2 / ((2k-1)^2 Var(eps^{2k-3}) mu2^2)
/// sandwich_form = Var(eps^{2k-1}) (2k-3)^2 mu_{2k-4}^2 / ((2k-1)^2 Var(eps^{2k-3}) mu_{2k-2}^2)
inline RatioForms corollary2_ratio(const MomentVector& m, int k) {
  detail::check_corollary_inputs(m, k);
  const double upper = detail::power_variance(m, 2 * k - 1);
  const double lower = detail::power_variance(m, 2 * k - 3);
  if (!(lower > 0.0)) throw DomainError("Var(eps^{2k-3}) must be positive");
  const double a = (2.0 * k - 3.0) * (2.0 * k - 3.0);
  const double b = (2.0 * k - 1.0) * (2.0 * k - 1.0);
  const double inner = m[2 * k - 4];
  const double outer = m[2 * k - 2];
  return {upper * a / (b * lower * m[2] * m[2]),
          upper * a * inner * inner / (b * lower * outer * outer)};
}

// ---------------------------------------------------------------------------
// Parametric families
// ---------------------------------------------------------------------------

namespace family {
struct UShaped { int k = 1; };          ///< density proportional to x^{2k} on [-1, 1]
struct Uniform {};
struct Normal {};
struct Laplace {};
struct Beta { double a = 1.0, b = 1.0; };
struct GaussianMixture { double c = 0.0; };  ///< (xi2 - xi1) / (2 sigma), equal weights
struct TruncatedNormal { double c = 1.0; };  ///< standard normal cut to [-c, c]
struct RaisedCosine { double b = 1.0; };
struct SubGaussian { double k = 1.0; };      ///< density proportional to exp(-x^{2k})
struct PearsonPlus { double a = 0.0; };      ///< (1 + x^2)^a on [-1, 1]
struct PearsonMinus { double a = 0.0; };     ///< (1 - x^2)^a on [-1, 1]
}  // namespace family

using FamilySpec =
    std::variant<family::UShaped, family::Uniform, family::Normal, family::Laplace, family::Beta,
                 family::GaussianMixture, family::TruncatedNormal, family::RaisedCosine,
                 family::SubGaussian, family::PearsonPlus, family::PearsonMinus>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void validate(const FamilySpec& spec) {
  std::visit(overloaded{
                 [](const family::UShaped& f) {
                   if (f.k < 1) throw DomainError("u_shaped: k must be a positive integer");
                 },
                 [](const family::Beta& f) {
                   if (!(f.a > 0.0 && f.b > 0.0)) throw DomainError("beta: a and b must be positive");
                 },
                 [](const family::GaussianMixture& f) {
                   if (!std::isfinite(f.c)) throw DomainError("gaussian_mixture: c must be finite");
                 },
                 [](const family::TruncatedNormal& f) {
                   if (!(f.c > 0.0)) throw DomainError("truncated_normal: c must be positive");
                 },
                 [](const family::RaisedCosine& f) {
                   if (!(f.b > 0.0)) throw DomainError("raised_cosine: b must be positive");
                 },
                 [](const family::SubGaussian& f) {
                   if (!(f.k > 0.0)) throw DomainError("sub_gaussian: k must be positive");
                 },
                 [](const family::PearsonPlus& f) {
                   if (!std::isfinite(f.a)) throw DomainError("pearson_plus: a must be finite");
                 },
                 [](const family::PearsonMinus& f) {
                   if (!(f.a > -1.0)) throw DomainError("pearson_minus: a must exceed -1");
                 },
                 [](const auto&) {},
             },
             spec);
}

/// Unnormalized density and finite integration window for a family. For
/// unbounded supports the window drops tail mass below about e^{-40}.
struct DensityWindow {
  std::function<double(double)> density;
  double lo = 0.0;
  double hi = 0.0;
};

inline DensityWindow family_density(const FamilySpec& spec) {
  validate(spec);
  using std::numbers::pi;
  return std::visit(
      overloaded{
          [](const family::UShaped& f) -> DensityWindow {
            const int e = 2 * f.k;
            return {[e](double x) { return std::pow(x, e); }, -1.0, 1.0};
          },
          [](const family::Uniform&) -> DensityWindow {
            return {[](double) { return 1.0; }, -1.0, 1.0};
          },
          [](const family::Normal&) -> DensityWindow {
            return {[](double x) { return std::exp(-0.5 * x * x); }, -12.0, 12.0};
          },
          [](const family::Laplace&) -> DensityWindow {
            return {[](double x) { return std::exp(-std::abs(x)); }, -60.0, 60.0};
          },
          [](const family::Beta& f) -> DensityWindow {
            return {[a = f.a, b = f.b](double x) {
                      return std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0);
                    },
                    0.0, 1.0};
          },
          [](const family::GaussianMixture& f) -> DensityWindow {
            const double c = std::abs(f.c);
            return {[c](double x) {
                      return std::exp(-0.5 * (x - c) * (x - c)) + std::exp(-0.5 * (x + c) * (x + c));
                    },
                    -c - 12.0, c + 12.0};
          },
          [](const family::TruncatedNormal& f) -> DensityWindow {
            return {[](double x) { return std::exp(-0.5 * x * x); }, -f.c, f.c};
          },
          [](const family::RaisedCosine& f) -> DensityWindow {
            return {[b = f.b](double x) { return 1.0 + std::cos(pi * x / b); }, -f.b, f.b};
          },
          [](const family::SubGaussian& f) -> DensityWindow {
            const double L = std::pow(40.0, 1.0 / (2.0 * f.k));
            return {[k2 = 2.0 * f.k](double x) { return std::exp(-std::pow(std::abs(x), k2)); },
                    -L, L};
          },
          [](const family::PearsonPlus& f) -> DensityWindow {
            return {[a = f.a](double x) { return std::pow(1.0 + x * x, a); }, -1.0, 1.0};
          },
          [](const family::PearsonMinus& f) -> DensityWindow {
            return {[a = f.a](double x) { return std::pow(1.0 - x * x, a); }, -1.0, 1.0};
          },
      },
      spec);
}

/// Criterion by numerically integrating the family's density.
inline CriterionResult family_criterion_quadrature(const FamilySpec& spec) {
  const DensityWindow w = family_density(spec);
  return criterion_from_moments(quad::density_moments(w.density, w.lo, w.hi, 6),
                                CriterionMethod::quadrature);
}

/// 6 + 18c^2 - 12c^4 - 8c^6.
inline double mixture_polynomial(double c) {
  const double c2 = c * c;
  return 6.0 + c2 * (18.0 + c2 * (-12.0 - 8.0 * c2));
}

/// Even central moments mu_0, mu_2, ..., mu_{2*max_half} of the standard normal
/// truncated to [-c, c], via mu_{2j} = (2j-1) mu_{2j-2} - c^{2j-1} e^{-c^2/2} / Delta,
/// Delta = sqrt(2 pi) (Phi(c) - 1/2).
inline std::vector<double> truncated_normal_even_moments(double c, int max_half) {
  const double delta = std::sqrt(2.0 * std::numbers::pi) * 0.5 * std::erf(c / std::sqrt(2.0));
  const double tail = std::exp(-0.5 * c * c) / delta;
  std::vector<double> mu{1.0};
  double c_pow = c;  // c^{2j-1}
  for (int j = 1; j <= max_half; ++j) {
    mu.push_back((2.0 * j - 1.0) * mu.back() - c_pow * tail);
    c_pow *= c * c;
  }
  return mu;
}

/// Criterion for a parametric family: closed form where one is known,
/// quadrature otherwise (the Pearson-type families).
inline CriterionResult family_criterion(const FamilySpec& spec) {
  validate(spec);
  using std::numbers::pi;
  auto closed = [](double ratio) {
    return CriterionResult{ratio, ratio < 1.0, CriterionMethod::closed_form, std::nullopt};
  };
  return std::visit(
      overloaded{
          [&](const family::UShaped& f) {
            const double k = f.k;
            return closed(std::pow(2 * k + 3, 3) / (9.0 * std::pow(2 * k + 1, 2) * (2 * k + 7)));
          },
          [&](const family::Uniform&) { return criterion_from_moments(dist::uniform_moments()); },
          [&](const family::Normal&) { return criterion_from_moments(dist::normal_moments()); },
          [&](const family::Laplace&) { return criterion_from_moments(dist::laplace_moments()); },
          [&](const family::Beta& f) { return criterion_from_moments(dist::beta_moments(f.a, f.b)); },
          [&](const family::GaussianMixture& f) {
            // mu2 = 1 + c^2 and mu6 - 9 mu2^3 = g(c), so the sign of g decides.
            const double g = mixture_polynomial(f.c);
            const double mu2 = 1.0 + f.c * f.c;
            CriterionResult res = closed(1.0 + g / (9.0 * mu2 * mu2 * mu2));
            res.prefers_l4 = g < 0.0;
            res.mixture_polynomial = g;
            return res;
          },
          [&](const family::TruncatedNormal& f) {
            const auto mu = truncated_normal_even_moments(f.c, 3);
            return closed(mu[3] / (9.0 * mu[1] * mu[1] * mu[1]));
          },
          [&](const family::RaisedCosine& f) {
            const double p2 = pi * pi, p4 = p2 * p2, p6 = p4 * p2;
            const double b2 = f.b * f.b;
            const double mu6 = b2 * b2 * b2 * (p6 - 42 * p4 + 840 * p2 - 5040) / (7 * p6);
            const double mu2 = b2 * (p2 - 6) / (3 * p2);
            return closed(mu6 / (9.0 * mu2 * mu2 * mu2));
          },
          [&](const family::SubGaussian& f) {
            const double t = 1.0 / (2.0 * f.k);
            const double log_ratio =
                2.0 * std::lgamma(t) + std::lgamma(7.0 * t) - 3.0 * std::lgamma(3.0 * t);
            return closed(std::exp(log_ratio) / 9.0);
          },
          [&](const family::PearsonPlus&) { return family_criterion_quadrature(spec); },
          [&](const family::PearsonMinus&) { return family_criterion_quadrature(spec); },
      },
      spec);
}

/// Parameter value where a one-parameter family crosses the L4/L2 boundary
/// (ratio = 1), by bisection to absolute tolerance `tol` on the parameter.
inline double boundary_root(const std::function<FamilySpec(double)>& family_at, double lo,
                            double hi, double tol = 1e-6) {
  if (!(hi > lo)) throw DomainError("bracket must satisfy lo < hi");
  auto excess = [&](double t) { return family_criterion(family_at(t)).ratio - 1.0; };
  double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo < 0.0) == (f_hi < 0.0))
    throw DomainError("criterion does not change sign on [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = excess(mid);
    if (f_mid == 0.0) return mid;
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Names (CLI surface)
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names{
      "u_shaped",      "uniform",          "normal",        "laplace",
      "beta",          "gaussian_mixture", "truncated_normal", "raised_cosine",
      "sub_gaussian",  "pearson_plus",     "pearson_minus"};
  return names;
}

/// Parameter names accepted by each family, in order.
inline std::vector<std::string> family_parameters(std::string_view name) {
  if (name == "u_shaped" || name == "sub_gaussian") return {"k"};
  if (name == "beta") return {"a", "b"};
  if (name == "gaussian_mixture" || name == "truncated_normal") return {"c"};
  if (name == "raised_cosine") return {"b"};
  if (name == "pearson_plus" || name == "pearson_minus") return {"a"};
  if (name == "uniform" || name == "normal" || name == "laplace") return {};
  throw DomainError("unknown family '" + std::string(name) + "'");
}

/// Builds a FamilySpec from a name and parameter map; missing parameters take
/// the struct defaults.
inline FamilySpec make_family(std::string_view name, const std::map<std::string, double>& params) {
  const auto allowed = family_parameters(name);
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw DomainError("family '" + std::string(name) + "' has no parameter '" + key + "'");
  }
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  FamilySpec spec;
  if (name == "u_shaped") {
    const double k = get("k", 1.0);
    if (k != std::floor(k)) throw DomainError("u_shaped: k must be an integer");
    spec = family::UShaped{static_cast<int>(k)};
  } else if (name == "uniform") {
    spec = family::Uniform{};
  } else if (name == "normal") {
    spec = family::Normal{};
  } else if (name == "laplace") {
    spec = family::Laplace{};
  } else if (name == "beta") {
    spec = family::Beta{get("a", 1.0), get("b", 1.0)};
  } else if (name == "gaussian_mixture") {
    spec = family::GaussianMixture{get("c", 0.0)};
  } else if (name == "truncated_normal") {
    spec = family::TruncatedNormal{get("c", 1.0)};
  } else if (name == "raised_cosine") {
    spec = family::RaisedCosine{get("b", 1.0)};
  } else if (name == "sub_gaussian") {
    spec = family::SubGaussian{get("k", 1.0)};
  } else if (name == "pearson_plus") {
    spec = family::PearsonPlus{get("a", 0.0)};
  } else {
    spec = family::PearsonMinus{get("a", 0.0)};
  }
  validate(spec);
  return spec;
}

}  // namespace hnorm
