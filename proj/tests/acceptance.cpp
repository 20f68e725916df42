// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hnorm/hnorm.hpp"
#include "hnorm/io.hpp"

using namespace hnorm;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Report {
  int failed = 0;
  void line(int id, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failed;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool near(double x, double target, double tol) { return std::abs(x - target) <= tol; }

// 1. Closed-form criterion values.
void closed_forms(Report& rep) {
  struct Case {
    const char* name;
    FamilySpec spec;
    double target, tol;
  };
  const std::vector<Case> cases{
      {"uniform", family::Uniform{}, 3.0 / 7.0, 1e-9},
      {"normal", family::Normal{}, 15.0 / 9.0, 1e-9},
      {"laplace", family::Laplace{}, 10.0, 1e-9},
      {"u_shaped(1)", family::UShaped{1}, 125.0 / 729.0, 1e-9},
      {"raised_cosine", family::RaisedCosine{1.0}, 0.8926, 5e-5},
      {"sub_gaussian(1)", family::SubGaussian{1.0}, 15.0 / 9.0, 1e-9},
  };
  bool ok = true;
  std::ostringstream d;
  d.precision(10);
  for (const auto& c : cases) {
    const double r = family_criterion(c.spec).ratio;
    const bool pass = near(r, c.target, c.tol);
    ok &= pass;
    d << c.name << "=" << r << (pass ? "" : "(!)") << " ";
  }
  rep.line(1, ok, d.str());
}

// 2. Boundary roots.
void roots(Report& rep) {
  struct Case {
    const char* name;
    std::function<FamilySpec(double)> at;
    double lo, hi, target, tol;
  };
  const std::vector<Case> cases{
      {"gaussian_mixture c", [](double c) { return FamilySpec{family::GaussianMixture{c}}; }, 0.5, 2.0, 1.058, 0.001},
      {"sub_gaussian k", [](double k) { return FamilySpec{family::SubGaussian{k}}; }, 1.0, 2.0, 1.45, 0.01},
      {"truncated_normal c", [](double c) { return FamilySpec{family::TruncatedNormal{c}}; }, 1.0, 4.0, 2.33, 0.01},
      {"pearson_plus a", [](double a) { return FamilySpec{family::PearsonPlus{a}}; }, -6.0, -1.0, -3.2, 0.05},
      {"pearson_minus a", [](double a) { return FamilySpec{family::PearsonMinus{a}}; }, 1.0, 6.0, 3.5, 0.05},
  };
  bool ok = true;
  std::ostringstream d;
  for (const auto& c : cases) {
    const double r = boundary_root(c.at, c.lo, c.hi, 1e-9);
    const bool pass = near(r, c.target, c.tol);
    ok &= pass;
    d << c.name << "=" << fmt("%.6f", r) << (pass ? "" : fmt("(!target %g+-%g)", c.target, c.tol)) << " ";
  }
  rep.line(2, ok, d.str());
}

// 3. Q - R = -X'X on integer designs.
void pair_identity(Report& rep) {
  using IMat = identities::Matrix<std::int64_t>;
  std::mt19937_64 rng(kSeed);
  std::uniform_int_distribution<std::int64_t> entry(-50, 50);
  int good = 0, total = 0;
  for (int rep_i = 0; rep_i < 100; ++rep_i) {
    const int p = std::vector<int>{2, 3, 5}[rep_i % 3];
    const int n = rep_i % 2 ? 20 : 5;
    IMat X(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) X(i, j) = entry(rng);
    const IMat lhs = identities::cross_pair_matrix(X) - identities::column_sum_outer(X);
    const IMat rhs = -(X.transpose() * X);
    good += lhs == rhs;
    ++total;
  }
  rep.line(3, good == total, fmt("%d/%d exact integer matches", good, total));
}

// 4. Empirical efficiency at k = 2, and sandwich SE versus Monte Carlo SD.
void efficiency(Report& rep) {
  const NoiseSpec uni{noise::Uniform{1.0}, noise::FixedWeights{}};
  const NoiseSpec nor{noise::Single{noise::SingleKind::normal, 1.0}, noise::FixedWeights{}};
  const EfficiencyResult u = run_efficiency_study(uni, 2000, 2000, 2, kSeed);
  const EfficiencyResult g = run_efficiency_study(nor, 2000, 2000, 2, kSeed + 1);
  const double se_u = u.mean_se_l2k / u.mc_sd_l2k, se_g = g.mean_se_l2k / g.mc_sd_l2k;
  const bool ok = near(u.empirical_var_ratio, 3.0 / 7.0, 0.05) && near(g.empirical_var_ratio, 5.0 / 3.0, 0.1) &&
                  near(se_u, 1.0, 0.1) && near(se_g, 1.0, 0.1) && u.failures == 0 && g.failures == 0;
  rep.line(4, ok,
           fmt("uniform ratio %.4f (3/7+-0.05), normal ratio %.4f (5/3+-0.1); SE/SD uniform %.3f normal %.3f",
               u.empirical_var_ratio, g.empirical_var_ratio, se_u, se_g));
}

// 5. k = 3 against both ratio forms.
void loss6_efficiency(Report& rep) {
  const NoiseSpec uni{noise::Uniform{1.0}, noise::FixedWeights{}};
  const EfficiencyResult r = run_efficiency_study(uni, 2000, 2000, 3, kSeed + 2);
  const double rel_sandwich = r.empirical_var_ratio / r.theoretical_ratio - 1.0;
  const double rel_paper = r.empirical_var_ratio / r.paper_form_ratio - 1.0;
  rep.line(5, std::abs(rel_sandwich) <= 0.1 && r.failures == 0,
           fmt("L6/L2 empirical %.4f; sandwich form %.4f (rel %+.3f); published form %.4f (rel %+.3f, recorded only)",
               r.empirical_var_ratio, r.theoretical_ratio, rel_sandwich, r.paper_form_ratio, rel_paper));
}

// 6. Risk table cells at desk scale.
void risk_cells(Report& rep) {
  const auto nmix = [](double c) { return NoiseSpec{noise::NormalMixture{{c, -c}, 1.0}, noise::FixedWeights{}}; };
  const NoiseSpec beta44{noise::BetaMixture{{{4.0, 4.0}, {4.0, 4.0}}}, noise::FixedWeights{}};
  const std::vector<GridPoint> grid{{nmix(3.0), 500}, {nmix(1.0), 5000}, {beta44, 100}};
  const RiskTable t = run_risk_study(grid, 1000, kSeed);
  const double a = t.cells[0].l4_proportion(), b = t.cells[1].l4_proportion(), c = t.cells[2].l4_proportion();
  const bool ok = a >= 0.99 && b <= 0.05 && c >= 0.12 && c <= 0.28;
  rep.line(6, ok,
           fmt("L4 share (test mode, 1000 reps): mix(3,-3) n=500 %.3f (>=0.99); mix(1,-1) n=5000 %.3f (<=0.05); "
               "beta(4,4;4,4) n=100 %.3f ([0.12,0.28])",
               a, b, c));
}

// 7. v_hat consistency and standardized statistic, uniform errors.
void decision_sanity(Report& rep) {
  const double v0 = 27.0 / 7.0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Rng big = make_stream(kSeed, 7, 0);
  std::vector<double> x(100000);
  for (double& e : x) e = u(big);
  const double v = v_hat(std::span<const double>(x));

  const int reps = 1000, n = 5000;
  std::vector<double> z(reps);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = make_stream(kSeed, 7, r + 1);
    std::vector<double> e(n);
    for (double& s : e) s = u(rng);
    const DecisionStatistics st = t_statistic(std::span<const double>(e), 0.05);
    z[r] = std::sqrt(static_cast<double>(n)) * (st.v_hat - v0) / std::sqrt(st.s_squared);
  });
  double mean = 0.0, var = 0.0;
  for (double s : z) mean += s;
  mean /= reps;
  for (double s : z) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / (reps - 1));
  const bool ok = std::abs(v - v0) < 0.1 && std::abs(mean) <= 0.15 && sd >= 0.85 && sd <= 1.15;
  rep.line(7, ok, fmt("v_hat(n=1e5) %.4f vs 27/7=%.4f; standardized mean %.3f sd %.3f", v, v0, mean, sd));
}

// 8. Rounding experiment.
void rounding(Report& rep) {
  const RoundingSummary s = run_rounding_experiment(2000, kSeed);
  const double i2 = s.mean_beta_l2[0], i4 = s.mean_beta_l4[0];
  const bool pref = s.l4_preferred_fraction_test >= 0.75;
  const bool r2 = s.pseudo_r2_l4_wins_fraction >= 0.95;
  const bool icpt = near(i2, 7.013, 0.3) && near(i4, 6.548, 0.3);
  rep.line(8, pref && r2 && icpt,
           fmt("L4 preferred %.3f test / %.3f plug-in (>=0.75); pseudo-R2 L4 wins %.3f (>=0.95); "
               "mean intercepts L2 %.3f (7.013+-0.3)%s, L4 %.3f (6.548+-0.3)%s",
               s.l4_preferred_fraction_test, s.l4_preferred_fraction, s.pseudo_r2_l4_wins_fraction, i2,
               near(i2, 7.013, 0.3) ? "" : "(!)", i4, near(i4, 6.548, 0.3) ? "" : "(!)"));
}

// 9. Relative-gain pseudo R^2 equals classical R^2 for least squares.
void pseudo_r2_identity(Report& rep) {
  std::mt19937_64 rng(kSeed + 9);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 20 + 10 * (t % 7), p = 1 + t % 4;
    MatrixXd X(n, p + 1);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (int j = 1; j <= p; ++j) X(i, j) = g(rng) * (j + 1);
      y[i] = 3.0 - X.row(i).tail(p).sum() * 0.4 + g(rng) * (1 + t % 3);
    }
    const RegressionData d(X, y);
    const EstimateReport ols = fit_ols(d);
    const double r2 = fit_quality(d, ols).r2_rg;
    const double sst = (y.array() - y.mean()).square().sum();
    const double classical = 1.0 - d.residuals(ols.beta_hat).squaredNorm() / sst;
    worst = std::max(worst, std::abs(r2 - classical));
  }
  rep.line(9, worst <= 1e-10, fmt("max |R2_RG - R2| over 50 data sets %.2e", worst));
}

// Two-parameter oracle: coarse grid, then compass search.
VectorXd compass_oracle(const RegressionData& d, int k, VectorXd x, double radius) {
  auto f = [&](const VectorXd& b) { return l2k_objective(d, b, k); };
  VectorXd best = x;
  double fbest = f(x);
  const int m = 30;
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      VectorXd c = x;
      c[0] += radius * i / m;
      c[1] += radius * j / m;
      if (const double fc = f(c); fc < fbest) {
        fbest = fc;
        best = c;
      }
    }
  for (double step = radius / m; step > 1e-11;) {
    bool improved = false;
    for (int dim = 0; dim < 2; ++dim)
      for (double sgn : {1.0, -1.0}) {
        VectorXd c = best;
        c[dim] += sgn * step;
        if (const double fc = f(c); fc < fbest) {
          fbest = fc;
          best = c;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  return best;
}

// 10. Solver properties.
void solver(Report& rep) {
  std::mt19937_64 rng(kSeed + 10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  auto draw = [&](int kind) {
    switch (kind % 4) {
      case 0: return u(rng);
      case 1: return g(rng);
      case 2: return (u(rng) < 0 ? -1.0 : 1.0) * ex(rng);
      default: return (u(rng) < 0 ? -2.0 : 2.0) + 0.5 * g(rng);
    }
  };
  int converged = 0, descent = 0;
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 2;
    MatrixXd X(200, 4);
    VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
      X(i, 0) = 1.0;
      for (int j = 1; j < 4; ++j) X(i, j) = 5.0 * u(rng);
      y[i] = 1.0 + X(i, 1) - 0.5 * X(i, 2) + 2.0 * X(i, 3) + draw(t);
    }
    const RegressionData d(X, y);
    const EstimateReport r = fit_l2k(d, k);
    converged += r.converged && r.gradient_norm <= r.gradient_tolerance;
    descent += r.objective_value <= l2k_objective(d, fit_ols(d).beta_hat, k);
  }
  int matched = 0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int k = 2 + t % 2;
    MatrixXd X(200, 2);
    VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = u(rng);
      y[i] = 0.5 - 1.5 * X(i, 1) + draw(t);
    }
    const RegressionData d(X, y);
    const EstimateReport r = fit_l2k(d, k);
    const VectorXd oracle = compass_oracle(d, k, fit_ols(d).beta_hat, 1.0);
    const double err = (r.beta_hat - oracle).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    matched += err <= 1e-6;
  }
  rep.line(10, converged == 200 && descent == 200 && matched == 20,
           fmt("converged %d/200, objective below OLS start %d/200, oracle matches %d/20 (max diff %.1e)", converged,
               descent, matched, worst));
}

// 11. Decide report carries the statistic, interval and pseudo-R^2 pair.
void report_format(Report& rep) {
  Rng rng = make_stream(kSeed, 11, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixXd X(500, 2);
  VectorXd y(500);
  for (int i = 0; i < 500; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = 10.0 * (u(rng) + 1.0);
    y[i] = 1.0 + 2.0 * X(i, 1) + u(rng);
  }
  const RegressionData d(X, y);
  const DecisionStatistics st = decide(d);
  const double r2_l2 = fit_quality(d, fit_ols(d)).r2_rg;
  const double r2_l4 = fit_quality(d, fit_l2k(d, 2)).r2_rg;
  const io::json j = io::to_json(st);
  std::ostringstream text;
  io::write_decision_text(text, st);
  const bool ok = j.contains("t_stat") && j.contains("confidence_interval") && j.contains("v_hat") &&
                  j.contains("verdict") && std::isfinite(st.t_stat) &&
                  st.confidence_interval.first < st.confidence_interval.second &&
                  text.str().find("test statistic T") != std::string::npos && std::isfinite(r2_l2) &&
                  std::isfinite(r2_l4);
  rep.line(11, ok,
           fmt("format only: T %.3f, interval (%.3f, %.3f), pseudo-R2 L2 %.5f L4 %.5f, verdict %s", st.t_stat,
               st.confidence_interval.first, st.confidence_interval.second, r2_l2, r2_l4, to_string(st.verdict)));
}

}  // namespace

int main() {
  Report rep;
  const std::vector<std::function<void(Report&)>> checks{closed_forms, roots,    pair_identity, efficiency,
                                                         loss6_efficiency, risk_cells, decision_sanity, rounding,
                                                         pseudo_r2_identity, solver, report_format};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      checks[i](rep);
    } catch (const std::exception& e) {
      rep.line(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", rep.failed, checks.size());
  return rep.failed == 0 ? 0 : 1;
}
