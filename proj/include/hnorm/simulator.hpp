#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "hnorm/criterion.hpp"
#include "hnorm/decision.hpp"
#include "hnorm/estimator.hpp"
#include "hnorm/fit_quality.hpp"
#include "hnorm/model.hpp"
#include "hnorm/noise.hpp"
#include "hnorm/parallel.hpp"

namespace hnorm {

/// True coefficients of the simulated regressions, y = 1 + 2x + eps.
inline const VectorXd& simulation_beta() {
  static const VectorXd beta = (VectorXd(2) << 1.0, 2.0).finished();
  return beta;
}

/// Design [1, x] with x ~ U(0, 10), drawn once per (seed, n) and reused
/// across replications.
inline MatrixXd simulation_design(std::uint64_t seed, Eigen::Index n) {
  Rng rng = make_stream(seed, ~std::uint64_t{0}, static_cast<std::uint64_t>(n));
  std::uniform_real_distribution<double> u(0.0, 10.0);
  MatrixXd X(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = u(rng);
  }
  return X;
}

// ---------------------------------------------------------------------------
// Risk study
// ---------------------------------------------------------------------------

struct RiskCell {
  NoiseSpec noise;
  Eigen::Index n = 0;
  int replications = 0;
  int favorable_count = 0;  ///< verdict agrees with the population preference
  int l4_count = 0;         ///< verdict prefer_l4
  int failures = 0;         ///< replications where the statistic could not be computed
  bool moments_may_not_exist = false;

  double favorable_proportion() const {
    return replications ? static_cast<double>(favorable_count) / replications : 0.0;
  }
  double l4_proportion() const {
    return replications ? static_cast<double>(l4_count) / replications : 0.0;
  }
};

struct RiskTable {
  std::vector<RiskCell> cells;
  std::uint64_t seed = 0;
  DecisionMode mode = DecisionMode::test;
  double alpha_level = 0.05;
};

struct GridPoint {
  NoiseSpec noise;
  Eigen::Index n = 0;
};

struct RiskOptions {
  DecisionMode mode = DecisionMode::test;
  double alpha_level = 0.05;
  unsigned threads = 0;
};

namespace detail {

struct ReplicationOutcome {
  bool failed = false;
  bool l4 = false;
  bool favorable = false;
};

}  // namespace detail

/// Repeats {draw noise, regress, decide} per grid cell and counts verdicts.
/// Replication r of cell c uses its own stream (seed, c, r).
inline RiskTable run_risk_study(const std::vector<GridPoint>& grid, int replications,
                                std::uint64_t seed, const RiskOptions& options = {}) {
  if (replications < 1) throw DomainError("replications must be at least 1");
  if (!(options.alpha_level > 0.0 && options.alpha_level < 1.0))
    throw DomainError("alpha level must lie in (0, 1)");
  for (const auto& g : grid) {
    g.noise.validate();
    if (g.n < 7) throw DomainError("risk study needs n >= 7");
  }

  RiskTable table;
  table.seed = seed;
  table.mode = options.mode;
  table.alpha_level = options.alpha_level;
  const auto reps = static_cast<std::size_t>(replications);

  for (std::size_t c = 0; c < grid.size(); ++c) {
    const GridPoint& g = grid[c];
    const MatrixXd X = simulation_design(seed, g.n);
    const VectorXd mean = X * simulation_beta();
    std::vector<detail::ReplicationOutcome> out(reps);

    parallel_for(
        reps,
        [&](std::size_t r) {
          Rng rng = make_stream(seed, c, r);
          const auto weights = draw_mixture_weights(g.noise, rng);
          const VectorXd y = mean + sample_noise(g.noise, weights, g.n, rng);
          auto& o = out[r];
          try {
            const auto st = decide(RegressionData(X, y), options.mode, options.alpha_level);
            const bool truth_l4 = population_prefers_l4(g.noise, weights);
            o.l4 = st.verdict == Verdict::prefer_l4;
            o.favorable = (truth_l4 && st.verdict == Verdict::prefer_l4) ||
                          (!truth_l4 && st.verdict == Verdict::prefer_l2);
          } catch (const Error&) {
            o.failed = true;
          }
        },
        options.threads);

    RiskCell cell;
    cell.noise = g.noise;
    cell.n = g.n;
    cell.replications = replications;
    cell.moments_may_not_exist = g.noise.moments_may_not_exist();
    for (const auto& o : out) {
      cell.failures += o.failed;
      cell.l4_count += o.l4;
      cell.favorable_count += o.favorable;
    }
    table.cells.push_back(std::move(cell));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Efficiency study
// ---------------------------------------------------------------------------

struct EfficiencyResult {
  int k = 2;
  Eigen::Index n = 0;
  int replications = 0;
  int failures = 0;                  ///< non-converged L_{2k} fits, excluded
  double empirical_var_ratio = 0.0;  ///< Var(slope L_{2k}) / Var(slope OLS)
  double theoretical_ratio = 0.0;    ///< sandwich form
  double paper_form_ratio = 0.0;     ///< published closed form
  double mc_sd_ols = 0.0;
  double mc_sd_l2k = 0.0;
  double mean_se_ols = 0.0;          ///< mean reported slope standard error
  double mean_se_l2k = 0.0;
};

namespace detail {

inline double sample_variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace detail

/// Monte Carlo slope variances of OLS and L_{2k} on a fixed design.
/// Requires non-random mixture weights so the population ratio is defined.
inline EfficiencyResult run_efficiency_study(const NoiseSpec& noise, Eigen::Index n,
                                             int replications, int k, std::uint64_t seed,
                                             unsigned threads = 0) {
  noise.validate();
  if (replications < 100) throw DomainError("efficiency study needs at least 100 replications");
  if (k < 2 || k > kMaxHalfOrder) throw DomainError("efficiency study needs k in {2, 3}");
  if (noise.random_weights())
    throw DomainError("efficiency study needs fixed mixture weights");
  if (n < 3) throw DomainError("efficiency study needs n >= 3");

  Rng weight_rng = make_stream(seed, 0);
  const auto weights = draw_mixture_weights(noise, weight_rng);
  const MomentVector pop = population_moments(noise, weights);

  EfficiencyResult res;
  res.k = k;
  res.n = n;
  res.replications = replications;
  const RatioForms forms = corollary1_ratio(pop, k);
  res.theoretical_ratio = k == 2 ? criterion_from_moments(pop).ratio : forms.sandwich_form;
  res.paper_form_ratio = forms.paper_form;

  const MatrixXd X = simulation_design(seed, n);
  const VectorXd mean = X * simulation_beta();
  const auto reps = static_cast<std::size_t>(replications);
  struct Slot {
    double ols = 0.0, l2k = 0.0, se_ols = 0.0, se_l2k = 0.0;
    bool ok = false;
  };
  std::vector<Slot> out(reps);

  parallel_for(
      reps,
      [&](std::size_t r) {
        Rng rng = make_stream(seed, 1, r);
        const VectorXd y = mean + sample_noise(noise, weights, n, rng);
        const RegressionData data(X, y);
        const EstimateReport ols = fit_ols(data);
        const EstimateReport l2k = fit_l2k(data, k, {}, ols.beta_hat);
        auto& s = out[r];
        s.ols = ols.beta_hat[1];
        s.l2k = l2k.beta_hat[1];
        s.se_ols = ols.std_errors[1];
        s.se_l2k = l2k.std_errors[1];
        s.ok = l2k.converged;
      },
      threads);

  std::vector<double> b_ols, b_l2k;
  double se_ols = 0.0, se_l2k = 0.0;
  for (const auto& s : out) {
    if (!s.ok) {
      ++res.failures;
      continue;
    }
    b_ols.push_back(s.ols);
    b_l2k.push_back(s.l2k);
    se_ols += s.se_ols;
    se_l2k += s.se_l2k;
  }
  if (b_ols.size() < 2) throw NumericalError("too few converged replications");
  const double v_ols = detail::sample_variance(b_ols);
  const double v_l2k = detail::sample_variance(b_l2k);
  if (!(v_ols > 0.0)) throw DomainError("OLS slope has zero variance: the ratio is undefined");
  res.empirical_var_ratio = v_l2k / v_ols;
  res.mc_sd_ols = std::sqrt(v_ols);
  res.mc_sd_l2k = std::sqrt(v_l2k);
  res.mean_se_ols = se_ols / static_cast<double>(b_ols.size());
  res.mean_se_l2k = se_l2k / static_cast<double>(b_ols.size());
  return res;
}

// ---------------------------------------------------------------------------
// Rounding experiment
// ---------------------------------------------------------------------------

struct RoundingSummary {
  int replications = 0;
  int failures = 0;
  VectorXd mean_beta_l2 = VectorXd::Zero(3);
  VectorXd mean_beta_l4 = VectorXd::Zero(3);
  double l4_preferred_fraction = 0.0;       ///< plug-in verdicts
  double l4_preferred_fraction_test = 0.0;  ///< one-sided test verdicts
  double pseudo_r2_l4_wins_fraction = 0.0;
  double mean_r2_l2 = 0.0;
  double mean_r2_l4 = 0.0;
};

/// One data set of the rounding experiment: 40 rows of [1, x1, x2] and
/// Y = 5 floor((8 + x1 + 2 x2) / 5).
inline RegressionData rounding_dataset(Rng& rng) {
  constexpr int rows = 40;
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 1);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::uniform_int_distribution<int> level(10, 18);
  MatrixXd X(rows, 3);
  VectorXd y(rows);
  for (int i = 0; i < rows; ++i) {
    const double x1 = 1.3 * perm[i % 10];
    const double x2 = 2.32 * level(rng);
    X(i, 0) = 1.0;
    X(i, 1) = x1;
    X(i, 2) = x2;
    y[i] = 5.0 * std::floor((8.0 + x1 + 2.0 * x2) / 5.0);
  }
  return RegressionData(X, y);
}

inline RoundingSummary run_rounding_experiment(int replications, std::uint64_t seed,
                                               unsigned threads = 0) {
  if (replications < 1) throw DomainError("replications must be at least 1");
  const auto reps = static_cast<std::size_t>(replications);
  struct Slot {
    VectorXd l2, l4;
    double r2_l2 = 0.0, r2_l4 = 0.0;
    bool plugin_l4 = false, test_l4 = false, ok = false;
  };
  std::vector<Slot> out(reps);

  parallel_for(
      reps,
      [&](std::size_t r) {
        Rng rng = make_stream(seed, 2, r);
        auto& s = out[r];
        try {
          const RegressionData data = rounding_dataset(rng);
          const EstimateReport ols = fit_ols(data);
          const EstimateReport l4 = fit_l2k(data, 2, {}, ols.beta_hat);
          if (!l4.converged) return;
          s.l2 = ols.beta_hat;
          s.l4 = l4.beta_hat;
          s.r2_l2 = fit_quality(data, ols).r2_rg;
          s.r2_l4 = fit_quality(data, l4).r2_rg;
          s.plugin_l4 = decide(data, DecisionMode::plugin).verdict == Verdict::prefer_l4;
          s.test_l4 = decide(data, DecisionMode::test).verdict == Verdict::prefer_l4;
          s.ok = true;
        } catch (const Error&) {
          s.ok = false;
        }
      },
      threads);

  RoundingSummary sum;
  sum.replications = replications;
  int used = 0, plugin = 0, test = 0, wins = 0;
  for (const auto& s : out) {
    if (!s.ok) {
      ++sum.failures;
      continue;
    }
    ++used;
    sum.mean_beta_l2 += s.l2;
    sum.mean_beta_l4 += s.l4;
    sum.mean_r2_l2 += s.r2_l2;
    sum.mean_r2_l4 += s.r2_l4;
    plugin += s.plugin_l4;
    test += s.test_l4;
    wins += s.r2_l4 > s.r2_l2;
  }
  if (used == 0) throw NumericalError("no replication of the rounding experiment succeeded");
  const double u = used;
  sum.mean_beta_l2 /= u;
  sum.mean_beta_l4 /= u;
  sum.mean_r2_l2 /= u;
  sum.mean_r2_l4 /= u;
  sum.l4_preferred_fraction = plugin / u;
  sum.l4_preferred_fraction_test = test / u;
  sum.pseudo_r2_l4_wins_fraction = wins / u;
  return sum;
}

}  // namespace hnorm
