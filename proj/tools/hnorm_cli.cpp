// hnorm: fit, decide, criterion and simulate subcommands.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hnorm/hnorm.hpp"
#include "hnorm/io.hpp"

namespace {

using namespace hnorm;
using io::json;

enum ExitCode : int {
  exit_ok = 0,
  exit_other = 1,
  exit_usage = 2,
  exit_io = 3,
  exit_numerical = 4,
  exit_data = 5,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string input;
  std::string response_col;
  std::string delimiter;
  int loss_order = 4;
  std::string mode = "plugin";
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";

  // criterion
  std::string family;
  std::vector<std::string> params;
  bool from_data = false;
  std::string sweep;
  int steps = 41;
  bool root = false;

  // simulate
  std::string config;
  int replications = -1;
  unsigned threads = 0;
};

std::optional<char> delimiter_of(const Options& o) {
  if (o.delimiter.empty()) return std::nullopt;
  if (o.delimiter == "\\t" || o.delimiter == "tab") return '\t';
  if (o.delimiter.size() != 1) throw UsageError("delimiter must be a single character");
  return o.delimiter[0];
}

DecisionMode mode_of(const Options& o) {
  if (o.mode == "plugin") return DecisionMode::plugin;
  if (o.mode == "test") return DecisionMode::test;
  throw UsageError("mode must be plugin or test");
}

/// Writes to --out (if given) and to stdout.
void emit(const Options& o, const std::string& text) {
  std::cout << text;
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) throw io::IoError("cannot write '" + o.out + "'");
    f << text;
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed " << s << '\n';
  return s;
}

int cmd_fit(const Options& o) {
  if (o.loss_order % 2 != 0) throw UsageError("loss order must be even");
  if (o.loss_order < 2 || o.loss_order > 6) throw UsageError("loss order must be 2, 4 or 6");
  const io::Table table = io::read_table(o.input, delimiter_of(o));
  const RegressionData data = io::table_to_data(table, o.response_col);
  const auto names = io::regressor_names(table, data, o.response_col);
  const int k = o.loss_order / 2;
  const EstimateReport rep = k == 1 ? fit_ols(data) : fit_l2k(data, k);

  std::optional<FitQuality> quality;
  try {
    quality = fit_quality(data, rep);
  } catch (const DomainError&) {
  }

  if (o.format == "text") {
    std::ostringstream os;
    io::write_estimate_text(os, rep, names, quality ? &*quality : nullptr);
    emit(o, os.str());
  } else {
    json j = io::to_json(rep);
    j["terms"] = names;
    j["n"] = data.n();
    j["pseudo_r2"] = quality ? io::to_json(*quality) : json(nullptr);
    emit(o, dump(j));
  }
  if (!rep.converged) {
    std::cerr << "error: solver did not converge (" << to_string(rep.status) << ")\n";
    return exit_numerical;
  }
  return exit_ok;
}

int cmd_decide(const Options& o) {
  const io::Table table = io::read_table(o.input, delimiter_of(o));
  const RegressionData data = io::table_to_data(table, o.response_col);
  const DecisionStatistics st = decide(data, mode_of(o), o.alpha);

  const EstimateReport ols = fit_ols(data);
  const EstimateReport l4 = fit_l2k(data, 2, {}, ols.beta_hat);
  std::optional<FitQuality> q2, q4;
  try {
    q2 = fit_quality(data, ols);
    q4 = fit_quality(data, l4);
  } catch (const DomainError&) {
  }

  if (o.format == "text") {
    std::ostringstream os;
    io::write_decision_text(os, st);
    if (q2 && q4) os << "pseudo R2: L2 " << q2->r2_rg << ", L4 " << q4->r2_rg << '\n';
    emit(o, os.str());
  } else {
    json j = io::to_json(st);
    j["pseudo_r2"] = {{"l2", q2 ? json(q2->r2_rg) : json(nullptr)},
                      {"l4", q4 ? json(q4->r2_rg) : json(nullptr)}};
    emit(o, dump(j));
  }
  return exit_ok;
}

std::map<std::string, double> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, double> params;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("family parameters are key=value, got '" + item + "'");
    try {
      params[io::trim(item.substr(0, eq))] = io::parse_double(item.substr(eq + 1), item);
    } catch (const io::IoError& e) {
      throw UsageError(e.what());
    }
  }
  return params;
}

int cmd_criterion(const Options& o) {
  if (o.from_data) {
    if (o.input.empty()) throw UsageError("--from-data needs --input");
    const io::Table table = io::read_table(o.input, delimiter_of(o));
    const RegressionData data = io::table_to_data(table, o.response_col);
    const VectorXd r = data.residuals(fit_ols(data).beta_hat);
    const CriterionResult c = criterion_from_moments(sample_central_moments(r, 6));
    if (o.format == "text") {
      std::ostringstream os;
      os << "ratio " << std::setprecision(10) << c.ratio << "\nprefers_l4 " << std::boolalpha
         << c.prefers_l4 << "\nmethod sample_moments\n";
      emit(o, os.str());
    } else {
      json j = io::to_json(c);
      j["method"] = "sample_moments";
      j["n"] = data.n();
      emit(o, dump(j));
    }
    return exit_ok;
  }

  if (o.family.empty()) throw UsageError("criterion needs a family name or --from-data");
  try {
    family_parameters(o.family);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  auto params = parse_params(o.params);

  if (o.sweep.empty()) {
    if (o.root) throw UsageError("--root needs --sweep");
    const CriterionResult c = family_criterion(make_family(o.family, params));
    if (o.format == "text") {
      std::ostringstream os;
      os << "ratio " << std::setprecision(10) << c.ratio << "\nprefers_l4 " << std::boolalpha
         << c.prefers_l4 << "\nmethod " << to_string(c.method) << '\n';
      emit(o, os.str());
    } else {
      json j = io::to_json(c);
      j["family"] = o.family;
      emit(o, dump(j));
    }
    return exit_ok;
  }

  // name=lo..hi
  const auto eq = o.sweep.find('=');
  const auto dots = o.sweep.find("..");
  if (eq == std::string::npos || dots == std::string::npos || dots < eq)
    throw UsageError("--sweep expects name=lo..hi");
  const std::string name = io::trim(o.sweep.substr(0, eq));
  double lo = 0.0, hi = 0.0;
  try {
    lo = io::parse_double(o.sweep.substr(eq + 1, dots - eq - 1), "sweep lower bound");
    hi = io::parse_double(o.sweep.substr(dots + 2), "sweep upper bound");
  } catch (const io::IoError& e) {
    throw UsageError(e.what());
  }
  if (!(hi > lo)) throw UsageError("--sweep needs lo < hi");
  if (o.steps < 2) throw UsageError("--steps must be at least 2");
  const auto allowed = family_parameters(o.family);
  if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
    throw UsageError("family '" + o.family + "' has no parameter '" + name + "'");

  auto family_at = [&](double t) {
    auto p = params;
    p[name] = t;
    return make_family(o.family, p);
  };

  std::ostringstream os;
  if (o.root) {
    const double root = boundary_root(family_at, lo, hi, 1e-9);
    if (o.format == "text") {
      os << name << "* " << std::setprecision(10) << root << '\n';
    } else {
      os << dump(json{{"family", o.family}, {"parameter", name}, {"root", root}});
    }
    emit(o, os.str());
    return exit_ok;
  }

  MatrixXd grid(o.steps, 2);
  for (int i = 0; i < o.steps; ++i) {
    const double t = lo + (hi - lo) * i / (o.steps - 1);
    grid(i, 0) = t;
    grid(i, 1) = family_criterion(family_at(t)).ratio;
  }
  io::write_table(os, {name, "ratio"}, grid, o.format == "text" ? '\t' : ',');
  emit(o, os.str());
  return exit_ok;
}

int cmd_simulate(const Options& o) {
  io::SimulationConfig cfg = io::read_simulation_config(o.config);
  if (o.replications >= 0) {
    if (o.replications < 1) throw UsageError("replications must be at least 1");
    cfg.replications = o.replications;
  }
  if (o.seed) cfg.seed = o.seed;
  const std::uint64_t seed = resolve_seed(cfg.seed);
  const unsigned threads = o.threads ? o.threads : cfg.threads;
  const std::string out_path = o.out.empty() ? cfg.output : o.out;
  Options emit_to = o;
  emit_to.out = out_path;

  std::ostringstream os;
  switch (cfg.experiment) {
    case io::Experiment::risk: {
      std::vector<GridPoint> grid;
      for (const auto& spec : cfg.settings)
        for (auto n : cfg.sample_sizes) grid.push_back({spec, n});
      const RiskTable table = run_risk_study(grid, cfg.replications, seed, {cfg.mode, cfg.alpha, threads});
      if (o.format == "text") {
        io::write_risk_text(os, table, cfg.labels, cfg.sample_sizes, cfg.title);
      } else {
        json j = io::to_json(table);
        j["title"] = cfg.title;
        j["settings"] = cfg.labels;
        j["sample_sizes"] = cfg.sample_sizes;
        os << dump(j);
      }
      break;
    }
    case io::Experiment::efficiency: {
      json results = json::array();
      for (std::size_t s = 0; s < cfg.settings.size(); ++s) {
        for (auto n : cfg.sample_sizes) {
          const EfficiencyResult e =
              run_efficiency_study(cfg.settings[s], n, cfg.replications, cfg.k, seed, threads);
          if (o.format == "text") {
            os << std::setprecision(6) << io::describe(cfg.settings[s]) << "  n " << n << "  k " << e.k
               << "  empirical " << e.empirical_var_ratio << "  theoretical " << e.theoretical_ratio
               << "  paper form " << e.paper_form_ratio << "  failures " << e.failures << '\n';
          } else {
            json j = io::to_json(e);
            j["noise"] = io::describe(cfg.settings[s]);
            results.push_back(j);
          }
        }
      }
      if (o.format == "text") os << "seed " << seed << '\n';
      else os << dump(json{{"seed", seed}, {"results", results}});
      break;
    }
    case io::Experiment::rounding: {
      const RoundingSummary sum = run_rounding_experiment(cfg.replications, seed, threads);
      if (o.format == "text") {
        os << std::setprecision(6) << "replications " << sum.replications << "  failures " << sum.failures << '\n'
           << "mean L2 coefficients " << sum.mean_beta_l2.transpose() << '\n'
           << "mean L4 coefficients " << sum.mean_beta_l4.transpose() << '\n'
           << "L4 preferred (plugin) " << sum.l4_preferred_fraction << '\n'
           << "L4 preferred (test) " << sum.l4_preferred_fraction_test << '\n'
           << "pseudo R2 L4 > L2 " << sum.pseudo_r2_l4_wins_fraction << '\n'
           << "seed " << seed << '\n';
      } else {
        json j = io::to_json(sum);
        j["seed"] = seed;
        os << dump(j);
      }
      break;
    }
  }
  emit(emit_to, os.str());
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Even-power loss regression: fitting, L2-versus-L4 decisions, criterion values, simulations"};
  app.require_subcommand(1);
  Options o;

  auto add_data_flags = [&o](CLI::App* sub) {
    sub->add_option("--input", o.input, "Delimited table with a header row");
    sub->add_option("--response-col", o.response_col, "Response column name or 0-based index (default: first)");
    sub->add_option("--delimiter", o.delimiter, "Field delimiter (default: detect , tab ;)");
  };
  auto add_output_flags = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out, "Also write the report to this file");
    sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "text"}));
  };

  auto* fit = app.add_subcommand("fit", "Fit an L2, L4 or L6 regression");
  add_data_flags(fit);
  fit->get_option("--input")->required();
  fit->add_option("--loss-order", o.loss_order, "Even loss order: 2, 4 or 6");
  add_output_flags(fit);

  auto* dec = app.add_subcommand("decide", "Decide between L2 and L4 from OLS residuals");
  add_data_flags(dec);
  dec->get_option("--input")->required();
  dec->add_option("--mode", o.mode, "plugin or test")->check(CLI::IsMember({"plugin", "test"}));
  dec->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  add_output_flags(dec);

  auto* crit = app.add_subcommand("criterion", "Efficiency ratio (mu6 - mu3^2) / (9 mu2^3) for a family or data");
  crit->add_option("family", o.family, "Family name");
  crit->add_option("params", o.params, "Family parameters as key=value");
  add_data_flags(crit);
  crit->add_flag("--from-data", o.from_data, "Use sample moments of OLS residuals from --input");
  crit->add_option("--sweep", o.sweep, "Parameter grid name=lo..hi");
  crit->add_option("--steps", o.steps, "Grid points for --sweep");
  crit->add_flag("--root", o.root, "Locate the boundary ratio = 1 inside the --sweep range");
  add_output_flags(crit);

  auto* sim = app.add_subcommand("simulate", "Run a configured Monte Carlo experiment");
  sim->add_option("config", o.config, "Experiment config file")->required();
  sim->add_option("--seed", o.seed, "Master seed (default: config value, else random and printed)");
  sim->add_option("--replications", o.replications, "Override the configured replications");
  sim->add_option("--threads", o.threads, "Worker threads (default: all cores)");
  add_output_flags(sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (fit->parsed()) return cmd_fit(o);
    if (dec->parsed()) return cmd_decide(o);
    if (crit->parsed()) return cmd_criterion(o);
    return cmd_simulate(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const io::IoError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_io;
  } catch (const DomainError& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return exit_usage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_other;
  }
}
