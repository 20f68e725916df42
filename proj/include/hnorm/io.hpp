#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hnorm/criterion.hpp"
#include "hnorm/decision.hpp"
#include "hnorm/model.hpp"
#include "hnorm/noise.hpp"
#include "hnorm/simulator.hpp"

namespace hnorm::io {

using json = nlohmann::ordered_json;

/// File access and parse failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(delim, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  if (t.empty()) throw IoError("empty value for " + std::string(what));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw IoError("cannot parse '" + t + "' as a number for " + std::string(what));
  }
  if (used != t.size()) throw IoError("cannot parse '" + t + "' as a number for " + std::string(what));
  return v;
}

inline long long parse_integer(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw IoError("cannot parse '" + t + "' as an integer for " + std::string(what));
  return v;
}

inline std::vector<double> parse_list(std::string_view text, std::string_view what) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_double(item, what));
  return out;
}

// ---------------------------------------------------------------------------
// Delimited tables
// ---------------------------------------------------------------------------

struct Table {
  std::vector<std::string> headers;
  MatrixXd values;  ///< rows x columns
};

/// Comma, tab, or semicolon, whichever splits the header line; other
/// delimiters must be given explicitly.
inline char detect_delimiter(std::string_view header) {
  for (char c : {',', '\t', ';'})
    if (header.find(c) != std::string_view::npos) return c;
  return ',';
}

inline Table parse_table(std::istream& in, std::optional<char> delimiter = std::nullopt) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw IoError("table is empty: no header row");
  const char delim = delimiter.value_or(detect_delimiter(line));
  Table t;
  t.headers = split(line, delim);
  const std::size_t cols = t.headers.size();
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delim);
    if (fields.size() != cols)
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                    " fields, found " + std::to_string(fields.size()));
    std::vector<double> row;
    for (std::size_t j = 0; j < cols; ++j)
      row.push_back(parse_double(fields[j], "line " + std::to_string(line_no) + " column '" +
                                                t.headers[j] + "'"));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("table has a header but no data rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

inline Table read_table(const std::string& path, std::optional<char> delimiter = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_table(in, delimiter);
}

/// Column index from a header name or a 0-based index.
inline Eigen::Index column_index(const Table& t, const std::string& key) {
  for (std::size_t j = 0; j < t.headers.size(); ++j)
    if (t.headers[j] == key) return static_cast<Eigen::Index>(j);
  if (!key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const auto j = static_cast<Eigen::Index>(parse_integer(key, "response column"));
    if (j < t.values.cols()) return j;
  }
  throw IoError("no column '" + key + "' in the table");
}

/// Regression data: the response column against all remaining columns,
/// with an intercept prepended unless a column of ones is already present.
inline RegressionData table_to_data(const Table& t, const std::string& response_col = "") {
  const Eigen::Index r = response_col.empty() ? 0 : column_index(t, response_col);
  if (t.values.cols() < 2) throw DataError("need a response and at least one regressor column");
  MatrixXd raw(t.values.rows(), t.values.cols() - 1);
  for (Eigen::Index j = 0, c = 0; j < t.values.cols(); ++j)
    if (j != r) raw.col(c++) = t.values.col(j);
  return validate_data(raw, t.values.col(r), InterceptPolicy::prepend_if_absent);
}

inline std::vector<std::string> regressor_names(const Table& t, const RegressionData& data,
                                                const std::string& response_col = "") {
  const Eigen::Index r = response_col.empty() ? 0 : column_index(t, response_col);
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < t.values.cols(); ++j)
    if (j != r) names.push_back(t.headers[static_cast<std::size_t>(j)]);
  if (static_cast<Eigen::Index>(names.size()) < data.p()) names.insert(names.begin(), "(intercept)");
  return names;
}

inline void write_table(std::ostream& out, const std::vector<std::string>& headers,
                        const MatrixXd& values, char delim = ',') {
  for (std::size_t j = 0; j < headers.size(); ++j) out << (j ? std::string(1, delim) : "") << headers[j];
  out << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? std::string(1, delim) : "") << values(i, j);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

/// key = value lines; '#' starts a comment; keys are case-sensitive.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw IoError("config line " + std::to_string(line_no) + ": empty key");
    if (kv.count(key)) throw IoError("config key '" + key + "' given twice");
    kv[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return kv;
}

enum class Experiment { risk, efficiency, rounding };

struct SimulationConfig {
  Experiment experiment = Experiment::risk;
  std::vector<std::string> labels;  ///< one per setting
  std::vector<NoiseSpec> settings;
  std::vector<Eigen::Index> sample_sizes;
  int replications = 500;
  std::optional<std::uint64_t> seed;
  DecisionMode mode = DecisionMode::test;
  double alpha = 0.05;
  int k = 2;
  std::string title;
  std::string output;
  unsigned threads = 0;
};

namespace detail {

inline std::string setting_label(const std::vector<double>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << (v.size() == 4 && i == 2 ? "; " : ", ");
    os << v[i];
  }
  os << ')';
  return os.str();
}

inline NoiseSpec make_noise(const std::string& family, const std::vector<double>& values,
                            const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& key, const std::string& fallback) {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
  };
  NoiseSpec spec;
  if (family == "normal_mixture") {
    spec.kind = noise::NormalMixture{values, parse_double(get("sigma", "1"), "sigma")};
  } else if (family == "t_mixture") {
    spec.kind = noise::TMixture{values, static_cast<int>(parse_integer(get("df", "6"), "df"))};
  } else if (family == "beta_mixture") {
    if (values.empty() || values.size() % 2)
      throw IoError("beta_mixture settings need shape pairs a1,b1,a2,b2,...");
    noise::BetaMixture b;
    for (std::size_t i = 0; i < values.size(); i += 2) b.shapes.emplace_back(values[i], values[i + 1]);
    spec.kind = b;
  } else if (family == "uniform") {
    if (values.size() != 1) throw IoError("uniform settings are single half-widths");
    spec.kind = noise::Uniform{values[0]};
  } else if (family == "normal" || family == "laplace") {
    if (values.size() != 1) throw IoError(family + " settings are single scales");
    spec.kind = noise::Single{family == "normal" ? noise::SingleKind::normal : noise::SingleKind::laplace,
                              values[0]};
  } else {
    throw IoError("unknown noise family '" + family + "'");
  }
  const std::string w = get("weights", "equal");
  if (w == "random") {
    spec.weights = noise::RandomUniformWeights{};
  } else if (w == "equal") {
    spec.weights = noise::FixedWeights{};
  } else {
    spec.weights = noise::FixedWeights{parse_list(w, "weights")};
  }
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw IoError(std::string("invalid noise setting: ") + e.what());
  }
  return spec;
}

}  // namespace detail

inline SimulationConfig parse_simulation_config(std::istream& in) {
  const auto kv = parse_key_values(in);
  static const std::vector<std::string> known{"experiment", "noise",   "settings", "sigma",
                                              "df",         "weights", "sample_sizes", "replications",
                                              "seed",       "mode",    "alpha",    "k",
                                              "title",      "output",  "threads"};
  for (const auto& [key, value] : kv)
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw IoError("unknown config key '" + key + "'");
  auto has = [&](const char* key) { return kv.count(key) > 0; };

  SimulationConfig cfg;
  const std::string experiment = has("experiment") ? kv.at("experiment") : "risk";
  if (experiment == "risk") cfg.experiment = Experiment::risk;
  else if (experiment == "efficiency") cfg.experiment = Experiment::efficiency;
  else if (experiment == "rounding") cfg.experiment = Experiment::rounding;
  else throw IoError("unknown experiment '" + experiment + "'");

  if (has("replications")) {
    const long long r = parse_integer(kv.at("replications"), "replications");
    if (r < 1) throw DomainError("replications must be at least 1");
    cfg.replications = static_cast<int>(r);
  }
  if (has("seed")) {
    const long long s = parse_integer(kv.at("seed"), "seed");
    if (s < 0) throw IoError("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (has("mode")) {
    const std::string& m = kv.at("mode");
    if (m == "plugin") cfg.mode = DecisionMode::plugin;
    else if (m == "test") cfg.mode = DecisionMode::test;
    else throw IoError("mode must be plugin or test");
  }
  if (has("alpha")) cfg.alpha = parse_double(kv.at("alpha"), "alpha");
  if (has("k")) cfg.k = static_cast<int>(parse_integer(kv.at("k"), "k"));
  if (has("title")) cfg.title = kv.at("title");
  if (has("output")) cfg.output = kv.at("output");
  if (has("threads")) cfg.threads = static_cast<unsigned>(parse_integer(kv.at("threads"), "threads"));

  if (cfg.experiment == Experiment::rounding) return cfg;

  if (!has("noise")) throw IoError("config needs a 'noise' family");
  if (!has("sample_sizes")) throw IoError("config needs 'sample_sizes'");
  for (double n : parse_list(kv.at("sample_sizes"), "sample_sizes")) {
    if (n != std::floor(n) || n < 7) throw IoError("sample sizes must be integers >= 7");
    cfg.sample_sizes.push_back(static_cast<Eigen::Index>(n));
  }
  const std::string settings = has("settings") ? kv.at("settings") : "1";
  for (const auto& s : split(settings, '|')) {
    const auto values = parse_list(s, "settings");
    cfg.labels.push_back(detail::setting_label(values));
    cfg.settings.push_back(detail::make_noise(kv.at("noise"), values, kv));
  }
  return cfg;
}

inline SimulationConfig read_simulation_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_simulation_config(in);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(VectorXd(m.row(i).transpose())));
  return a;
}

inline json to_json(const EstimateReport& r) {
  return {{"loss_order", r.loss_order},
          {"beta_hat", to_json(r.beta_hat)},
          {"std_errors", to_json(r.std_errors)},
          {"covariance", to_json(r.covariance)},
          {"objective_value", r.objective_value},
          {"gradient_norm", r.gradient_norm},
          {"gradient_tolerance", r.gradient_tolerance},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"status", to_string(r.status)},
          {"ill_conditioned", r.ill_conditioned}};
}

inline json to_json(const FitQuality& q) {
  return {{"q_fit", q.q_fit}, {"q_zero", q.q_zero}, {"q_max", q.q_max}, {"r2_rg", q.r2_rg}};
}

inline json to_json(const DecisionStatistics& s) {
  json gamma = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int j = 0; j < 4; ++j) row.push_back(s.gamma_hat(i, j));
    gamma.push_back(row);
  }
  json alpha = json::array();
  for (int i = 0; i < 4; ++i) alpha.push_back(s.alpha0_hat[i]);
  return {{"n", s.n},
          {"v_hat", s.v_hat},
          {"t_stat", s.t_stat},
          {"s_squared", s.s_squared},
          {"s_squared_clamped", s.s_squared_clamped},
          {"confidence_interval", {s.confidence_interval.first, s.confidence_interval.second}},
          {"null_region", {s.null_region.first, s.null_region.second}},
          {"verdict", to_string(s.verdict)},
          {"mode", to_string(s.mode)},
          {"alpha_level", s.alpha_level},
          {"alpha0_hat", alpha},
          {"gamma_hat", gamma}};
}

inline json to_json(const CriterionResult& c) {
  json j = {{"ratio", c.ratio}, {"prefers_l4", c.prefers_l4}, {"method", to_string(c.method)}};
  if (c.mixture_polynomial) j["mixture_polynomial"] = *c.mixture_polynomial;
  return j;
}

inline std::string describe(const NoiseSpec& spec) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const noise::NormalMixture& m) {
                   os << "normal_mixture(means=" << detail::setting_label(m.means) << ", sigma=" << m.sigma << ")";
                 },
                 [&](const noise::TMixture& m) {
                   os << "t_mixture(means=" << detail::setting_label(m.means) << ", df=" << m.df << ")";
                 },
                 [&](const noise::BetaMixture& m) {
                   std::vector<double> v;
                   for (auto [a, b] : m.shapes) {
                     v.push_back(a);
                     v.push_back(b);
                   }
                   os << "beta_mixture(shapes=" << detail::setting_label(v) << ")";
                 },
                 [&](const noise::Uniform& u) { os << "uniform(a=" << u.a << ")"; },
                 [&](const noise::Single& s) {
                   const char* name = s.kind == noise::SingleKind::normal    ? "normal"
                                      : s.kind == noise::SingleKind::laplace ? "laplace"
                                                                             : "uniform";
                   os << name << "(scale=" << s.scale << ")";
                 },
             },
             spec.kind);
  os << (spec.random_weights() ? ", weights=random" : ", weights=fixed");
  return os.str();
}

inline json to_json(const RiskTable& t) {
  json cells = json::array();
  for (const auto& c : t.cells)
    cells.push_back({{"noise", describe(c.noise)},
                     {"n", c.n},
                     {"replications", c.replications},
                     {"favorable_count", c.favorable_count},
                     {"l4_count", c.l4_count},
                     {"failures", c.failures},
                     {"moments_may_not_exist", c.moments_may_not_exist}});
  return {{"seed", t.seed}, {"mode", to_string(t.mode)}, {"alpha_level", t.alpha_level}, {"cells", cells}};
}

inline json to_json(const EfficiencyResult& e) {
  return {{"k", e.k},
          {"n", e.n},
          {"replications", e.replications},
          {"failures", e.failures},
          {"empirical_var_ratio", e.empirical_var_ratio},
          {"theoretical_ratio", e.theoretical_ratio},
          {"paper_form_ratio", e.paper_form_ratio},
          {"mc_sd_ols", e.mc_sd_ols},
          {"mc_sd_l2k", e.mc_sd_l2k},
          {"mean_se_ols", e.mean_se_ols},
          {"mean_se_l2k", e.mean_se_l2k}};
}

inline json to_json(const RoundingSummary& s) {
  return {{"replications", s.replications},
          {"failures", s.failures},
          {"mean_beta_l2", to_json(s.mean_beta_l2)},
          {"mean_beta_l4", to_json(s.mean_beta_l4)},
          {"l4_preferred_fraction", s.l4_preferred_fraction},
          {"l4_preferred_fraction_test", s.l4_preferred_fraction_test},
          {"pseudo_r2_l4_wins_fraction", s.pseudo_r2_l4_wins_fraction},
          {"mean_r2_l2", s.mean_r2_l2},
          {"mean_r2_l4", s.mean_r2_l4}};
}

// ---------------------------------------------------------------------------
// Aligned text
// ---------------------------------------------------------------------------

/// Rows = sample sizes, columns = settings; cell (i, j) is table.cells[j * rows + i].
inline void write_risk_text(std::ostream& out, const RiskTable& t, const std::vector<std::string>& labels,
                            const std::vector<Eigen::Index>& sample_sizes, const std::string& title = "") {
  const std::size_t rows = sample_sizes.size();
  auto block = [&](const char* heading, auto count) {
    out << heading << '\n';
    out << std::left << std::setw(12) << "n";
    for (const auto& l : labels) out << std::right << std::setw(16) << l;
    out << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
      out << std::left << std::setw(12) << sample_sizes[i];
      for (std::size_t j = 0; j < labels.size(); ++j) out << std::right << std::setw(16) << count(t.cells[j * rows + i]);
      out << '\n';
    }
  };
  if (!title.empty()) out << title << '\n';
  out << "seed " << t.seed << ", mode " << to_string(t.mode) << ", alpha " << t.alpha_level;
  if (!t.cells.empty()) out << ", replications " << t.cells.front().replications;
  out << '\n';
  block("L4 preferred", [](const RiskCell& c) { return c.l4_count; });
  block("agrees with population criterion", [](const RiskCell& c) { return c.favorable_count; });
  int failures = 0;
  bool heavy = false;
  for (const auto& c : t.cells) {
    failures += c.failures;
    heavy = heavy || c.moments_may_not_exist;
  }
  if (failures) out << "failed replications: " << failures << '\n';
  if (heavy) out << "note: sixth-order moments of the error law may not exist\n";
}

inline void write_estimate_text(std::ostream& out, const EstimateReport& r,
                                const std::vector<std::string>& names, const FitQuality* quality) {
  out << "L" << r.loss_order << " fit: " << to_string(r.status) << " after " << r.iterations
      << " iterations (gradient " << std::scientific << std::setprecision(3) << r.gradient_norm
      << ", tolerance " << r.gradient_tolerance << ")\n"
      << std::defaultfloat;
  out << std::left << std::setw(16) << "term" << std::right << std::setw(18) << "estimate" << std::setw(18)
      << "std. error" << '\n';
  for (Eigen::Index j = 0; j < r.beta_hat.size(); ++j) {
    const std::string name = j < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(j)]
                                                                          : "b" + std::to_string(j);
    out << std::left << std::setw(16) << name << std::right << std::setprecision(8) << std::setw(18)
        << r.beta_hat[j] << std::setw(18) << r.std_errors[j] << '\n';
  }
  out << "objective " << std::setprecision(10) << r.objective_value << '\n';
  if (quality) out << "pseudo R2 " << quality->r2_rg << '\n';
  if (r.ill_conditioned) out << "warning: Hessian is ill-conditioned\n";
}

inline void write_decision_text(std::ostream& out, const DecisionStatistics& s) {
  out << std::setprecision(6);
  out << "n " << s.n << '\n'
      << "v_hat " << s.v_hat << '\n'
      << "test statistic T " << s.t_stat << '\n'
      << (1.0 - s.alpha_level) * 100.0 << "% interval for v (" << s.confidence_interval.first << ", "
      << s.confidence_interval.second << ")\n"
      << "acceptance region around 9 (" << s.null_region.first << ", " << s.null_region.second << ")\n"
      << "mode " << to_string(s.mode) << ", verdict " << to_string(s.verdict) << '\n';
  if (s.s_squared_clamped) out << "warning: variance estimate was negative and has been clamped\n";
}

}  // namespace hnorm::io
