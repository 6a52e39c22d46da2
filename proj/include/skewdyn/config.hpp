#pragma once

// JSON run configuration, serialization of maps/products/certificates, and
// the CSV formats used by the command-line tool. Symbols are 1-based in
// every text format.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "drift_analysis.hpp"
#include "error.hpp"
#include "fiber_maps.hpp"
#include "measure_family.hpp"
#include "skew_product.hpp"
#include "symbolic_base.hpp"

namespace skewdyn {

using json = nlohmann::json;

/// Fixed 17-significant-digit rendering.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct FamilyConfig {
  double kappa = 1.0;
  double tau_min = 0.0;
  double tau_max = 0.0;
};

struct AnalysisConfig {
  int depth = 8;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  std::vector<double> grid;
  double epsilon = 0.05;
  int approx_m = 3;
  int approx_max = 5;
  std::string points;
};

struct RunConfig {
  std::optional<MarkovChain> chain;
  std::optional<MultistepSkewProduct> product;
  std::optional<ContinuousProductSpec> continuous;
  std::optional<FamilyConfig> family;
  AnalysisConfig analysis;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::config, path + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) config_error(path + "." + key, "missing field");
  return *it;
}

inline double real_at(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "must be finite");
  return v;
}

inline std::int64_t integer_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) config_error(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t unsigned_at(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    if (!j.is_number_unsigned()) config_error(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

inline const json& array_at(const json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array");
  return j;
}

template <class Fn>
auto anchored(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    std::string msg = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (msg.starts_with(prefix)) msg.erase(0, prefix.size());
    throw Error(e.kind(), path + ": " + msg);
  }
}

inline std::vector<Symbol> word_at(const json& j, const std::string& path, int alphabet) {
  array_at(j, path);
  std::vector<Symbol> w;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto s = integer_at(j[i], path + "[" + std::to_string(i) + "]");
    if (s < 1 || s > alphabet) config_error(path + "[" + std::to_string(i) + "]", "symbol outside 1..N");
    w.push_back(static_cast<Symbol>(s - 1));
  }
  return w;
}

}  // namespace detail

inline MapForm parse_form(const std::string& name, const std::string& path) {
  if (name == "affine") return MapForm::affine;
  if (name == "bumped_affine") return MapForm::bumped_affine;
  if (name == "plateau") return MapForm::plateau;
  detail::config_error(path, "unknown map form '" + name + "'");
}

inline FiberMap parse_map(const json& j, const std::string& path) {
  const json& form = detail::field(j, "form", path);
  if (!form.is_string()) detail::config_error(path + ".form", "expected a string");
  const MapForm f = parse_form(form.get<std::string>(), path + ".form");
  const json& params = detail::array_at(detail::field(j, "parameters", path), path + ".parameters");
  std::vector<double> p;
  for (std::size_t i = 0; i < params.size(); ++i) {
    p.push_back(detail::real_at(params[i], path + ".parameters[" + std::to_string(i) + "]"));
  }
  double bump = 0.0;
  if (j.contains("bump")) bump = detail::real_at(j["bump"], path + ".bump");
  FiberMap m = detail::anchored(path, [&] { return FiberMap::from_parameters(f, p, bump); });
  if (auto check = validate_class(m); !check) detail::config_error(path, "map violates the class: " + check.detail);
  return m;
}

inline json to_json(const FiberMap& f) {
  json j;
  j["form"] = std::string(to_string(f.form()));
  j["parameters"] = std::vector<double>(f.parameters().begin(), f.parameters().end());
  if (f.bump() != 0.0) j["bump"] = f.bump();
  return j;
}

inline json word_to_json(std::span<const Symbol> w) {
  json a = json::array();
  for (Symbol s : w) a.push_back(s + 1);
  return a;
}

inline json to_json(const MultistepSkewProduct& f) {
  json assignment = json::array();
  for (std::size_t i = 0; i < f.words().size(); ++i) {
    assignment.push_back({{"word", word_to_json(f.words().word(i))}, {"map", to_json(f.map(i))}});
  }
  return {{"window", {f.left(), f.right()}}, {"assignment", std::move(assignment)}};
}

inline MarkovChain parse_base(const json& j, const std::string& path) {
  const auto n = detail::integer_at(detail::field(j, "alphabet_size", path), path + ".alphabet_size");
  if (n < 2) detail::config_error(path + ".alphabet_size", "must be >= 2");
  if (n > kMaxAlphabet) {
    fail(ErrorKind::resource_limit, path + ".alphabet_size: larger than " + std::to_string(kMaxAlphabet));
  }
  const std::string tpath = path + ".transitions";
  const json& t = detail::array_at(detail::field(j, "transitions", path), tpath);
  if (static_cast<std::int64_t>(t.size()) != n) detail::config_error(tpath, "expected N rows");
  IntMatrix a;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::string rp = tpath + "[" + std::to_string(i) + "]";
    detail::array_at(t[i], rp);
    if (static_cast<std::int64_t>(t[i].size()) != n) detail::config_error(rp, "expected N entries");
    std::vector<int> row;
    for (std::size_t k = 0; k < t[i].size(); ++k) {
      row.push_back(static_cast<int>(detail::integer_at(t[i][k], rp + "[" + std::to_string(k) + "]")));
    }
    a.push_back(std::move(row));
  }
  TransitionSystem sys = detail::anchored(tpath, [&] { return TransitionSystem(a); });
  if (!j.contains("stochastic")) return MarkovChain::uniform(sys);

  const std::string spath = path + ".stochastic";
  const json& s = detail::array_at(j["stochastic"], spath);
  RealMatrix p;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string rp = spath + "[" + std::to_string(i) + "]";
    detail::array_at(s[i], rp);
    std::vector<double> row;
    for (std::size_t k = 0; k < s[i].size(); ++k) row.push_back(detail::real_at(s[i][k], rp + "[" + std::to_string(k) + "]"));
    p.push_back(std::move(row));
  }
  return detail::anchored(spath, [&] { return MarkovChain(sys, p); });
}

inline MultistepSkewProduct parse_product(const json& j, const MarkovChain& chain, const std::string& path) {
  const int n = chain.base().alphabet_size();
  if (j.contains("map")) {
    return MultistepSkewProduct::constant(chain, parse_map(j["map"], path + ".map"));
  }
  if (j.contains("symbol_maps")) {
    const json& sm = detail::array_at(j["symbol_maps"], path + ".symbol_maps");
    if (static_cast<int>(sm.size()) != n) detail::config_error(path + ".symbol_maps", "expected one map per symbol");
    std::vector<FiberMap> maps;
    for (std::size_t i = 0; i < sm.size(); ++i) maps.push_back(parse_map(sm[i], path + ".symbol_maps[" + std::to_string(i) + "]"));
    return MultistepSkewProduct::per_symbol(chain, std::move(maps));
  }
  const json& w = detail::array_at(detail::field(j, "window", path), path + ".window");
  if (w.size() != 2) detail::config_error(path + ".window", "expected [l, r]");
  const auto l = detail::integer_at(w[0], path + ".window[0]");
  const auto r = detail::integer_at(w[1], path + ".window[1]");
  if (l < 0 || r < 0) detail::config_error(path + ".window", "entries must be nonnegative");
  if (l + r + 1 > kMaxWindow) {
    fail(ErrorKind::resource_limit, path + ".window: size exceeds " + std::to_string(kMaxWindow));
  }
  const std::string apath = path + ".assignment";
  const json& a = detail::array_at(detail::field(j, "assignment", path), apath);
  std::vector<std::pair<std::vector<Symbol>, FiberMap>> assignment;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string ep = apath + "[" + std::to_string(i) + "]";
    assignment.emplace_back(detail::word_at(detail::field(a[i], "word", ep), ep + ".word", n),
                            parse_map(detail::field(a[i], "map", ep), ep + ".map"));
  }
  return detail::anchored(apath, [&] {
    return MultistepSkewProduct::from_assignment(chain, static_cast<int>(l), static_cast<int>(r), assignment);
  });
}

inline ContinuousProductSpec parse_continuous(const json& j, const MarkovChain& chain, const std::string& path) {
  ContinuousProductSpec spec{chain, parse_map(detail::field(j, "template", path), path + ".template"), 0, {}, {}};
  if (j.contains("designated")) spec.designated = static_cast<int>(detail::integer_at(j["designated"], path + ".designated"));
  const json& bv = detail::array_at(detail::field(j, "base_values", path), path + ".base_values");
  for (std::size_t i = 0; i < bv.size(); ++i) {
    spec.base_value.push_back(detail::real_at(bv[i], path + ".base_values[" + std::to_string(i) + "]"));
  }
  const json& c = detail::array_at(detail::field(j, "coefficients", path), path + ".coefficients");
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::string rp = path + ".coefficients[" + std::to_string(i) + "]";
    detail::array_at(c[i], rp);
    std::vector<double> row;
    for (std::size_t k = 0; k < c[i].size(); ++k) row.push_back(detail::real_at(c[i][k], rp + "[" + std::to_string(k) + "]"));
    spec.coefficients.push_back(std::move(row));
  }
  detail::anchored(path, [&] {
    validate_spec(spec);
    return 0;
  });
  return spec;
}

/// "lo:hi:step" or an explicit array.
inline std::vector<double> parse_grid(const std::string& text, const std::string& path) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      detail::config_error(path, "malformed grid '" + text + "', expected lo:hi:step");
    }
  }
  if (parts.size() != 3) detail::config_error(path, "malformed grid '" + text + "', expected lo:hi:step");
  return detail::anchored(path, [&] { return make_grid(parts[0], parts[1], parts[2]); });
}

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) detail::config_error("$", "expected an object");
  RunConfig cfg;
  cfg.chain = parse_base(detail::field(j, "base", "$"), "$.base");
  if (j.contains("product")) cfg.product = parse_product(j["product"], *cfg.chain, "$.product");
  if (j.contains("continuous")) cfg.continuous = parse_continuous(j["continuous"], *cfg.chain, "$.continuous");
  if (j.contains("family")) {
    const json& f = j["family"];
    FamilyConfig fc;
    fc.kappa = detail::real_at(detail::field(f, "kappa", "$.family"), "$.family.kappa");
    const json& r = detail::array_at(detail::field(f, "tau_range", "$.family"), "$.family.tau_range");
    if (r.size() != 2) detail::config_error("$.family.tau_range", "expected [tau_min, tau_max]");
    fc.tau_min = detail::real_at(r[0], "$.family.tau_range[0]");
    fc.tau_max = detail::real_at(r[1], "$.family.tau_range[1]");
    cfg.family = fc;
  }
  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    const std::string p = "$.analysis";
    if (!a.is_object()) detail::config_error(p, "expected an object");
    if (a.contains("depth")) cfg.analysis.depth = static_cast<int>(detail::integer_at(a["depth"], p + ".depth"));
    if (a.contains("samples")) cfg.analysis.samples = detail::unsigned_at(a["samples"], p + ".samples");
    if (a.contains("seed")) cfg.analysis.seed = detail::unsigned_at(a["seed"], p + ".seed");
    if (a.contains("epsilon")) cfg.analysis.epsilon = detail::real_at(a["epsilon"], p + ".epsilon");
    if (a.contains("m")) cfg.analysis.approx_m = static_cast<int>(detail::integer_at(a["m"], p + ".m"));
    if (a.contains("m_max")) cfg.analysis.approx_max = static_cast<int>(detail::integer_at(a["m_max"], p + ".m_max"));
    if (a.contains("points")) {
      if (!a["points"].is_string()) detail::config_error(p + ".points", "expected a path string");
      cfg.analysis.points = a["points"].get<std::string>();
    }
    if (a.contains("grid")) {
      const json& g = a["grid"];
      if (g.is_string()) {
        cfg.analysis.grid = parse_grid(g.get<std::string>(), p + ".grid");
      } else {
        detail::array_at(g, p + ".grid");
        for (std::size_t i = 0; i < g.size(); ++i) cfg.analysis.grid.push_back(detail::real_at(g[i], p + ".grid[" + std::to_string(i) + "]"));
      }
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, path + ": cannot open");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, path + ": " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Windows and points

/// "offset s1 s2 ..." with 1-based symbols.
inline std::string format_window(const SymbolWindow& w) {
  std::string s = std::to_string(w.offset());
  for (Symbol v : w.symbols()) s += " " + std::to_string(v + 1);
  return s;
}

inline SymbolWindow parse_window(const std::string& text, int alphabet) {
  std::istringstream in(text);
  long offset = 0;
  if (!(in >> offset)) fail(ErrorKind::config, "window '" + text + "': missing offset");
  std::vector<Symbol> symbols;
  long s = 0;
  while (in >> s) {
    if (s < 1 || s > alphabet) fail(ErrorKind::config, "window '" + text + "': symbol outside 1..N");
    symbols.push_back(static_cast<Symbol>(s - 1));
  }
  if (!in.eof()) fail(ErrorKind::config, "window '" + text + "': malformed symbol");
  if (symbols.empty()) fail(ErrorKind::config, "window '" + text + "': no symbols");
  return SymbolWindow(static_cast<int>(offset), std::move(symbols));
}

/// Points CSV with header "window,x".
inline std::vector<LabeledPoint> read_points_csv(std::istream& in, const TransitionSystem& sys) {
  std::vector<LabeledPoint> pts;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "window,x") fail(ErrorKind::config, "points line " + std::to_string(lineno) + ": expected header 'window,x'");
      header = true;
      continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) fail(ErrorKind::config, "points line " + std::to_string(lineno) + ": expected 'window,x'");
    LabeledPoint p;
    try {
      p.window = parse_window(line.substr(0, comma), sys.alphabet_size());
      std::size_t used = 0;
      const std::string xs = line.substr(comma + 1);
      p.x = std::stod(xs, &used);
      if (used != xs.size() || !std::isfinite(p.x)) throw std::invalid_argument(xs);
    } catch (const Error& e) {
      fail(ErrorKind::config, "points line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception&) {
      fail(ErrorKind::config, "points line " + std::to_string(lineno) + ": malformed x");
    }
    if (!sys.admissible(p.window.symbols())) {
      fail(ErrorKind::config, "points line " + std::to_string(lineno) + ": inadmissible window");
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Certificates and reports

inline json to_json(const DriftCertificate& c) {
  json values = json::array();
  for (std::size_t i = 0; i < c.graph.words().size(); ++i) {
    values.push_back({{"word", word_to_json(c.graph.words().word(i))}, {"value", c.graph.values()[i]}});
  }
  std::ostringstream fp;
  fp << std::hex << std::setw(16) << std::setfill('0') << c.fingerprint;
  return {{"direction", std::string(to_string(c.direction))},
          {"window", {c.graph.left(), c.graph.right()}},
          {"values", std::move(values)},
          {"margin", c.margin},
          {"fingerprint", fp.str()}};
}

inline DriftCertificate certificate_from_json(const json& j, const TransitionSystem& sys) {
  const std::string p = "certificate";
  const json& d = detail::field(j, "direction", p);
  if (!d.is_string() || (d != "up" && d != "down")) detail::config_error(p + ".direction", "expected 'up' or 'down'");
  const json& w = detail::array_at(detail::field(j, "window", p), p + ".window");
  if (w.size() != 2) detail::config_error(p + ".window", "expected [L, R]");
  const int l = static_cast<int>(detail::integer_at(w[0], p + ".window[0]"));
  const int r = static_cast<int>(detail::integer_at(w[1], p + ".window[1]"));
  const WordTable table(sys, l + r + 1);
  std::vector<double> values(table.size(), -1.0);
  const json& vs = detail::array_at(detail::field(j, "values", p), p + ".values");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string ep = p + ".values[" + std::to_string(i) + "]";
    const auto word = detail::word_at(detail::field(vs[i], "word", ep), ep + ".word", sys.alphabet_size());
    const std::int32_t idx = table.find(word);
    if (idx < 0) detail::config_error(ep + ".word", "inadmissible or wrong length");
    values[static_cast<std::size_t>(idx)] = detail::real_at(detail::field(vs[i], "value", ep), ep + ".value");
  }
  StepGraph g = detail::anchored(p + ".values", [&] { return StepGraph(sys, l, r, values); });
  std::uint64_t fingerprint = 0;
  if (j.contains("fingerprint") && j["fingerprint"].is_string()) {
    fingerprint = std::stoull(j["fingerprint"].get<std::string>(), nullptr, 16);
  }
  const double margin = j.contains("margin") ? detail::real_at(j["margin"], p + ".margin") : 0.0;
  return {std::move(g), d == "up" ? Direction::up : Direction::down, margin, fingerprint};
}

inline json classification_report(const MultistepSkewProduct& f, const LabeledPoint& p, const Classification& c) {
  json j{{"window", format_window(p.window)},
         {"x", p.x},
         {"verdict", std::string(to_string(c.verdict))},
         {"depth", c.depth_searched}};
  if (c.witness) {
    j["witness"] = {{"level", c.witness->level},
                    {"iterations", c.witness->iterations},
                    {"strip_margin", c.witness->strip_margin}};
    j["certificate"] = to_json(make_certificate(f, *c.witness));
  }
  return j;
}

inline json to_json(const RegionEstimate& e) {
  return {{"certified_up", e.certified_up}, {"certified_down", e.certified_down},
          {"mc_up", e.mc_up},               {"mc_down", e.mc_down},
          {"mc_unknown", e.mc_unknown},     {"radius", e.radius},
          {"indiff_upper", e.indiff_upper()}, {"n", e.samples},
          {"M", e.depth},                   {"seed", e.seed}};
}

// ---------------------------------------------------------------------------
// CSV

inline std::string run_header(std::uint64_t seed, int depth, std::uint64_t samples) {
  return "# seed=" + std::to_string(seed) + " depth=" + std::to_string(depth) + " samples=" + std::to_string(samples) + "\n";
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& sr, std::uint64_t seed, int depth, std::uint64_t n) {
  out << run_header(seed, depth, n);
  out << "tau,certified_up,certified_down,mc_up,mc_down,mc_unknown,radius,n,M,seed\n";
  for (const auto& p : sr.points) {
    const auto& e = p.estimate;
    out << format_real(p.tau) << ',' << format_real(e.certified_up) << ',' << format_real(e.certified_down) << ','
        << format_real(e.mc_up) << ',' << format_real(e.mc_down) << ',' << format_real(e.mc_unknown) << ','
        << format_real(e.radius) << ',' << e.samples << ',' << e.depth << ',' << e.seed << '\n';
  }
}

inline void write_gaps_csv(std::ostream& out, const std::vector<Gap>& gaps, std::uint64_t seed, int depth,
                           std::uint64_t n) {
  out << run_header(seed, depth, n);
  out << "tau_lo,tau_hi,gap_lower_bound\n";
  for (const auto& g : gaps) {
    out << format_real(g.tau_lo) << ',' << format_real(g.tau_hi) << ',' << format_real(g.lower_bound) << '\n';
  }
}

/// Whitespace-separated columns for gnuplot.
inline void write_mu_data(std::ostream& out, const SweepResult& sr, std::uint64_t seed, int depth, std::uint64_t n) {
  out << run_header(seed, depth, n);
  out << "# tau mu_lower mu_mc radius\n";
  for (const auto& p : sr.points) {
    out << format_real(p.tau) << ' ' << format_real(p.estimate.certified_up) << ' ' << format_real(p.estimate.mc_up)
        << ' ' << format_real(p.estimate.radius) << '\n';
  }
}

}  // namespace skewdyn
