// skewdyn: validate / classify / measure / sweep / approx driven by a JSON config.
// Exit status: 0 ok, 2 validation failure, 3 resource bound exceeded.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "skewdyn/skewdyn.hpp"

namespace fs = std::filesystem;
using namespace skewdyn;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> depth;
  std::optional<std::uint64_t> samples;
  std::optional<std::string> grid;
  std::optional<std::string> points;
  std::optional<int> m;
  std::optional<double> epsilon;
  std::string out = ".";
};

RunConfig load(const Overrides& o) {
  RunConfig cfg = load_config(o.config);
  auto& a = cfg.analysis;
  if (o.seed) a.seed = *o.seed;
  if (o.depth) a.depth = *o.depth;
  if (o.samples) a.samples = *o.samples;
  if (o.grid) a.grid = parse_grid(*o.grid, "--grid");
  if (o.m) a.approx_m = *o.m;
  if (o.epsilon) a.epsilon = *o.epsilon;
  if (o.points) {
    a.points = *o.points;
  } else if (!a.points.empty() && fs::path(a.points).is_relative()) {
    a.points = (fs::path(o.config).parent_path() / a.points).string();
  }
  if (a.depth < 0) fail(ErrorKind::config, "depth must be >= 0");
  // witness graphs never grow past the window cap, so deeper searches only add sample cost
  if (a.depth > 64) fail(ErrorKind::resource_limit, "depth " + std::to_string(a.depth) + " exceeds 64");
  return cfg;
}

const MultistepSkewProduct& need_product(const RunConfig& cfg) {
  if (!cfg.product) fail(ErrorKind::config, "$.product: required by this command");
  return *cfg.product;
}

std::ofstream open_out(const Overrides& o, const std::string& name) {
  fs::create_directories(o.out);
  const fs::path p = fs::path(o.out) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorKind::config, p.string() + ": cannot write");
  return f;
}

int cmd_validate(const Overrides& o) {
  const RunConfig cfg = load(o);
  const auto& chain = *cfg.chain;
  const auto& sys = chain.base();
  std::cout << "base: " << sys.alphabet_size() << " symbols, transitive\n";
  std::cout << "pi:";
  for (double p : chain.stationary()) std::cout << ' ' << format_real(p);
  std::cout << '\n';
  bool ok = true;
  if (cfg.product) {
    const auto& f = *cfg.product;
    std::cout << "product: window (" << f.left() << ", " << f.right() << "), " << f.words().size()
              << " words, all maps in class, fingerprint " << std::hex << f.fingerprint() << std::dec << '\n';
  }
  if (cfg.continuous) {
    std::cout << "continuous: " << to_string(cfg.continuous->templ.form()) << " template, parameter "
              << cfg.continuous->designated << ", class holds on the full coefficient range\n";
  }
  if (cfg.family) {
    const auto& fc = *cfg.family;
    try {
      const MonotoneFamily fam(need_product(cfg), fc.kappa, fc.tau_min, fc.tau_max);
      const bool ordered = fc.tau_min == fc.tau_max || fam.certify_order(fc.tau_min, fc.tau_max);
      std::cout << "family: kappa " << format_real(fc.kappa) << ", tau in [" << format_real(fc.tau_min) << ", "
                << format_real(fc.tau_max) << "], endpoints in class, "
                << (ordered ? "monotone" : "monotonicity NOT certified") << '\n';
      ok = ok && ordered;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::resource_limit) throw;
      std::cout << "family: FAIL " << e.what() << '\n';
      ok = false;
    }
  }
  std::cout << (ok ? "OK\n" : "FAIL\n");
  return ok ? 0 : 2;
}

int cmd_classify(const Overrides& o) {
  const RunConfig cfg = load(o);
  const auto& f = need_product(cfg);
  const auto& a = cfg.analysis;
  if (a.points.empty()) fail(ErrorKind::config, "$.analysis.points: no points file given (use --points)");
  std::ifstream in(a.points);
  if (!in) fail(ErrorKind::config, a.points + ": cannot open");
  const auto points = read_points_csv(in, f.base());
  const WitnessSearch search(f, a.depth);

  std::vector<Classification> results(points.size());
  const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  const std::size_t chunk = (points.size() + workers - 1) / std::max<std::size_t>(workers, 1);
  std::vector<std::future<void>> jobs;
  for (std::size_t b = 0; b < points.size(); b += chunk) {
    jobs.push_back(std::async(std::launch::async, [&, b] {
      for (std::size_t i = b; i < std::min(points.size(), b + chunk); ++i) results[i] = search.classify(points[i]);
    }));
  }
  for (auto& j : jobs) j.get();

  auto csv = open_out(o, "verdicts.csv");
  auto jl = open_out(o, "classifications.jsonl");
  csv << run_header(a.seed, a.depth, points.size());
  csv << "window,x,verdict,level,iterations,strip_margin\n";
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& c = results[i];
    ++counts[static_cast<int>(c.verdict)];
    csv << format_window(points[i].window) << ',' << format_real(points[i].x) << ',' << to_string(c.verdict);
    if (c.witness) {
      csv << ',' << format_real(c.witness->level) << ',' << c.witness->iterations << ','
          << format_real(c.witness->strip_margin);
    } else {
      csv << ",,,";
    }
    csv << '\n';
    jl << classification_report(f, points[i], c).dump() << '\n';
  }
  std::cout << points.size() << " points: " << counts[0] << " Up, " << counts[1] << " Down, " << counts[2]
            << " Unknown\n";
  return 0;
}

int cmd_measure(const Overrides& o) {
  const RunConfig cfg = load(o);
  const auto& a = cfg.analysis;
  const RegionEstimate e = estimate_regions(need_product(cfg), a.depth, a.samples, a.seed);
  const json j = to_json(e);
  open_out(o, "region_estimate.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Overrides& o) {
  const RunConfig cfg = load(o);
  if (!cfg.family) fail(ErrorKind::config, "$.family: required by sweep");
  const auto& a = cfg.analysis;
  if (a.grid.empty()) fail(ErrorKind::config, "$.analysis.grid: required by sweep (or --grid)");
  const MonotoneFamily fam(need_product(cfg), cfg.family->kappa, cfg.family->tau_min, cfg.family->tau_max);
  SweepResult sr = sweep(fam, a.grid, a.depth, a.samples, a.seed);
  sr.gaps = detect_gaps(sr, a.epsilon);
  auto sweep_csv = open_out(o, "sweep.csv");
  write_sweep_csv(sweep_csv, sr, a.seed, a.depth, a.samples);
  auto gaps_csv = open_out(o, "gaps.csv");
  write_gaps_csv(gaps_csv, sr.gaps, a.seed, a.depth, a.samples);
  auto mu = open_out(o, "mu.dat");
  write_mu_data(mu, sr, a.seed, a.depth, a.samples);
  std::cout << sr.points.size() << " grid points, " << sr.gaps.size() << " gap(s)\n";
  for (const auto& g : sr.gaps) {
    std::cout << "  [" << format_real(g.tau_lo) << ", " << format_real(g.tau_hi) << "] >= " << format_real(g.lower_bound)
              << '\n';
  }
  return 0;
}

int cmd_approx(const Overrides& o) {
  const RunConfig cfg = load(o);
  if (!cfg.continuous) fail(ErrorKind::config, "$.continuous: required by approx");
  const auto& spec = *cfg.continuous;
  const auto& a = cfg.analysis;
  const MultistepSkewProduct fm = multistep_approximation(spec, a.approx_m);
  open_out(o, "approx_product.json") << to_json(fm).dump(2) << '\n';

  auto csv = open_out(o, "distance_ladder.csv");
  csv << run_header(a.seed, a.depth, a.samples);
  csv << "m,distance_to_next,parameter_bound,ratio\n";
  const int top = std::min(a.approx_max, (kMaxWindow - 1) / 2 - 1);
  double prev = 0.0;
  for (int m = 0; m <= top; ++m) {
    const double d = distance(multistep_approximation(spec, m), multistep_approximation(spec, m + 1));
    csv << m << ',' << format_real(d) << ',' << format_real(truncation_parameter_bound(spec, m)) << ',';
    if (m > 0 && prev > 0.0) csv << format_real(d / prev);
    csv << '\n';
    prev = d;
  }
  std::cout << "m = " << a.approx_m << ": window (" << fm.left() << ", " << fm.right() << "), " << fm.words().size()
            << " words\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interval skew products over subshifts: drift certification, region measures, family sweeps"};
  app.require_subcommand(1);
  Overrides o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config")->required();
    sub->add_option("--seed", o.seed, "Monte Carlo seed");
    sub->add_option("--depth", o.depth, "search depth M");
    sub->add_option("--samples", o.samples, "Monte Carlo sample count");
    sub->add_option("--out", o.out, "output directory");
  };
  auto* v = app.add_subcommand("validate", "check the config and print a report");
  common(v);
  auto* c = app.add_subcommand("classify", "classify points from a CSV");
  common(c);
  c->add_option("--points", o.points, "points CSV (window,x)");
  auto* me = app.add_subcommand("measure", "estimate region measures");
  common(me);
  auto* s = app.add_subcommand("sweep", "sweep the monotone family");
  common(s);
  s->add_option("--grid", o.grid, "lo:hi:step");
  s->add_option("--epsilon", o.epsilon, "gap threshold");
  auto* ap = app.add_subcommand("approx", "multistep approximation of a continuous product");
  common(ap);
  ap->add_option("--m", o.m, "truncation depth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*v) return cmd_validate(o);
    if (*c) return cmd_classify(o);
    if (*me) return cmd_measure(o);
    if (*s) return cmd_sweep(o);
    if (*ap) return cmd_approx(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::resource_limit ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
