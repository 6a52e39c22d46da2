#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cylinder_union.hpp"
#include "drift_analysis.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "skew_product.hpp"
#include "symbolic_base.hpp"

namespace skewdyn {

inline constexpr double kConfidenceLevel = 0.95;

/// Standard measure of a union of boxes; boxes on one cylinder must be disjoint.
inline double measure_boxes(const MarkovChain& chain, std::span<const Box> boxes) {
  std::map<std::pair<int, std::vector<Symbol>>, std::vector<RealInterval>> by_cylinder;
  for (const auto& b : boxes) {
    if (!(b.x.lo <= b.x.hi)) fail(ErrorKind::invalid_region, "box interval has lo > hi");
    by_cylinder[{b.cylinder.offset(), b.cylinder.symbols()}].push_back(b.x);
  }
  double total = 0.0;
  for (auto& [key, ivs] : by_cylinder) {
    std::sort(ivs.begin(), ivs.end(), [](const RealInterval& a, const RealInterval& b) { return a.lo < b.lo; });
    double len = 0.0;
    for (std::size_t i = 0; i < ivs.size(); ++i) {
      if (i > 0 && ivs[i].lo < ivs[i - 1].hi) fail(ErrorKind::invalid_region, "overlapping boxes on one cylinder");
      len += ivs[i].length();
    }
    if (len > 0.0) total += cylinder_measure(chain, SymbolWindow(key.first, key.second)) * len;
  }
  return total;
}

/// Two-sided Hoeffding radius at 95% confidence: sqrt(ln(2/0.05) / (2n)).
inline double hoeffding_radius(std::uint64_t n) {
  return std::sqrt(std::log(2.0 / (1.0 - kConfidenceLevel)) / (2.0 * static_cast<double>(n)));
}

struct RegionEstimate {
  double certified_up = 0.0;
  double certified_down = 0.0;
  double mc_up = 0.0;
  double mc_down = 0.0;
  double mc_unknown = 0.0;
  double radius = 0.0;
  std::uint64_t samples = 0;
  int depth = 0;
  std::uint64_t seed = 0;

  /// m(Indiff) lies in [0, indiff_upper()].
  double indiff_upper() const noexcept { return std::min(1.0, mc_unknown + radius); }

  friend bool operator==(const RegionEstimate&, const RegionEstimate&) = default;
};

struct SampleCounts {
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  std::uint64_t unknown = 0;
};

/// The i-th Monte Carlo point of run `seed`: w from the Markov measure on the
/// window the search needs, x uniform on [0,1).
inline LabeledPoint sample_point(const WitnessSearch& search, std::uint64_t seed, std::uint64_t i) {
  SplitMix64 gen = split_stream(seed, i);
  const auto [lo, hi] = search.required_window();
  SymbolWindow w = sample_window(search.product().chain(), lo, hi, gen);
  return {std::move(w), uniform01(gen)};
}

inline SampleCounts count_range(const WitnessSearch& search, std::uint64_t begin, std::uint64_t end,
                                std::uint64_t seed) {
  SampleCounts c;
  for (std::uint64_t i = begin; i < end; ++i) {
    switch (search.classify(sample_point(search, seed, i)).verdict) {
      case Verdict::up: ++c.up; break;
      case Verdict::down: ++c.down; break;
      case Verdict::unknown: ++c.unknown; break;
    }
  }
  return c;
}

/// Counts are sums over per-sample streams, so the thread split cannot change them.
inline SampleCounts count_classifications(const WitnessSearch& search, std::uint64_t n, std::uint64_t seed) {
  const std::uint64_t workers = std::clamp<std::uint64_t>(std::thread::hardware_concurrency(), 1, 16);
  if (workers == 1 || n < 2000) return count_range(search, 0, n, seed);
  std::vector<std::future<SampleCounts>> parts;
  const std::uint64_t chunk = (n + workers - 1) / workers;
  for (std::uint64_t b = 0; b < n; b += chunk) {
    parts.push_back(std::async(std::launch::async, count_range, std::cref(search), b, std::min(n, b + chunk), seed));
  }
  SampleCounts c;
  for (auto& f : parts) {
    const SampleCounts p = f.get();
    c.up += p.up;
    c.down += p.down;
    c.unknown += p.unknown;
  }
  return c;
}

inline RegionEstimate estimate_from(const WitnessSearch& search, CertifiedRegions& regions, std::uint64_t n,
                                    std::uint64_t seed) {
  if (n < 100) fail(ErrorKind::invalid_argument, "at least 100 samples required");
  const SampleCounts c = count_classifications(search, n, seed);
  const auto& chain = search.product().chain();
  RegionEstimate e;
  e.certified_up = regions.up.measure(chain);
  e.certified_down = regions.down.measure(chain);
  const double dn = static_cast<double>(n);
  e.mc_up = static_cast<double>(c.up) / dn;
  e.mc_down = static_cast<double>(c.down) / dn;
  e.mc_unknown = static_cast<double>(c.unknown) / dn;
  e.radius = hoeffding_radius(n);
  e.samples = n;
  e.depth = search.depth();
  e.seed = seed;
  return e;
}

/// Monte Carlo fractions of certified Up / Down / Unknown points plus the
/// exact measure of the certified box regions, both at depth M.
inline RegionEstimate estimate_regions(const MultistepSkewProduct& f, int depth, std::uint64_t n, std::uint64_t seed) {
  const WitnessSearch search(f, depth);
  CertifiedRegions regions = certified_regions(search);
  return estimate_from(search, regions, n, seed);
}

/// F_tau = psi_{tau kappa} o F with psi_s(y) = y + s y (1 - y), tau in [tau_min, tau_max].
class MonotoneFamily {
 public:
  MonotoneFamily(MultistepSkewProduct base, double kappa, double tau_min, double tau_max)
      : base_(std::move(base)), kappa_(kappa), tau_min_(tau_min), tau_max_(tau_max) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) fail(ErrorKind::invalid_argument, "kappa must be positive");
    if (!(tau_min <= tau_max) || !std::isfinite(tau_min) || !std::isfinite(tau_max)) {
      fail(ErrorKind::invalid_argument, "tau range must satisfy tau_min <= tau_max");
    }
    // Class constraints are monotone in the bump, so the range endpoints decide.
    member(tau_min);
    member(tau_max);
  }

  const MultistepSkewProduct& base() const noexcept { return base_; }
  double kappa() const noexcept { return kappa_; }
  double tau_min() const noexcept { return tau_min_; }
  double tau_max() const noexcept { return tau_max_; }

  MultistepSkewProduct member(double tau) const {
    if (!(tau >= tau_min_ && tau <= tau_max_)) {
      fail(ErrorKind::family_range, "tau = " + std::to_string(tau) + " outside [" + std::to_string(tau_min_) + ", " +
                                        std::to_string(tau_max_) + "]");
    }
    const double s = tau * kappa_;
    if (!(std::abs(s) < 1.0)) fail(ErrorKind::family_range, "bump tau*kappa must have magnitude < 1");
    try {
      return base_.transformed([s](const FiberMap& f) { return f.post_bumped(s); });
    } catch (const Error& e) {
      fail(ErrorKind::family_range, std::string("member leaves the class: ") + e.what());
    }
  }

  /// F_{t1} < F_{t2} from the closed form
  /// psi_{s2}(y) - psi_{s1}(y) = (s2 - s1) y (1 - y) with y = f(x) in [f(0), f(1)].
  bool certify_order(double t1, double t2) const {
    if (!(t1 < t2)) return false;
    double floor = 1.0;
    for (const auto& f : base_.maps()) {
      const double y0 = f.value(0.0);
      const double y1 = f.value(1.0);
      floor = std::min({floor, y0 * (1.0 - y0), y1 * (1.0 - y1)});
    }
    return (t2 - t1) * kappa_ * floor > 2.0 * kRoundingMargin;
  }

 private:
  MultistepSkewProduct base_;
  double kappa_;
  double tau_min_;
  double tau_max_;
};

inline MultistepSkewProduct family_member(const MonotoneFamily& fam, double tau) { return fam.member(tau); }

struct SweepPoint {
  double tau = 0.0;
  RegionEstimate estimate;
};

struct Gap {
  double tau_lo = 0.0;
  double tau_hi = 0.0;
  double lower_bound = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<Gap> gaps;
};

/// Region estimates along the grid. Every grid point reuses the same sample
/// stream. Certified measures accumulate by replay: Up boxes of F_s stay valid
/// for every F_t with s < t, Down boxes for every t < s, so the reported
/// certified_up is non-decreasing and certified_down non-increasing exactly.
inline SweepResult sweep(const MonotoneFamily& fam, std::span<const double> grid, int depth, std::uint64_t n,
                         std::uint64_t seed) {
  SweepResult out;
  if (grid.empty()) return out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < fam.tau_min() || grid[i] > fam.tau_max()) fail(ErrorKind::family_range, "grid leaves the tau range");
    if (i > 0) {
      if (!(grid[i] > grid[i - 1])) fail(ErrorKind::invalid_argument, "grid must be strictly increasing");
      if (!fam.certify_order(grid[i - 1], grid[i])) {
        fail(ErrorKind::family_range, "consecutive grid members are not certifiably ordered");
      }
    }
  }

  const auto& chain = fam.base().chain();
  std::vector<CertifiedRegions> regions;
  regions.reserve(grid.size());
  for (double tau : grid) {
    const WitnessSearch search(fam.member(tau), depth);
    CertifiedRegions r = certified_regions(search);
    SweepPoint pt{tau, estimate_from(search, r, n, seed)};
    out.points.push_back(pt);
    regions.push_back(std::move(r));
  }

  CylinderUnion up(fam.base().base());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    up.merge(regions[i].up);
    out.points[i].estimate.certified_up = std::max(up.measure(chain), i > 0 ? out.points[i - 1].estimate.certified_up : 0.0);
  }
  CylinderUnion down(fam.base().base());
  for (std::size_t i = grid.size(); i-- > 0;) {
    down.merge(regions[i].down);
    const double prev = i + 1 < grid.size() ? out.points[i + 1].estimate.certified_down : 0.0;
    out.points[i].estimate.certified_down = std::max(down.measure(chain), prev);
  }
  return out;
}

/// Consecutive grid pairs whose Monte Carlo Up fraction jumps by more than
/// eps plus both confidence radii; the reported bound is the jump minus the radii.
inline std::vector<Gap> detect_gaps(const SweepResult& sr, double eps) {
  double max_radius = 0.0;
  for (const auto& p : sr.points) max_radius = std::max(max_radius, p.estimate.radius);
  if (!(eps > 2.0 * max_radius)) {
    fail(ErrorKind::tolerance, "eps = " + std::to_string(eps) + " must exceed twice the confidence radius " +
                                   std::to_string(max_radius));
  }
  std::vector<Gap> gaps;
  for (std::size_t i = 0; i + 1 < sr.points.size(); ++i) {
    const auto& a = sr.points[i];
    const auto& b = sr.points[i + 1];
    const double jump = b.estimate.mc_up - a.estimate.mc_up;
    const double allowance = a.estimate.radius + b.estimate.radius;
    if (jump > eps + allowance) gaps.push_back({a.tau, b.tau, jump - allowance});
  }
  return gaps;
}

/// Grid lo, lo + step, ... up to hi (inclusive within step * 1e-9); values
/// within step * 1e-12 of zero are snapped to zero.
inline std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    fail(ErrorKind::invalid_argument, "grid needs lo <= hi and step > 0");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 100000) fail(ErrorKind::resource_limit, "grid longer than 100000 points");
  std::vector<double> g;
  g.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double t = lo + static_cast<double>(i) * step;
    if (std::abs(t) < step * 1e-12) t = 0.0;
    g.push_back(t);
  }
  return g;
}

}  // namespace skewdyn
