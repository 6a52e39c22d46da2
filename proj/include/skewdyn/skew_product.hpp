#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "fiber_maps.hpp"
#include "symbolic_base.hpp"

namespace skewdyn {

/// Skew product F(w, x) = (sigma w, f_w(x)) whose fiber map depends on the
/// coordinates w_{-l} .. w_r only.
class MultistepSkewProduct {
 public:
  /// `maps[i]` is the fiber map of the i-th admissible word of length l+r+1
  /// in WordTable order.
  MultistepSkewProduct(MarkovChain chain, int left, int right, std::vector<FiberMap> maps)
      : chain_(std::move(chain)), left_(left), right_(right), maps_(std::move(maps)) {
    if (left < 0 || right < 0) fail(ErrorKind::invalid_argument, "dependence window must be nonnegative");
    if (left + right + 1 > kMaxWindow) {
      fail(ErrorKind::resource_limit, "dependence window size " + std::to_string(left + right + 1) + " exceeds " +
                                          std::to_string(kMaxWindow));
    }
    words_ = std::make_shared<const WordTable>(chain_.base(), left + right + 1);
    if (maps_.size() != words_->size()) fail(ErrorKind::invalid_argument, "one fiber map per admissible word required");
    for (std::size_t i = 0; i < maps_.size(); ++i) {
      if (auto check = validate_class(maps_[i]); !check) {
        fail(ErrorKind::invalid_argument, "fiber map " + std::to_string(i) + " violates the class: " + check.detail);
      }
    }
  }

  /// Assignment given as explicit (word, map) pairs; every admissible word exactly once.
  static MultistepSkewProduct from_assignment(MarkovChain chain, int left, int right,
                                              const std::vector<std::pair<std::vector<Symbol>, FiberMap>>& assignment) {
    const WordTable table(chain.base(), left + right + 1);
    std::vector<FiberMap> maps(table.size());
    std::vector<char> seen(table.size(), 0);
    for (const auto& [word, map] : assignment) {
      const std::int32_t idx = table.find(word);
      if (idx < 0) fail(ErrorKind::invalid_argument, "assignment word is inadmissible or has the wrong length");
      if (seen[static_cast<std::size_t>(idx)]) fail(ErrorKind::invalid_argument, "assignment word listed twice");
      seen[static_cast<std::size_t>(idx)] = 1;
      maps[static_cast<std::size_t>(idx)] = map;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      fail(ErrorKind::invalid_argument, "assignment misses an admissible word");
    }
    return MultistepSkewProduct(std::move(chain), left, right, std::move(maps));
  }

  /// Same fiber map over every base point.
  static MultistepSkewProduct constant(MarkovChain chain, const FiberMap& f) {
    const auto n = static_cast<std::size_t>(chain.base().alphabet_size());
    return MultistepSkewProduct(std::move(chain), 0, 0, std::vector<FiberMap>(n, f));
  }

  /// One-step product: f_w = maps[w_0].
  static MultistepSkewProduct per_symbol(MarkovChain chain, std::vector<FiberMap> maps) {
    return MultistepSkewProduct(std::move(chain), 0, 0, std::move(maps));
  }

  const MarkovChain& chain() const noexcept { return chain_; }
  const TransitionSystem& base() const noexcept { return chain_.base(); }
  int left() const noexcept { return left_; }
  int right() const noexcept { return right_; }
  int window_size() const noexcept { return left_ + right_ + 1; }
  const WordTable& words() const noexcept { return *words_; }
  const std::vector<FiberMap>& maps() const noexcept { return maps_; }
  const FiberMap& map(std::size_t word_index) const { return maps_[word_index]; }

  std::int32_t word_index(std::span<const Symbol> word) const { return words_->find(word); }

  const FiberMap& map_for(std::span<const Symbol> word) const {
    const std::int32_t idx = words_->find(word);
    if (idx < 0) fail(ErrorKind::invalid_argument, "inadmissible defining word");
    return maps_[static_cast<std::size_t>(idx)];
  }

  /// Fiber map at sigma^shift(w), read from the window.
  const FiberMap& map_at(const SymbolWindow& w, int shift) const {
    return map_for(w.slice(shift - left_, shift + right_));
  }

  /// Same maps, dependence window widened to (l2, r2) by replication.
  MultistepSkewProduct padded(int l2, int r2) const {
    if (l2 < left_ || r2 < right_) fail(ErrorKind::invalid_argument, "padding cannot shrink the window");
    if (l2 == left_ && r2 == right_) return *this;
    const WordTable wide(base(), l2 + r2 + 1);
    std::vector<FiberMap> maps;
    maps.reserve(wide.size());
    const auto skip = static_cast<std::size_t>(l2 - left_);
    for (std::size_t i = 0; i < wide.size(); ++i) {
      maps.push_back(maps_[static_cast<std::size_t>(words_->find(wide.word(i).subspan(skip, window_size())))]);
    }
    return MultistepSkewProduct(chain_, l2, r2, std::move(maps));
  }

  MultistepSkewProduct transformed(const std::function<FiberMap(const FiberMap&)>& op) const {
    std::vector<FiberMap> maps;
    maps.reserve(maps_.size());
    for (const auto& f : maps_) maps.push_back(op(f));
    return MultistepSkewProduct(chain_, left_, right_, std::move(maps));
  }

  /// FNV-1a digest of the base, window and every map parameter.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& row : base().matrix()) {
      for (int v : row) mix(static_cast<std::uint64_t>(v));
    }
    mix(static_cast<std::uint64_t>(left_));
    mix(static_cast<std::uint64_t>(right_));
    for (const auto& f : maps_) {
      mix(static_cast<std::uint64_t>(f.form()));
      for (double p : f.raw_parameters()) mix(std::bit_cast<std::uint64_t>(p));
      mix(std::bit_cast<std::uint64_t>(f.bump()));
    }
    return h;
  }

 private:
  MarkovChain chain_;
  int left_;
  int right_;
  std::shared_ptr<const WordTable> words_;
  std::vector<FiberMap> maps_;
};

struct LabeledPoint {
  SymbolWindow window;
  double x = 0.0;
};

inline void require_window(const SymbolWindow& w, int lo, int hi) {
  if (!w.covers(lo, hi)) {
    fail(ErrorKind::window_too_short, "window [" + std::to_string(w.left()) + "," + std::to_string(w.right()) +
                                          "] must cover [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
}

/// F^n(p). The window is re-offset by -n; it must cover [-l, r+n-1].
inline LabeledPoint iterate(const MultistepSkewProduct& f, const LabeledPoint& p, int n) {
  if (n < 1) fail(ErrorKind::invalid_argument, "iteration count must be >= 1");
  require_unit(p.x, "fiber coordinate");
  require_window(p.window, -f.left(), f.right() + n - 1);
  double x = p.x;
  for (int k = 0; k < n; ++k) x = f.map_at(p.window, k).value(x);
  return {SymbolWindow(p.window.offset() - n, p.window.symbols()), x};
}

enum class Order { less, greater, incomparable };

inline std::string_view to_string(Order o) {
  switch (o) {
    case Order::less: return "less";
    case Order::greater: return "greater";
    case Order::incomparable: return "incomparable";
  }
  return "?";
}

namespace detail {

inline constexpr int kOrderPartition = 1 << 10;
inline constexpr int kOrderMaxRefinement = 12;

// Certifies g - f > 0 on [a, b]: first by comparing outward-rounded interval
// images, then by a mean-value bound from derivative enclosures, then by
// bisection.
inline bool certify_below_on(const FiberMap& f, const FiberMap& g, double a, double b, int depth) {
  if (f.value(b) + kRoundingMargin < g.value(a) - kRoundingMargin) return true;
  const double mid = 0.5 * (a + b);
  const double h_mid = g.value(mid) - f.value(mid) - 2.0 * kRoundingMargin;
  if (h_mid <= 0.0) return false;
  const RealInterval df = f.slope_range(a, b);
  const RealInterval dg = g.slope_range(a, b);
  const double lipschitz = std::max(std::abs(dg.hi - df.lo), std::abs(dg.lo - df.hi));
  if (h_mid - 0.5 * (b - a) * lipschitz > 0.0) return true;
  if (depth >= kOrderMaxRefinement) return false;
  return certify_below_on(f, g, a, mid, depth + 1) && certify_below_on(f, g, mid, b, depth + 1);
}

}  // namespace detail

/// Certified f(x) < g(x) for every x in [0,1].
inline bool certify_below(const FiberMap& f, const FiberMap& g) {
  const double step = 1.0 / detail::kOrderPartition;
  for (int i = 0; i < detail::kOrderPartition; ++i) {
    const double a = i * step;
    const double b = (i + 1 == detail::kOrderPartition) ? 1.0 : (i + 1) * step;
    if (!detail::certify_below_on(f, g, a, b, 0)) return false;
  }
  return true;
}

/// Three-way certified comparison in the partial order; "incomparable"
/// includes pairs too close to certify.
inline Order compare_order(const MultistepSkewProduct& f, const MultistepSkewProduct& g) {
  if (!(f.base() == g.base()) || f.left() != g.left() || f.right() != g.right()) {
    fail(ErrorKind::incompatible, "products must share base and dependence window");
  }
  bool below = true;
  bool above = true;
  for (std::size_t i = 0; i < f.maps().size() && (below || above); ++i) {
    if (below) below = certify_below(f.map(i), g.map(i));
    if (above) above = certify_below(g.map(i), f.map(i));
  }
  if (below) return Order::less;
  if (above) return Order::greater;
  return Order::incomparable;
}

inline constexpr int kDistanceGrid = 1 << 10;

/// Grid approximation (a lower bound) of the C1 distance between two maps and
/// their inverses; inverses are compared on the intersection of the images.
inline double map_distance(const FiberMap& f, const FiberMap& g) {
  double d = 0.0;
  for (int i = 0; i <= kDistanceGrid; ++i) {
    const double x = static_cast<double>(i) / kDistanceGrid;
    d = std::max({d, std::abs(f.value(x) - g.value(x)), std::abs(f.slope(x) - g.slope(x))});
  }
  const double lo = std::max(f.value(0.0), g.value(0.0));
  const double hi = std::min(f.value(1.0), g.value(1.0));
  if (lo <= hi) {
    for (int i = 0; i <= kDistanceGrid; ++i) {
      const double y = lo + (hi - lo) * static_cast<double>(i) / kDistanceGrid;
      const double xf = f.inverse_unchecked(y);
      const double xg = g.inverse_unchecked(y);
      d = std::max({d, std::abs(xf - xg), std::abs(1.0 / f.slope(xf) - 1.0 / g.slope(xg))});
    }
  }
  return d;
}

/// max over defining words of map_distance, after padding both products to a
/// common dependence window.
inline double distance(const MultistepSkewProduct& f, const MultistepSkewProduct& g) {
  if (!(f.base() == g.base())) fail(ErrorKind::incompatible, "products must share the base");
  const int l = std::max(f.left(), g.left());
  const int r = std::max(f.right(), g.right());
  const MultistepSkewProduct fp = f.padded(l, r);
  const MultistepSkewProduct gp = g.padded(l, r);
  double d = 0.0;
  for (std::size_t i = 0; i < fp.maps().size(); ++i) {
    if (fp.map(i) == gp.map(i)) continue;
    d = std::max(d, map_distance(fp.map(i), gp.map(i)));
  }
  return d;
}

/// Continuously parameterized product: the designated parameter of the
/// template equals a_s(w) = a0(s) + sum_{n != 0} 2^{-|n|} rho(s, w_n), s = w_0.
struct ContinuousProductSpec {
  MarkovChain chain;
  FiberMap templ;
  int designated = 0;
  std::vector<double> base_value;  // a0(s)
  RealMatrix coefficients;         // rho(s, t)

  std::pair<double, double> coefficient_range(Symbol s) const {
    const auto& row = coefficients[static_cast<std::size_t>(s)];
    return {*std::min_element(row.begin(), row.end()), *std::max_element(row.begin(), row.end())};
  }
};

/// Checks shapes and class membership over the worst-case parameter interval
/// [a0 + 2 min rho, a0 + 2 max rho]; every class constraint is monotone in a
/// single parameter, so the endpoints suffice.
inline void validate_spec(const ContinuousProductSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.chain.base().alphabet_size());
  if (spec.base_value.size() != n) fail(ErrorKind::invalid_argument, "one base value per symbol required");
  if (spec.coefficients.size() != n) fail(ErrorKind::invalid_argument, "coefficient table must be N x N");
  for (const auto& row : spec.coefficients) {
    if (row.size() != n) fail(ErrorKind::invalid_argument, "coefficient table must be N x N");
    for (double v : row) {
      if (!std::isfinite(v)) fail(ErrorKind::invalid_argument, "non-finite coefficient");
    }
  }
  if (spec.designated < 0 || spec.designated >= parameter_count(spec.templ.form())) {
    fail(ErrorKind::invalid_argument, "designated parameter index out of range");
  }
  for (std::size_t s = 0; s < n; ++s) {
    const auto [lo, hi] = spec.coefficient_range(static_cast<Symbol>(s));
    for (double a : {spec.base_value[s] + 2.0 * lo, spec.base_value[s] + 2.0 * hi}) {
      if (auto check = validate_class(spec.templ.with_parameter(spec.designated, a)); !check) {
        fail(ErrorKind::invalid_argument, "symbol " + std::to_string(s + 1) + ": parameter " + std::to_string(a) +
                                              " leaves the class (" + check.detail + ")");
      }
    }
  }
}

/// Truncation to coordinates [-m, m]; the tail sum is replaced by the midpoint
/// of its range, 2^{-m} (min rho + max rho).
inline MultistepSkewProduct multistep_approximation(const ContinuousProductSpec& spec, int m) {
  if (m < 0) fail(ErrorKind::invalid_argument, "truncation depth must be >= 0");
  if (2 * m + 1 > kMaxWindow) {
    fail(ErrorKind::resource_limit, "window 2m+1 = " + std::to_string(2 * m + 1) + " exceeds " +
                                        std::to_string(kMaxWindow));
  }
  validate_spec(spec);
  const WordTable table(spec.chain.base(), 2 * m + 1);
  std::vector<FiberMap> maps;
  maps.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto w = table.word(i);
    const auto s = static_cast<std::size_t>(w[static_cast<std::size_t>(m)]);
    const auto [lo, hi] = spec.coefficient_range(static_cast<Symbol>(s));
    double a = spec.base_value[s] + std::ldexp(lo + hi, -m);
    for (int n = 1; n <= m; ++n) {
      a += std::ldexp(spec.coefficients[s][static_cast<std::size_t>(w[static_cast<std::size_t>(m + n)])], -n);
      a += std::ldexp(spec.coefficients[s][static_cast<std::size_t>(w[static_cast<std::size_t>(m - n)])], -n);
    }
    const FiberMap f = spec.templ.with_parameter(spec.designated, a);
    if (auto check = validate_class(f); !check) {
      fail(ErrorKind::invalid_approximation, "truncated map leaves the class: " + check.detail);
    }
    maps.push_back(f);
  }
  return MultistepSkewProduct(spec.chain, m, m, std::move(maps));
}

/// Sup of the designated-parameter change between the m and m+1 truncations:
/// 2^{-(m+1)} max_s (max rho - min rho).
inline double truncation_parameter_bound(const ContinuousProductSpec& spec, int m) {
  double spread = 0.0;
  for (std::size_t s = 0; s < spec.coefficients.size(); ++s) {
    const auto [lo, hi] = spec.coefficient_range(static_cast<Symbol>(s));
    spread = std::max(spread, hi - lo);
  }
  return std::ldexp(spread, -(m + 1));
}

}  // namespace skewdyn
