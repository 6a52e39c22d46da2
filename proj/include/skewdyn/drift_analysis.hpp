#pragma once

// Drifting graphs and drifting points.
//
// A graph drifts up when F(graph) > graph at every base point; every point
// strictly between such a graph and its image drifts up. Witness graphs are
// cylinder-step functions, so both conditions reduce to finitely many
// comparisons, each required to hold with margin kCertMargin.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cylinder_union.hpp"
#include "error.hpp"
#include "fiber_maps.hpp"
#include "skew_product.hpp"
#include "symbolic_base.hpp"

namespace skewdyn {

inline constexpr double kCertMargin = 1e-9;
inline constexpr int kWitnessLevels = 64;
inline constexpr int kRefinementSteps = 20;

enum class Direction { up, down };

inline std::string_view to_string(Direction d) { return d == Direction::up ? "up" : "down"; }

/// Function on the sequence space that is constant on cylinders fixing the
/// coordinates -L..R.
class StepGraph {
 public:
  StepGraph(TransitionSystem base, int left, int right, std::vector<double> values)
      : base_(std::move(base)), left_(left), right_(right), values_(std::move(values)) {
    if (left < 0 || right < 0) fail(ErrorKind::invalid_argument, "graph window must be nonnegative");
    words_ = std::make_shared<const WordTable>(base_, left + right + 1);
    if (values_.size() != words_->size()) fail(ErrorKind::invalid_argument, "one value per admissible word required");
    for (double v : values_) {
      if (!(v > 0.0 && v < 1.0)) fail(ErrorKind::invalid_argument, "graph values must lie in (0,1)");
    }
  }

  static StepGraph constant(const TransitionSystem& base, double c) {
    const auto n = static_cast<std::size_t>(base.alphabet_size());
    return StepGraph(base, 0, 0, std::vector<double>(n, c));
  }

  const TransitionSystem& base() const noexcept { return base_; }
  int left() const noexcept { return left_; }
  int right() const noexcept { return right_; }
  int window_size() const noexcept { return left_ + right_ + 1; }
  const WordTable& words() const noexcept { return *words_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double value_for(std::span<const Symbol> word) const {
    const std::int32_t idx = words_->find(word);
    if (idx < 0) fail(ErrorKind::invalid_argument, "inadmissible word for graph lookup");
    return values_[static_cast<std::size_t>(idx)];
  }

  /// gamma(sigma^shift w).
  double value_at(const SymbolWindow& w, int shift = 0) const {
    require_window(w, shift - left_, shift + right_);
    return value_for(w.slice(shift - left_, shift + right_));
  }

  /// Same function over the finer cylinders of window (l2, r2).
  StepGraph refined(int l2, int r2) const {
    if (l2 < left_ || r2 < right_) fail(ErrorKind::invalid_argument, "refinement cannot shrink the window");
    if (l2 == left_ && r2 == right_) return *this;
    const WordTable wide(base_, l2 + r2 + 1);
    std::vector<double> v;
    v.reserve(wide.size());
    const auto skip = static_cast<std::size_t>(l2 - left_);
    for (std::size_t i = 0; i < wide.size(); ++i) {
      v.push_back(values_[static_cast<std::size_t>(words_->find(wide.word(i).subspan(skip, window_size())))]);
    }
    return StepGraph(base_, l2, r2, std::move(v));
  }

  /// Same function on the smallest window obtained by dropping outer
  /// coordinates it does not depend on.
  StepGraph simplified() const {
    StepGraph g = *this;
    bool changed = true;
    while (changed) {
      changed = false;
      for (bool drop_left : {true, false}) {
        if ((drop_left ? g.left_ : g.right_) == 0) continue;
        if (auto coarse = g.drop_coordinate(drop_left)) {
          g = std::move(*coarse);
          changed = true;
        }
      }
    }
    return g;
  }

 private:
  std::optional<StepGraph> drop_coordinate(bool drop_left) const {
    const int l2 = drop_left ? left_ - 1 : left_;
    const int r2 = drop_left ? right_ : right_ - 1;
    const WordTable narrow(base_, l2 + r2 + 1);
    std::vector<double> v(narrow.size(), std::numeric_limits<double>::quiet_NaN());
    const std::size_t skip = drop_left ? 1 : 0;
    const auto len = static_cast<std::size_t>(l2 + r2 + 1);
    for (std::size_t i = 0; i < words_->size(); ++i) {
      const auto j = static_cast<std::size_t>(narrow.find(words_->word(i).subspan(skip, len)));
      if (std::isnan(v[j])) {
        v[j] = values_[i];
      } else if (v[j] != values_[i]) {
        return std::nullopt;
      }
    }
    return StepGraph(base_, l2, r2, std::move(v));
  }

  TransitionSystem base_;
  int left_;
  int right_;
  std::shared_ptr<const WordTable> words_;
  std::vector<double> values_;
};

/// Window of the image of a graph with window (L, R) under a product with
/// dependence window (l, r).
inline std::pair<int, int> image_window(int graph_left, int graph_right, int map_left, int map_right) {
  return {std::max(graph_left, map_left) + 1, std::max(std::max(graph_right, map_right) - 1, 0)};
}

/// F(graph): eta(w) = f_{sigma^{-1} w}(gamma(sigma^{-1} w)).
inline StepGraph image_graph(const MultistepSkewProduct& f, const StepGraph& g) {
  if (!(f.base() == g.base())) fail(ErrorKind::incompatible, "graph and product over different bases");
  const auto [l2, r2] = image_window(g.left(), g.right(), f.left(), f.right());
  if (l2 + r2 + 1 > kMaxWindow) {
    fail(ErrorKind::resource_limit, "image graph window " + std::to_string(l2 + r2 + 1) + " exceeds " +
                                        std::to_string(kMaxWindow));
  }
  const WordTable table(f.base(), l2 + r2 + 1);
  // Word positions: index i sits at position i + l2.
  const auto map_start = static_cast<std::size_t>(l2 - f.left() - 1);
  const auto graph_start = static_cast<std::size_t>(l2 - g.left() - 1);
  const auto map_len = static_cast<std::size_t>(f.window_size());
  const auto graph_len = static_cast<std::size_t>(g.window_size());
  std::vector<double> values;
  values.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto w = table.word(i);
    const auto mi = static_cast<std::size_t>(f.word_index(w.subspan(map_start, map_len)));
    values.push_back(f.map(mi).value(g.value_for(w.subspan(graph_start, graph_len))));
  }
  return StepGraph(f.base(), l2, r2, std::move(values));
}

enum class DriftKind { up, down, inconclusive };

struct DriftVerdict {
  DriftKind kind = DriftKind::inconclusive;
  double margin = 0.0;  // certified gap for up/down; best signed gap otherwise
};

/// Compares a graph with its image on a common window using outward-rounded
/// image values.
inline DriftVerdict certify_drift(const MultistepSkewProduct& f, const StepGraph& g) {
  const StepGraph image = image_graph(f, g);
  const int l = std::max(g.left(), image.left());
  const int r = std::max(g.right(), image.right());
  const StepGraph a = g.refined(l, r);
  const StepGraph b = image.refined(l, r);
  double up = std::numeric_limits<double>::infinity();
  double down = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    up = std::min(up, b.values()[i] - kRoundingMargin - a.values()[i]);
    down = std::min(down, a.values()[i] - b.values()[i] - kRoundingMargin);
  }
  if (up >= kCertMargin) return {DriftKind::up, up};
  if (down >= kCertMargin) return {DriftKind::down, down};
  return {DriftKind::inconclusive, std::max(up, down)};
}

/// Candidate drifting graph: the k-th image of the constant graph at `level`.
struct Witness {
  Direction direction = Direction::up;
  double level = 0.0;
  int iterations = 0;
  double strip_margin = 0.0;
};

struct DriftCertificate {
  StepGraph graph;
  Direction direction = Direction::up;
  double margin = 0.0;
  std::uint64_t fingerprint = 0;
};

enum class Verdict { up, down, unknown };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::up: return "Up";
    case Verdict::down: return "Down";
    case Verdict::unknown: return "Unknown";
  }
  return "?";
}

struct Classification {
  Verdict verdict = Verdict::unknown;
  std::optional<Witness> witness;  // present exactly for Up/Down
  int depth_searched = 0;
};

/// F^k(constant graph), simplified after every step.
inline StepGraph witness_graph(const MultistepSkewProduct& f, double level, int iterations) {
  StepGraph g = StepGraph::constant(f.base(), level);
  for (int k = 0; k < iterations; ++k) g = image_graph(f, g).simplified();
  return g;
}

/// Builds the witness graph and certifies its drift from scratch.
inline DriftCertificate make_certificate(const MultistepSkewProduct& f, const Witness& w) {
  StepGraph g = witness_graph(f, w.level, w.iterations);
  const DriftVerdict v = certify_drift(f, g);
  const DriftKind expected = w.direction == Direction::up ? DriftKind::up : DriftKind::down;
  if (v.kind != expected) throw std::logic_error("witness graph failed drift certification");
  return {std::move(g), w.direction, v.margin, f.fingerprint()};
}

/// Strip test at p: gamma(w) < x < eta(w) for up (reversed for down), eta = F(graph),
/// each inequality with margin kCertMargin. Returns the smaller slack or nullopt.
inline std::optional<double> strip_margin(const MultistepSkewProduct& f, const StepGraph& g, Direction dir,
                                          const LabeledPoint& p) {
  const double lower_graph = g.value_at(p.window, 0);
  require_window(p.window, -1 - f.left(), -1 + f.right());
  const double image = f.map_at(p.window, -1).value(g.value_at(p.window, -1));
  const double a = dir == Direction::up ? p.x - lower_graph : lower_graph - p.x;
  const double b = dir == Direction::up ? image - p.x : p.x - image;
  const double m = std::min(a, b);
  if (m > kCertMargin) return m;
  return std::nullopt;
}

/// Re-checks a certificate against a (possibly different) product at p.
inline bool replay_certificate(const MultistepSkewProduct& f, const DriftCertificate& cert, const LabeledPoint& p) {
  const DriftVerdict v = certify_drift(f, cert.graph);
  const DriftKind expected = cert.direction == Direction::up ? DriftKind::up : DriftKind::down;
  if (v.kind != expected) return false;
  return strip_margin(f, cert.graph, cert.direction, p).has_value();
}

/// Largest k such that the unsimplified window of F^{k+1}(constant) fits the cap.
inline int iteration_cap(const MultistepSkewProduct& f) {
  int l = 0;
  int r = 0;
  int k = -1;
  for (;;) {
    const auto [l2, r2] = image_window(l, r, f.left(), f.right());
    if (l2 + r2 + 1 > kMaxWindow) return k;
    ++k;
    l = l2;
    r = r2;
  }
}

/// Witness search of depth M: candidate graphs F^k(constant c), 0 <= k < M,
/// over a grid of 64 levels plus binary-search levels near the point.
///
/// Any Up/Down answer is backed by a global drift check of the constant graph
/// (drift of every image then follows from monotonicity of the fiber maps) and
/// a forward evaluation of the strip inequalities at the point.
class WitnessSearch {
 public:
  WitnessSearch(MultistepSkewProduct product, int depth) : f_(std::move(product)), depth_(depth) {
    if (depth < 0) fail(ErrorKind::invalid_argument, "depth must be >= 0");
    max_k_ = std::min(depth - 1, iteration_cap(f_));
    const std::size_t nw = f_.maps().size();
    levels_.resize(kWitnessLevels);
    level_images_.resize(kWitnessLevels * nw);
    for (int i = 0; i < kWitnessLevels; ++i) {
      const double c = (i + 0.5) / kWitnessLevels;
      levels_[static_cast<std::size_t>(i)] = c;
      for (std::size_t w = 0; w < nw; ++w) level_images_[static_cast<std::size_t>(i) * nw + w] = f_.map(w).value(c);
      if (drifts(c, Direction::up)) up_levels_.push_back(i);
      if (drifts(c, Direction::down)) down_levels_.push_back(i);
    }
  }

  const MultistepSkewProduct& product() const noexcept { return f_; }
  int depth() const noexcept { return depth_; }
  /// Largest iteration count k used; -1 when the witness family is empty.
  int max_iterations() const noexcept { return max_k_; }
  const std::vector<double>& levels() const noexcept { return levels_; }

  /// Window a point needs: [-(M + l + 1), M + r].
  std::pair<int, int> required_window() const noexcept { return {-(depth_ + f_.left() + 1), depth_ + f_.right()}; }

  /// Constant graph at c drifts in `dir` with margin kCertMargin.
  bool drifts(double c, Direction dir) const {
    for (const auto& m : f_.maps()) {
      const double y = m.value(c);
      const double gap = dir == Direction::up ? y - kRoundingMargin - c : c - y - kRoundingMargin;
      if (!(gap >= kCertMargin)) return false;
    }
    return true;
  }

  std::optional<Witness> find(const LabeledPoint& p, Direction dir) const {
    const auto [lo, hi] = required_window();
    require_window(p.window, lo, hi);
    require_unit(p.x, "fiber coordinate");
    if (max_k_ < 0 || p.x <= 0.0 || p.x >= 1.0) return std::nullopt;

    PointFrame frame = prepare(p);
    for (int k = 0; k <= frame.valid_depth; ++k) {
      if (auto w = grid_at(frame, k, dir)) return w;
    }
    for (int k = 0; k <= frame.valid_depth; ++k) {
      if (auto w = refine_at(frame, k, dir)) return w;
    }
    return std::nullopt;
  }

  Classification classify(const LabeledPoint& p) const {
    auto up = find(p, Direction::up);
    auto down = find(p, Direction::down);
    if (up && down) {
      throw std::logic_error("point certified both up and down at x = " + std::to_string(p.x));
    }
    if (up) return {Verdict::up, up, depth_};
    if (down) return {Verdict::down, down, depth_};
    return {Verdict::unknown, std::nullopt, depth_};
  }

 private:
  struct PointFrame {
    double x = 0.0;
    // maps[j] is the word index of f_{sigma^{-j} w}, j = 1..max_k+1.
    std::array<std::size_t, kMaxWindow + 2> maps{};
    // pulled[k] = (f_{sigma^{-1}} o ... o f_{sigma^{-k}})^{-1}(x).
    std::array<double, kMaxWindow + 2> pulled{};
    int valid_depth = -1;
  };

  PointFrame prepare(const LabeledPoint& p) const {
    PointFrame fr;
    fr.x = p.x;
    for (int j = 1; j <= max_k_ + 1; ++j) {
      const std::int32_t idx = f_.word_index(p.window.slice(-j - f_.left(), -j + f_.right()));
      if (idx < 0) fail(ErrorKind::invalid_argument, "point window is inadmissible");
      fr.maps[static_cast<std::size_t>(j)] = static_cast<std::size_t>(idx);
    }
    double y = p.x;
    fr.pulled[0] = y;
    fr.valid_depth = 0;
    for (int k = 1; k <= max_k_; ++k) {
      const FiberMap& g = f_.map(fr.maps[static_cast<std::size_t>(k)]);
      // Outside the image of g the point lies outside every deeper strip.
      if (y <= g.value(0.0) || y >= g.value(1.0)) break;
      y = g.inverse_unchecked(y);
      fr.pulled[static_cast<std::size_t>(k)] = y;
      fr.valid_depth = k;
    }
    return fr;
  }

  // Slack of the two strip inequalities for F^k(constant c) at the point,
  // evaluated forward: first = side of the graph itself, second = side of its image.
  std::pair<double, double> strip_slack(const PointFrame& fr, double c, int k, Direction dir) const {
    double graph = c;
    double image = f_.map(fr.maps[static_cast<std::size_t>(k + 1)]).value(c);
    for (int j = k; j >= 1; --j) {
      const FiberMap& m = f_.map(fr.maps[static_cast<std::size_t>(j)]);
      graph = m.value(graph);
      image = m.value(image);
    }
    if (dir == Direction::up) return {fr.x - graph, image - fr.x};
    return {graph - fr.x, fr.x - image};
  }

  std::optional<Witness> accept(const PointFrame& fr, double c, int k, Direction dir, bool* graph_side_failed) const {
    const auto [a, b] = strip_slack(fr, c, k, dir);
    if (a > kCertMargin && b > kCertMargin) return Witness{dir, c, k, std::min(a, b)};
    if (graph_side_failed) *graph_side_failed = !(a > kCertMargin);
    return std::nullopt;
  }

  std::optional<Witness> grid_at(const PointFrame& fr, int k, Direction dir) const {
    const double y = fr.pulled[static_cast<std::size_t>(k)];
    const std::size_t next = fr.maps[static_cast<std::size_t>(k + 1)];
    const std::size_t nw = f_.maps().size();
    auto image_of = [&](int level) { return level_images_[static_cast<std::size_t>(level) * nw + next]; };
    if (dir == Direction::up) {
      // Best candidate is the highest drifting level below y; lower ones only
      // shrink the image side.
      auto it = std::lower_bound(up_levels_.begin(), up_levels_.end(), y,
                                 [&](int lvl, double v) { return levels_[static_cast<std::size_t>(lvl)] < v; });
      while (it != up_levels_.begin()) {
        --it;
        if (!(image_of(*it) > y)) break;
        if (auto w = accept(fr, levels_[static_cast<std::size_t>(*it)], k, dir, nullptr)) return w;
      }
    } else {
      auto it = std::upper_bound(down_levels_.begin(), down_levels_.end(), y,
                                 [&](double v, int lvl) { return v < levels_[static_cast<std::size_t>(lvl)]; });
      for (; it != down_levels_.end(); ++it) {
        if (!(image_of(*it) < y)) break;
        if (auto w = accept(fr, levels_[static_cast<std::size_t>(*it)], k, dir, nullptr)) return w;
      }
    }
    return std::nullopt;
  }

  // Binary search for a drifting constant level whose depth-k strip contains
  // the pulled-back point.
  std::optional<Witness> refine_at(const PointFrame& fr, int k, Direction dir) const {
    const double y = fr.pulled[static_cast<std::size_t>(k)];
    const FiberMap& g = f_.map(fr.maps[static_cast<std::size_t>(k + 1)]);
    double lo = 0.0;
    double hi = 0.0;
    if (dir == Direction::up) {
      lo = y <= g.value(0.0) ? 0.0 : g.inverse_unchecked(std::min(y, g.value(1.0)));
      hi = y;
    } else {
      lo = y;
      hi = y >= g.value(1.0) ? 1.0 : g.inverse_unchecked(std::max(y, g.value(0.0)));
    }
    for (int step = 0; step < kRefinementSteps && hi > lo; ++step) {
      const double c = 0.5 * (lo + hi);
      // Moving away from the point's side favours drift: below for up, above for down.
      const bool toward_low = dir == Direction::up;
      if (!drifts(c, dir)) {
        (toward_low ? hi : lo) = c;
        continue;
      }
      bool graph_side_failed = false;
      if (auto w = accept(fr, c, k, dir, &graph_side_failed)) return w;
      // Graph side too close to the point: move the level away from it.
      if (graph_side_failed == toward_low) {
        hi = c;
      } else {
        lo = c;
      }
    }
    return std::nullopt;
  }

  MultistepSkewProduct f_;
  int depth_;
  int max_k_ = -1;
  std::vector<double> levels_;
  std::vector<double> level_images_;
  std::vector<int> up_levels_;
  std::vector<int> down_levels_;
};

/// Certified classification of p at depth M. Sound, not complete.
inline Classification classify_point(const MultistepSkewProduct& f, const LabeledPoint& p, int depth) {
  return WitnessSearch(f, depth).classify(p);
}

struct CertifiedRegions {
  CylinderUnion up;
  CylinderUnion down;
};

/// Boxes (cylinder, (gamma + delta, eta - delta)) for every drifting witness
/// F^k(constant c) of the grid family; the unions under-approximate Up(F)
/// and Down(F).
inline CertifiedRegions certified_regions(const WitnessSearch& search) {
  const MultistepSkewProduct& f = search.product();
  CertifiedRegions out{CylinderUnion(f.base()), CylinderUnion(f.base())};
  if (search.max_iterations() < 0) return out;
  for (double c : search.levels()) {
    for (Direction dir : {Direction::up, Direction::down}) {
      if (!search.drifts(c, dir)) continue;
      CylinderUnion& target = dir == Direction::up ? out.up : out.down;
      StepGraph g = StepGraph::constant(f.base(), c);
      for (int k = 0; k <= search.max_iterations(); ++k) {
        StepGraph image = image_graph(f, g).simplified();
        const int l = std::max(g.left(), image.left());
        const int r = std::max(g.right(), image.right());
        const StepGraph a = g.refined(l, r);
        const StepGraph b = image.refined(l, r);
        auto& bucket = target.bucket(l, r);
        for (std::size_t i = 0; i < a.values().size(); ++i) {
          const double lower = dir == Direction::up ? a.values()[i] : b.values()[i];
          const double upper = dir == Direction::up ? b.values()[i] : a.values()[i];
          if (upper - lower > 2.0 * kCertMargin) bucket[i].push_back({lower + kCertMargin, upper - kCertMargin});
        }
        g = std::move(image);
      }
    }
  }
  out.up.normalize();
  out.down.normalize();
  if (!out.up.empty() && !out.down.empty() && out.up.overlap(f.chain(), out.down) > 0.0) {
    throw std::logic_error("certified up and down regions overlap");
  }
  return out;
}

inline CertifiedRegions certified_regions(const MultistepSkewProduct& f, int depth) {
  return certified_regions(WitnessSearch(f, depth));
}

/// Fiber maps met along one period of the periodic point, in application order.
inline std::vector<FiberMap> periodic_fiber_map(const MultistepSkewProduct& f, const PeriodicWord& w) {
  if (!f.base().cyclically_admissible(w.symbols)) fail(ErrorKind::invalid_argument, "word is not cyclically admissible");
  std::vector<FiberMap> maps;
  const int n = static_cast<int>(w.symbols.size());
  maps.reserve(static_cast<std::size_t>(n));
  const SymbolWindow span = w.window(-f.left(), n - 1 + f.right());
  for (int j = 0; j < n; ++j) maps.push_back(f.map_at(span, j));
  return maps;
}

struct PeriodicCheck {
  bool consistent = true;
  Verdict verdict = Verdict::unknown;
  double x = 0.0;
  double image = 0.0;  // return map applied to x
  std::vector<Symbol> word;
  std::optional<Witness> witness;
};

/// A point of a periodic fiber that drifts up must move up under the return
/// map, and symmetrically for down.
inline PeriodicCheck periodic_consistency(const WitnessSearch& search, const PeriodicWord& w, double x) {
  const auto maps = periodic_fiber_map(search.product(), w);
  const auto [lo, hi] = search.required_window();
  const LabeledPoint p{w.window(lo, hi), x};
  const Classification c = search.classify(p);
  const double image = compose_along_word(maps, x);
  const bool violation = (c.verdict == Verdict::up && image <= x) || (c.verdict == Verdict::down && image >= x);
  return {!violation, c.verdict, x, image, w.symbols, c.witness};
}

}  // namespace skewdyn
