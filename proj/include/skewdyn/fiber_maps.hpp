#pragma once

// Closed-form orientation-preserving diffeomorphisms of [0,1] into its
// interior, with an optional post-composed bump psi_s(y) = y + s*y*(1-y).

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "error.hpp"

namespace skewdyn {

/// Outward rounding margin for enclosures.
inline constexpr double kRoundingMargin = 1e-13;
inline constexpr double kInverseTolerance = 1e-12;
inline constexpr int kInverseMaxIterations = 60;

struct RealInterval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  friend bool operator==(const RealInterval&, const RealInterval&) = default;
};

inline RealInterval make_unit_subinterval(double lo, double hi) {
  if (!(lo <= hi) || lo < 0.0 || hi > 1.0) fail(ErrorKind::invalid_argument, "interval must satisfy 0 <= lo <= hi <= 1");
  return {lo, hi};
}

enum class MapForm { affine, bumped_affine, plateau };

inline std::string_view to_string(MapForm form) {
  switch (form) {
    case MapForm::affine: return "affine";
    case MapForm::bumped_affine: return "bumped_affine";
    case MapForm::plateau: return "plateau";
  }
  return "?";
}

inline int parameter_count(MapForm form) { return form == MapForm::affine ? 2 : 3; }

enum class ClassViolation { none, non_finite, not_increasing, not_inside, bad_shape };

struct ClassCheck {
  bool ok = true;
  ClassViolation reason = ClassViolation::none;
  std::string detail;

  explicit operator bool() const noexcept { return ok; }
};

class FiberMap {
 public:
  FiberMap() = default;

  static FiberMap affine(double a, double b) { return FiberMap(MapForm::affine, {a, b, 0.0}); }
  static FiberMap bumped_affine(double a, double b, double c) { return FiberMap(MapForm::bumped_affine, {a, b, c}); }
  static FiberMap plateau(double c1, double j_lo, double j_hi) { return FiberMap(MapForm::plateau, {c1, j_lo, j_hi}); }

  /// Builds a map of the given form; unused trailing parameters must be omitted.
  static FiberMap from_parameters(MapForm form, std::span<const double> params, double bump = 0.0) {
    if (static_cast<int>(params.size()) != parameter_count(form)) {
      fail(ErrorKind::invalid_argument, std::string(to_string(form)) + " takes " +
                                            std::to_string(parameter_count(form)) + " parameters");
    }
    FiberMap f(form, {params[0], params[1], params.size() > 2 ? params[2] : 0.0});
    f.bump_ = bump;
    return f;
  }

  MapForm form() const noexcept { return form_; }
  const std::array<double, 3>& raw_parameters() const noexcept { return p_; }
  std::span<const double> parameters() const noexcept {
    return std::span<const double>(p_).first(static_cast<std::size_t>(parameter_count(form_)));
  }
  double bump() const noexcept { return bump_; }

  FiberMap with_parameter(int index, double value) const {
    if (index < 0 || index >= parameter_count(form_)) fail(ErrorKind::invalid_argument, "parameter index out of range");
    FiberMap f = *this;
    f.p_[static_cast<std::size_t>(index)] = value;
    return f;
  }

  /// psi_s o f. Affine maps stay in closed form as a bumped affine map.
  FiberMap post_bumped(double s) const {
    if (s == 0.0) return *this;
    if (form_ == MapForm::affine && bump_ == 0.0) {
      const double a = p_[0];
      const double b = p_[1];
      // a + b x + s (a + b x)(1 - a - b x) rewritten in the basis 1, x, x(1-x).
      return bumped_affine(a + s * a * (1.0 - a), b + s * b * (1.0 - 2.0 * a) - s * b * b, s * b * b);
    }
    if (bump_ != 0.0) fail(ErrorKind::invalid_argument, "map already carries a bump");
    FiberMap f = *this;
    f.bump_ = s;
    return f;
  }

  double base_value(double x) const noexcept {
    switch (form_) {
      case MapForm::affine: return p_[0] + p_[1] * x;
      case MapForm::bumped_affine: return p_[0] + p_[1] * x + p_[2] * x * (1.0 - x);
      case MapForm::plateau: {
        const double c1 = p_[0];
        if (x < p_[1]) return x + c1 * (p_[1] - x) * (p_[1] - x);
        if (x > p_[2]) return x - c1 * (x - p_[2]) * (x - p_[2]);
        return x;
      }
    }
    return x;
  }

  double base_slope(double x) const noexcept {
    switch (form_) {
      case MapForm::affine: return p_[1];
      case MapForm::bumped_affine: return p_[1] + p_[2] * (1.0 - 2.0 * x);
      case MapForm::plateau: {
        if (x < p_[1]) return 1.0 - 2.0 * p_[0] * (p_[1] - x);
        if (x > p_[2]) return 1.0 - 2.0 * p_[0] * (x - p_[2]);
        return 1.0;
      }
    }
    return 1.0;
  }

  /// Unchecked evaluation; callers guarantee x in [0,1].
  double value(double x) const noexcept {
    const double y = base_value(x);
    return bump_ == 0.0 ? y : y + bump_ * y * (1.0 - y);
  }

  double slope(double x) const noexcept {
    const double d = base_slope(x);
    if (bump_ == 0.0) return d;
    return (1.0 + bump_ * (1.0 - 2.0 * base_value(x))) * d;
  }

  double operator()(double x) const noexcept { return value(x); }

  /// Enclosure of the derivative over [lo, hi].
  RealInterval slope_range(double lo, double hi) const noexcept {
    double dlo = 0.0;
    double dhi = 0.0;
    switch (form_) {
      case MapForm::affine: dlo = dhi = p_[1]; break;
      case MapForm::bumped_affine:
        dlo = std::min(base_slope(lo), base_slope(hi));
        dhi = std::max(base_slope(lo), base_slope(hi));
        break;
      case MapForm::plateau: {
        // Unimodal: rises to 1 on the plateau, falls after it.
        dlo = std::min(base_slope(lo), base_slope(hi));
        if (hi < p_[1]) {
          dhi = base_slope(hi);
        } else if (lo > p_[2]) {
          dhi = base_slope(lo);
        } else {
          dhi = 1.0;
        }
        break;
      }
    }
    if (bump_ == 0.0) return {dlo, dhi};
    const double y0 = base_value(lo);
    const double y1 = base_value(hi);
    const double g0 = 1.0 + bump_ * (1.0 - 2.0 * y0);
    const double g1 = 1.0 + bump_ * (1.0 - 2.0 * y1);
    const double glo = std::min(g0, g1);
    const double ghi = std::max(g0, g1);
    const std::array<double, 4> prods{glo * dlo, glo * dhi, ghi * dlo, ghi * dhi};
    return {*std::min_element(prods.begin(), prods.end()), *std::max_element(prods.begin(), prods.end())};
  }

  /// Closed-form inverse used as the starting point for the polished inverse.
  double inverse_guess(double y) const noexcept {
    double z = y;
    if (bump_ != 0.0) {
      const double s = bump_;
      z = 2.0 * y / ((1.0 + s) + std::sqrt(std::max(0.0, (1.0 + s) * (1.0 + s) - 4.0 * s * y)));
    }
    switch (form_) {
      case MapForm::affine: return (z - p_[0]) / p_[1];
      case MapForm::bumped_affine: {
        const double bc = p_[1] + p_[2];
        const double disc = std::max(0.0, bc * bc - 4.0 * p_[2] * (z - p_[0]));
        return 2.0 * (z - p_[0]) / (bc + std::sqrt(disc));
      }
      case MapForm::plateau: {
        const double c1 = p_[0];
        if (z < p_[1]) {
          const double e = p_[1] - z;
          return p_[1] - 2.0 * e / (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * c1 * e)));
        }
        if (z > p_[2]) {
          const double e = z - p_[2];
          return p_[2] + 2.0 * e / (1.0 + std::sqrt(std::max(0.0, 1.0 - 4.0 * c1 * e)));
        }
        return z;
      }
    }
    return z;
  }

  /// Inverse on [f(0), f(1)] without range checks: bracketed Newton from the
  /// closed-form guess, bisection whenever Newton leaves the bracket.
  double inverse_unchecked(double y) const noexcept {
    double lo = 0.0;
    double hi = 1.0;
    double x = std::clamp(inverse_guess(y), 0.0, 1.0);
    if (!std::isfinite(x)) x = 0.5;
    for (int it = 0; it < kInverseMaxIterations; ++it) {
      const double r = value(x) - y;
      if (r == 0.0) return x;
      if (r < 0.0) {
        lo = x;
      } else {
        hi = x;
      }
      if (std::abs(r) < 1e-15 || hi - lo < 1e-16) break;
      const double d = slope(x);
      double next = d > 0.0 ? x - r / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (next == x) break;
      x = next;
    }
    return x;
  }

  friend bool operator==(const FiberMap&, const FiberMap&) = default;

 private:
  FiberMap(MapForm form, std::array<double, 3> p) : form_(form), p_(p) {}

  MapForm form_ = MapForm::affine;
  std::array<double, 3> p_{0.0, 1.0, 0.0};
  double bump_ = 0.0;
};

/// Class membership from closed-form bounds: strictly increasing on [0,1] and
/// f([0,1]) inside (0,1).
inline ClassCheck validate_class(const FiberMap& f) {
  const auto p = f.raw_parameters();
  for (double v : p) {
    if (!std::isfinite(v)) return {false, ClassViolation::non_finite, "non-finite parameter"};
  }
  if (!std::isfinite(f.bump())) return {false, ClassViolation::non_finite, "non-finite bump"};

  double slope_lower = 0.0;
  switch (f.form()) {
    case MapForm::affine: slope_lower = p[1]; break;
    case MapForm::bumped_affine: slope_lower = p[1] - std::abs(p[2]); break;
    case MapForm::plateau:
      if (!(p[0] > 0.0 && p[1] > 0.0 && p[1] <= p[2] && p[2] < 1.0)) {
        return {false, ClassViolation::bad_shape, "plateau needs c1 > 0 and 0 < j_lo <= j_hi < 1"};
      }
      slope_lower = 1.0 - 2.0 * p[0] * std::max(p[1], 1.0 - p[2]);
      break;
  }
  if (!(slope_lower > 0.0)) return {false, ClassViolation::not_increasing, "derivative lower bound is not positive"};

  const double f0 = f.base_value(0.0);
  const double f1 = f.base_value(1.0);
  if (!(f0 > 0.0)) return {false, ClassViolation::not_inside, "f(0) <= 0"};
  if (!(f1 < 1.0)) return {false, ClassViolation::not_inside, "f(1) >= 1"};
  if (f.bump() != 0.0) {
    // psi_s fixes 0 and 1 and is increasing for |s| < 1.
    if (!(std::abs(f.bump()) < 1.0)) return {false, ClassViolation::not_increasing, "bump magnitude must be < 1"};
    if (!(f.value(0.0) > 0.0) || !(f.value(1.0) < 1.0)) return {false, ClassViolation::not_inside, "bumped image leaves (0,1)"};
  }
  return {};
}

inline void require_unit(double x, const char* what) {
  if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::domain, std::string(what) + " outside [0,1]");
}

inline double eval(const FiberMap& f, double x) {
  require_unit(x, "x");
  return f.value(x);
}

inline double derivative(const FiberMap& f, double x) {
  require_unit(x, "x");
  return f.slope(x);
}

inline double invert(const FiberMap& f, double y) {
  const double y0 = f.value(0.0);
  const double y1 = f.value(1.0);
  if (!(y >= y0 && y <= y1)) fail(ErrorKind::range, "y = " + std::to_string(y) + " outside the image of the map");
  return f.inverse_unchecked(y);
}

/// Applies maps[0] first, then maps[1], and so on.
inline double compose_along_word(std::span<const FiberMap> maps, double x) {
  require_unit(x, "x");
  for (const auto& f : maps) x = f.value(x);
  return x;
}

/// Outward-rounded image of an interval; exact up to the margin because maps are increasing.
inline RealInterval interval_image(const FiberMap& f, RealInterval iv) {
  return {std::max(0.0, f.value(iv.lo) - kRoundingMargin), std::min(1.0, f.value(iv.hi) + kRoundingMargin)};
}

}  // namespace skewdyn
