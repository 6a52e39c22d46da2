#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "error.hpp"
#include "fiber_maps.hpp"
#include "symbolic_base.hpp"

namespace skewdyn {

/// A cylinder times an x-interval.
struct Box {
  SymbolWindow cylinder;
  RealInterval x;
};

/// Sorts and fuses overlapping or touching intervals in place.
inline void merge_intervals(std::vector<RealInterval>& ivs) {
  std::erase_if(ivs, [](const RealInterval& iv) { return !(iv.hi > iv.lo); });
  if (ivs.size() < 2) return;
  std::sort(ivs.begin(), ivs.end(), [](const RealInterval& a, const RealInterval& b) { return a.lo < b.lo; });
  std::size_t out = 0;
  for (std::size_t i = 1; i < ivs.size(); ++i) {
    if (ivs[i].lo <= ivs[out].hi) {
      ivs[out].hi = std::max(ivs[out].hi, ivs[i].hi);
    } else {
      ivs[++out] = ivs[i];
    }
  }
  ivs.resize(out + 1);
}

inline double total_length(const std::vector<RealInterval>& merged) {
  double s = 0.0;
  for (const auto& iv : merged) s += iv.length();
  return s;
}

/// Overlap length of two merged interval lists.
inline double overlap_length(const std::vector<RealInterval>& a, const std::vector<RealInterval>& b) {
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].lo, b[j].lo);
    const double hi = std::min(a[i].hi, b[j].hi);
    if (hi > lo) s += hi - lo;
    if (a[i].hi < b[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return s;
}

/// Union of boxes over cylinders of several depths. Cylinders of window
/// (L, R) fix the symbols at indices -L..R.
class CylinderUnion {
 public:
  explicit CylinderUnion(TransitionSystem base) : base_(std::move(base)) {}

  const TransitionSystem& base() const noexcept { return base_; }
  bool empty() const noexcept { return buckets_.empty(); }

  std::pair<int, int> widest() const noexcept {
    std::pair<int, int> w{0, 0};
    for (const auto& [key, bucket] : buckets_) {
      w.first = std::max(w.first, key.first);
      w.second = std::max(w.second, key.second);
    }
    return w;
  }

  /// Interval lists of the (L, R) bucket, indexed like WordTable(base, L+R+1).
  std::vector<std::vector<RealInterval>>& bucket(int left, int right) {
    auto it = buckets_.find({left, right});
    if (it == buckets_.end()) {
      auto table = std::make_shared<const WordTable>(base_, left + right + 1);
      const std::size_t n = table->size();
      it = buckets_.emplace(std::pair{left, right}, Bucket{std::move(table), std::vector<std::vector<RealInterval>>(n)}).first;
    }
    return it->second.intervals;
  }

  const WordTable& table(int left, int right) {
    bucket(left, right);
    return *buckets_.at({left, right}).table;
  }

  void add(const Box& box) {
    const int left = -box.cylinder.left();
    const int right = box.cylinder.right();
    if (right < 0) fail(ErrorKind::invalid_region, "cylinder must cover index 0");
    auto& ivs = bucket(left, right);
    const std::int32_t idx = buckets_.at({left, right}).table->find(box.cylinder.symbols());
    if (idx < 0) return;  // inadmissible cylinder: empty set
    ivs[static_cast<std::size_t>(idx)].push_back(box.x);
  }

  /// Refines every bucket to the window (left, right) and merges per cylinder.
  void normalize_to(int left, int right) {
    auto target_table = std::make_shared<const WordTable>(base_, left + right + 1);
    std::vector<std::vector<RealInterval>> target(target_table->size());
    for (auto& [key, b] : buckets_) {
      if (key.first > left || key.second > right) fail(ErrorKind::invalid_argument, "cannot coarsen a cylinder union");
      const auto skip = static_cast<std::size_t>(left - key.first);
      const auto len = static_cast<std::size_t>(key.first + key.second + 1);
      for (std::size_t i = 0; i < target_table->size(); ++i) {
        const std::int32_t src = b.table->find(target_table->word(i).subspan(skip, len));
        const auto& from = b.intervals[static_cast<std::size_t>(src)];
        target[i].insert(target[i].end(), from.begin(), from.end());
      }
    }
    for (auto& ivs : target) merge_intervals(ivs);
    buckets_.clear();
    buckets_.emplace(std::pair{left, right}, Bucket{std::move(target_table), std::move(target)});
  }

  void normalize() {
    const auto [l, r] = widest();
    normalize_to(l, r);
  }

  void merge(const CylinderUnion& other) {
    if (!(other.base_ == base_)) fail(ErrorKind::incompatible, "unions over different bases");
    for (const auto& [key, b] : other.buckets_) {
      auto& mine = bucket(key.first, key.second);
      const auto& mine_table = *buckets_.at(key).table;
      for (std::size_t i = 0; i < b.table->size(); ++i) {
        const std::int32_t j = mine_table.find(b.table->word(i));
        mine[static_cast<std::size_t>(j)].insert(mine[static_cast<std::size_t>(j)].end(), b.intervals[i].begin(),
                                                 b.intervals[i].end());
      }
    }
  }

  /// Standard measure of the union (Markov measure times Lebesgue).
  double measure(const MarkovChain& chain) {
    if (empty()) return 0.0;
    normalize();
    const auto& b = buckets_.begin()->second;
    double m = 0.0;
    for (std::size_t i = 0; i < b.table->size(); ++i) {
      if (b.intervals[i].empty()) continue;
      m += word_measure(chain, b.table->word(i)) * total_length(b.intervals[i]);
    }
    return m;
  }

  /// Measure of the intersection with another union.
  double overlap(const MarkovChain& chain, const CylinderUnion& other) {
    if (empty() || other.empty()) return 0.0;
    CylinderUnion o = other;
    const auto [l1, r1] = widest();
    const auto [l2, r2] = o.widest();
    const int l = std::max(l1, l2);
    const int r = std::max(r1, r2);
    normalize_to(l, r);
    o.normalize_to(l, r);
    const auto& a = buckets_.begin()->second;
    const auto& b = o.buckets_.begin()->second;
    double m = 0.0;
    for (std::size_t i = 0; i < a.table->size(); ++i) {
      const double len = overlap_length(a.intervals[i], b.intervals[i]);
      if (len > 0.0) m += word_measure(chain, a.table->word(i)) * len;
    }
    return m;
  }

  std::vector<Box> boxes() {
    std::vector<Box> out;
    if (empty()) return out;
    normalize();
    const auto& [key, b] = *buckets_.begin();
    for (std::size_t i = 0; i < b.table->size(); ++i) {
      const auto w = b.table->word(i);
      for (const auto& iv : b.intervals[i]) out.push_back({SymbolWindow(-key.first, {w.begin(), w.end()}), iv});
    }
    return out;
  }

  static double word_measure(const MarkovChain& chain, std::span<const Symbol> w) {
    double m = chain.stationary()[static_cast<std::size_t>(w.front())];
    for (std::size_t k = 1; k < w.size(); ++k) m *= chain.transition(w[k - 1], w[k]);
    return m;
  }

 private:
  struct Bucket {
    std::shared_ptr<const WordTable> table;
    std::vector<std::vector<RealInterval>> intervals;
  };

  TransitionSystem base_;
  std::map<std::pair<int, int>, Bucket> buckets_;
};

}  // namespace skewdyn
