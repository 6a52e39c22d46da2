#pragma once

// Subshifts of finite type, their Markov measures and finite windows of
// bi-infinite sequences. Symbols are 0-based internally; text formats use
// 1-based labels (see config.hpp).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace skewdyn {

using Symbol = int;
using IntMatrix = std::vector<std::vector<int>>;
using RealMatrix = std::vector<std::vector<double>>;

inline constexpr int kMaxAlphabet = 16;
inline constexpr int kMaxWindow = 12;
inline constexpr std::uint64_t kMaxDenseWords = std::uint64_t{1} << 22;

namespace detail {

inline bool reaches_all(const IntMatrix& adj, bool transposed) {
  const std::size_t n = adj.size();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t u = 0; u < n; ++u) {
      const int edge = transposed ? adj[u][v] : adj[v][u];
      if (edge != 0 && !seen[u]) {
        seen[u] = 1;
        stack.push_back(u);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

inline void require_square(std::size_t rows, const auto& m, const char* what) {
  if (rows == 0) fail(ErrorKind::invalid_matrix, std::string(what) + " is empty");
  for (const auto& row : m) {
    if (row.size() != rows) fail(ErrorKind::invalid_matrix, std::string(what) + " is not square");
  }
}

}  // namespace detail

/// True iff the 0/1 matrix defines a strongly connected transition graph.
inline bool validate_transitive(const IntMatrix& transitions) {
  detail::require_square(transitions.size(), transitions, "transition matrix");
  for (const auto& row : transitions) {
    for (int v : row) {
      if (v != 0 && v != 1) fail(ErrorKind::invalid_matrix, "transition matrix entries must be 0 or 1");
    }
  }
  return detail::reaches_all(transitions, false) && detail::reaches_all(transitions, true);
}

class TransitionSystem {
 public:
  explicit TransitionSystem(IntMatrix transitions) : matrix_(std::move(transitions)) {
    if (matrix_.size() < 2) fail(ErrorKind::invalid_matrix, "alphabet needs at least two symbols");
    if (matrix_.size() > static_cast<std::size_t>(kMaxAlphabet)) {
      fail(ErrorKind::resource_limit, "alphabet larger than " + std::to_string(kMaxAlphabet));
    }
    if (!validate_transitive(matrix_)) fail(ErrorKind::invalid_matrix, "transition graph is not strongly connected");
  }

  static TransitionSystem full_shift(int n) { return TransitionSystem(IntMatrix(n, std::vector<int>(n, 1))); }

  int alphabet_size() const noexcept { return static_cast<int>(matrix_.size()); }
  const IntMatrix& matrix() const noexcept { return matrix_; }
  bool allowed(Symbol a, Symbol b) const { return matrix_[a][b] != 0; }

  bool valid_symbol(Symbol s) const noexcept { return s >= 0 && s < alphabet_size(); }

  bool admissible(std::span<const Symbol> word) const {
    if (word.empty()) return false;
    for (Symbol s : word) {
      if (!valid_symbol(s)) return false;
    }
    for (std::size_t i = 1; i < word.size(); ++i) {
      if (!allowed(word[i - 1], word[i])) return false;
    }
    return true;
  }

  bool cyclically_admissible(std::span<const Symbol> word) const {
    return admissible(word) && allowed(word.back(), word.front());
  }

  friend bool operator==(const TransitionSystem&, const TransitionSystem&) = default;

 private:
  IntMatrix matrix_;
};

/// Stationary vector of a row-stochastic matrix with irreducible support, by a
/// direct solve of the balance equations with one row replaced by normalization.
inline std::vector<double> stationary_distribution(const RealMatrix& stochastic) {
  const std::size_t n = stochastic.size();
  detail::require_square(n, stochastic, "stochastic matrix");
  IntMatrix support(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = stochastic[i][j];
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) fail(ErrorKind::invalid_matrix, "stochastic entries must lie in [0,1]");
      support[i][j] = p > 0.0 ? 1 : 0;
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      fail(ErrorKind::invalid_matrix, "row " + std::to_string(i) + " does not sum to 1");
    }
  }
  if (!validate_transitive(support)) fail(ErrorKind::not_ergodic, "stochastic matrix has reducible support");

  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = stochastic[j][i] - (i == j ? 1.0 : 0.0);
  }
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd pi = a.fullPivLu().solve(rhs);

  std::vector<double> out(pi.data(), pi.data() + n);
  for (double& v : out) v = std::max(v, 0.0);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return out;
}

class MarkovChain {
 public:
  MarkovChain(TransitionSystem base, RealMatrix stochastic)
      : base_(std::move(base)), stochastic_(std::move(stochastic)) {
    const auto n = static_cast<std::size_t>(base_.alphabet_size());
    if (stochastic_.size() != n) fail(ErrorKind::invalid_matrix, "stochastic matrix size differs from alphabet");
    detail::require_square(n, stochastic_, "stochastic matrix");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if ((stochastic_[i][j] > 0.0) != base_.allowed(static_cast<Symbol>(i), static_cast<Symbol>(j))) {
          fail(ErrorKind::invalid_matrix, "stochastic support differs from transitions at (" + std::to_string(i + 1) +
                                              "," + std::to_string(j + 1) + ")");
        }
      }
    }
    stationary_ = stationary_distribution(stochastic_);
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += stationary_[i] * stochastic_[i][j];
      if (std::abs(v - stationary_[j]) > 1e-10) fail(ErrorKind::not_ergodic, "stationary residual above 1e-10");
    }
  }

  /// Uniform transition probabilities over the allowed successors.
  static MarkovChain uniform(const TransitionSystem& base) {
    const int n = base.alphabet_size();
    RealMatrix p(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      const auto& row = base.matrix()[i];
      const double out = static_cast<double>(std::count(row.begin(), row.end(), 1));
      for (int j = 0; j < n; ++j) p[i][j] = row[j] != 0 ? 1.0 / out : 0.0;
    }
    return MarkovChain(base, std::move(p));
  }

  const TransitionSystem& base() const noexcept { return base_; }
  const RealMatrix& stochastic() const noexcept { return stochastic_; }
  const std::vector<double>& stationary() const noexcept { return stationary_; }
  double transition(Symbol a, Symbol b) const { return stochastic_[a][b]; }

 private:
  TransitionSystem base_;
  RealMatrix stochastic_;
  std::vector<double> stationary_;
};

/// Finite piece of a point of the sequence space: symbols at indices
/// offset, offset+1, ..., offset+size-1.
class SymbolWindow {
 public:
  SymbolWindow() = default;
  SymbolWindow(int offset, std::vector<Symbol> symbols) : offset_(offset), symbols_(std::move(symbols)) {
    if (symbols_.empty()) fail(ErrorKind::invalid_argument, "empty symbol window");
    if (offset_ > 0) fail(ErrorKind::invalid_argument, "window offset must be <= 0");
  }

  int offset() const noexcept { return offset_; }
  int left() const noexcept { return offset_; }
  int right() const noexcept { return offset_ + static_cast<int>(symbols_.size()) - 1; }
  const std::vector<Symbol>& symbols() const noexcept { return symbols_; }
  std::size_t size() const noexcept { return symbols_.size(); }

  bool covers(int lo, int hi) const noexcept { return lo >= left() && hi <= right(); }
  Symbol at(int index) const { return symbols_[static_cast<std::size_t>(index - offset_)]; }

  /// Symbols at indices lo..hi (inclusive); the range must be covered.
  std::span<const Symbol> slice(int lo, int hi) const {
    return std::span<const Symbol>(symbols_).subspan(static_cast<std::size_t>(lo - offset_),
                                                     static_cast<std::size_t>(hi - lo + 1));
  }

  friend bool operator==(const SymbolWindow&, const SymbolWindow&) = default;

 private:
  int offset_ = 0;
  std::vector<Symbol> symbols_{0};
};

struct PeriodicWord {
  std::vector<Symbol> symbols;
  int minimal_period = 0;

  /// Symbol at any integer index of the periodic sequence with phase 0 at symbols[0].
  Symbol at(int index) const {
    const int n = static_cast<int>(symbols.size());
    return symbols[static_cast<std::size_t>(((index % n) + n) % n)];
  }

  SymbolWindow window(int lo, int hi) const {
    std::vector<Symbol> s;
    s.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int i = lo; i <= hi; ++i) s.push_back(at(i));
    return SymbolWindow(lo, std::move(s));
  }
};

inline int minimal_period(std::span<const Symbol> word) {
  const int n = static_cast<int>(word.size());
  for (int p = 1; p < n; ++p) {
    if (n % p != 0) continue;
    bool periodic = true;
    for (int i = p; i < n && periodic; ++i) periodic = word[i] == word[i - p];
    if (periodic) return p;
  }
  return n;
}

struct MetricValue {
  double value = 0.0;
  // False when the windows agree on their whole shared range; then value is 0
  // and the true distance is only known to be at most upper_bound.
  bool exact = true;
  double upper_bound = 0.0;
};

/// d(a,b) = 2^{-min{|n| : a_n != b_n}} evaluated on the shared index range.
inline MetricValue metric(const SymbolWindow& a, const SymbolWindow& b) {
  const int lo = std::max(a.left(), b.left());
  const int hi = std::min(a.right(), b.right());
  if (lo > hi) fail(ErrorKind::incomparable_windows, "windows share no index");

  std::optional<int> closest;
  for (int i = lo; i <= hi; ++i) {
    if (a.at(i) != b.at(i) && (!closest || std::abs(i) < *closest)) closest = std::abs(i);
  }
  if (closest) {
    const double v = std::ldexp(1.0, -*closest);
    return {v, true, v};
  }
  // Largest symmetric ball [-r, r] inside the shared range; nothing is known
  // beyond it, so the first unknown index has |n| = r + 1.
  const double bound = (lo <= 0 && hi >= 0) ? std::ldexp(1.0, -(std::min(-lo, hi) + 1)) : 1.0;
  return {0.0, false, bound};
}

/// Markov measure of the cylinder fixed by the window: pi_{w0} * prod P[w_i][w_{i+1}].
inline double cylinder_measure(const MarkovChain& chain, const SymbolWindow& window) {
  const auto& s = window.symbols();
  const auto& base = chain.base();
  for (Symbol v : s) {
    if (!base.valid_symbol(v)) fail(ErrorKind::invalid_argument, "symbol outside alphabet");
  }
  double m = chain.stationary()[static_cast<std::size_t>(s.front())];
  for (std::size_t i = 1; i < s.size(); ++i) m *= chain.transition(s[i - 1], s[i]);
  return m;
}

/// All cyclically admissible words of length n (rotations counted separately).
inline std::vector<PeriodicWord> periodic_words(const TransitionSystem& sys, int n) {
  if (n <= 0) fail(ErrorKind::invalid_argument, "period must be >= 1");
  const int k = sys.alphabet_size();
  std::vector<PeriodicWord> out;
  std::vector<Symbol> word(static_cast<std::size_t>(n), 0);
  // Iterative depth-first enumeration over admissible paths.
  std::vector<Symbol> next(static_cast<std::size_t>(n), 0);
  int depth = 0;
  while (depth >= 0) {
    auto d = static_cast<std::size_t>(depth);
    if (next[d] >= k) {
      next[d] = 0;
      --depth;
      continue;
    }
    const Symbol s = next[d]++;
    if (depth > 0 && !sys.allowed(word[d - 1], s)) continue;
    word[d] = s;
    if (depth == n - 1) {
      if (sys.allowed(s, word[0])) out.push_back({word, minimal_period(word)});
    } else {
      ++depth;
    }
  }
  return out;
}

template <class Gen>
Symbol sample_symbol(std::span<const double> probabilities, Gen& gen) {
  const double u = uniform01(gen);
  double acc = 0.0;
  Symbol last = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    last = static_cast<Symbol>(i);
    acc += probabilities[i];
    if (u < acc) return last;
  }
  return last;
}

/// Window on [left, right] drawn from the Markov measure: the symbol at `left`
/// from the stationary vector, then successors along rows of P.
template <class Gen>
SymbolWindow sample_window(const MarkovChain& chain, int left, int right, Gen& gen) {
  if (left > 0 || right < 0) fail(ErrorKind::invalid_argument, "sample range must satisfy left <= 0 <= right");
  std::vector<Symbol> s;
  s.reserve(static_cast<std::size_t>(right - left + 1));
  s.push_back(sample_symbol(std::span<const double>(chain.stationary()), gen));
  for (int i = left + 1; i <= right; ++i) {
    s.push_back(sample_symbol(std::span<const double>(chain.stochastic()[static_cast<std::size_t>(s.back())]), gen));
  }
  return SymbolWindow(left, std::move(s));
}

/// Enumeration of admissible words of one length with a dense code -> index map.
/// Codes read the word as a base-N number, leftmost symbol most significant.
class WordTable {
 public:
  WordTable(const TransitionSystem& sys, int length) : alphabet_(sys.alphabet_size()), length_(length) {
    if (length <= 0) fail(ErrorKind::invalid_argument, "word length must be >= 1");
    if (length > kMaxWindow) {
      fail(ErrorKind::resource_limit, "word length " + std::to_string(length) + " exceeds " + std::to_string(kMaxWindow));
    }
    std::uint64_t dense = 1;
    for (int i = 0; i < length; ++i) {
      dense *= static_cast<std::uint64_t>(alphabet_);
      if (dense > kMaxDenseWords) fail(ErrorKind::resource_limit, "too many words of length " + std::to_string(length));
    }
    index_.assign(dense, -1);

    std::vector<Symbol> word(static_cast<std::size_t>(length), 0);
    std::vector<Symbol> next(static_cast<std::size_t>(length), 0);
    int depth = 0;
    while (depth >= 0) {
      auto d = static_cast<std::size_t>(depth);
      if (next[d] >= alphabet_) {
        next[d] = 0;
        --depth;
        continue;
      }
      const Symbol s = next[d]++;
      if (depth > 0 && !sys.allowed(word[d - 1], s)) continue;
      word[d] = s;
      if (depth == length - 1) {
        index_[code(word)] = static_cast<std::int32_t>(count_);
        symbols_.insert(symbols_.end(), word.begin(), word.end());
        ++count_;
      } else {
        ++depth;
      }
    }
  }

  int length() const noexcept { return length_; }
  int alphabet_size() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return count_; }

  std::span<const Symbol> word(std::size_t i) const {
    return std::span<const Symbol>(symbols_).subspan(i * static_cast<std::size_t>(length_),
                                                     static_cast<std::size_t>(length_));
  }

  std::uint64_t code(std::span<const Symbol> w) const noexcept {
    std::uint64_t c = 0;
    for (Symbol s : w) c = c * static_cast<std::uint64_t>(alphabet_) + static_cast<std::uint64_t>(s);
    return c;
  }

  /// Index of an admissible word, or -1 when it is inadmissible or has the wrong length.
  std::int32_t find(std::span<const Symbol> w) const {
    if (static_cast<int>(w.size()) != length_) return -1;
    for (Symbol s : w) {
      if (s < 0 || s >= alphabet_) return -1;
    }
    return index_[code(w)];
  }

 private:
  int alphabet_;
  int length_;
  std::size_t count_ = 0;
  std::vector<Symbol> symbols_;
  std::vector<std::int32_t> index_;
};

}  // namespace skewdyn
