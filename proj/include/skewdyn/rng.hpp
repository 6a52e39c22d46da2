#pragma once

#include <cstdint>
#include <limits>

namespace skewdyn {

// SplitMix64 stream. Small state, so one generator per sample is cheap, which
// is what makes counter-based splitting practical.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Independent stream for work item `counter` under run seed `seed`.
inline SplitMix64 split_stream(std::uint64_t seed, std::uint64_t counter) noexcept {
  SplitMix64 mixer(seed ^ (0xd1b54a32d192ed03ULL * (counter + 1)));
  mixer();
  return SplitMix64(mixer() ^ counter);
}

/// Uniform double in [0,1) from the top 53 bits; bit-identical on every platform.
template <class Gen>
double uniform01(Gen& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace skewdyn
