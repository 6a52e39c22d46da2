#pragma once

#include <random>
#include <vector>

#include "skewdyn/skewdyn.hpp"

namespace testsys {

using namespace skewdyn;

inline TransitionSystem full2() { return TransitionSystem::full_shift(2); }
inline TransitionSystem golden() { return TransitionSystem({{1, 1}, {1, 0}}); }

inline MarkovChain golden_chain() {
  return MarkovChain(golden(), {{2.0 / 3.0, 1.0 / 3.0}, {1.0, 0.0}});
}

inline MultistepSkewProduct constant_affine(double a = 0.1, double b = 0.8) {
  return MultistepSkewProduct::constant(MarkovChain::uniform(full2()), FiberMap::affine(a, b));
}

inline MultistepSkewProduct two_affine() {
  return MultistepSkewProduct::per_symbol(MarkovChain::uniform(full2()),
                                          {FiberMap::affine(0.1, 0.8), FiberMap::affine(0.2, 0.7)});
}

// Genuinely multistep: the map at 0 depends on the symbols at -1, 0 and 1.
inline MultistepSkewProduct golden_multistep() {
  const MarkovChain chain = golden_chain();
  const WordTable words(chain.base(), 3);
  std::vector<FiberMap> maps;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto w = words.word(i);
    const double a = 0.08 + 0.04 * w[0] + 0.03 * w[1] + 0.02 * w[2];
    maps.push_back(w[1] == 1 ? FiberMap::bumped_affine(a, 0.7, 0.05) : FiberMap::affine(a, 0.8));
  }
  return MultistepSkewProduct(chain, 1, 1, std::move(maps));
}

inline MultistepSkewProduct full2_multistep(double shift = 0.0) {
  const MarkovChain chain = MarkovChain::uniform(full2());
  const WordTable words(chain.base(), 3);
  std::vector<FiberMap> maps;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto w = words.word(i);
    const double a = 0.1 + shift + 0.05 * w[0] - 0.03 * w[2] + 0.02 * w[1];
    maps.push_back(FiberMap::affine(a, 0.75));
  }
  return MultistepSkewProduct(chain, 1, 1, std::move(maps));
}

inline MultistepSkewProduct constant_plateau(double c1 = 0.5, double lo = 0.4, double hi = 0.6) {
  return MultistepSkewProduct::constant(MarkovChain::uniform(full2()), FiberMap::plateau(c1, lo, hi));
}

inline LabeledPoint random_point(const WitnessSearch& s, std::mt19937_64& gen) {
  const auto [lo, hi] = s.required_window();
  SplitMix64 g(gen());
  return {sample_window(s.product().chain(), lo, hi, g), uniform01(g)};
}

}  // namespace testsys
