#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace skewdyn;
using namespace testsys;

namespace {

LabeledPoint point_for(const WitnessSearch& s, std::vector<Symbol> pattern, double x) {
  const auto [lo, hi] = s.required_window();
  std::vector<Symbol> sym;
  for (int i = lo; i <= hi; ++i) sym.push_back(pattern[static_cast<std::size_t>(i - lo) % pattern.size()]);
  return {SymbolWindow(lo, sym), x};
}

std::vector<MultistepSkewProduct> test_products() {
  return {constant_affine(), two_affine(), golden_multistep(), full2_multistep(), constant_plateau(),
          constant_plateau().transformed([](const FiberMap& f) { return f.post_bumped(0.01); })};
}

}  // namespace

TEST(ImageGraph, TwoSymbolStepGraph) {
  const auto f = two_affine();
  const auto g = image_graph(f, StepGraph::constant(f.base(), 0.3));
  EXPECT_EQ(g.left(), 1);
  EXPECT_EQ(g.right(), 0);
  for (Symbol prev : {0, 1}) {
    for (Symbol cur : {0, 1}) {
      EXPECT_NEAR(g.value_for(std::vector<Symbol>{prev, cur}), prev == 0 ? 0.34 : 0.41, 1e-15);
    }
  }
}

TEST(ImageGraph, InvariantGraphIsFixed) {
  const auto f = constant_affine();
  const auto g = image_graph(f, StepGraph::constant(f.base(), 0.5)).simplified();
  EXPECT_EQ(g.window_size(), 1);
  EXPECT_NEAR(g.values()[0], 0.5, 1e-15);
}

TEST(ImageGraph, TwiceMatchesDirectComposition) {
  const auto f = two_affine();
  const auto g2 = image_graph(f, image_graph(f, StepGraph::constant(f.base(), 0.3)));
  for (Symbol a : {0, 1}) {
    for (Symbol b : {0, 1}) {
      const SymbolWindow w(-2, {a, b, 0});
      const double direct = f.maps()[static_cast<std::size_t>(b)].value(f.maps()[static_cast<std::size_t>(a)].value(0.3));
      EXPECT_NEAR(g2.value_at(w, 0), direct, 1e-15);
    }
  }
}

TEST(ImageGraph, WindowCapIsEnforced) {
  const auto f = golden_multistep();
  StepGraph g = StepGraph::constant(f.base(), 0.3);
  const int cap = iteration_cap(f);
  for (int k = 0; k <= cap; ++k) g = image_graph(f, g);
  EXPECT_EQ(g.window_size(), kMaxWindow);
  try {
    image_graph(f, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::resource_limit);
  }
}

TEST(CertifyDrift, Examples) {
  const auto f = constant_affine();
  auto v = certify_drift(f, StepGraph::constant(f.base(), 0.1));
  EXPECT_EQ(v.kind, DriftKind::up);
  EXPECT_NEAR(v.margin, 0.08, 1e-12);
  v = certify_drift(f, StepGraph::constant(f.base(), 0.5));
  EXPECT_EQ(v.kind, DriftKind::inconclusive);
  v = certify_drift(f, StepGraph::constant(f.base(), 0.9));
  EXPECT_EQ(v.kind, DriftKind::down);
  EXPECT_NEAR(v.margin, 0.08, 1e-12);
  const auto t = two_affine();
  v = certify_drift(t, StepGraph::constant(t.base(), 0.3));
  EXPECT_EQ(v.kind, DriftKind::up);
  EXPECT_NEAR(v.margin, 0.04, 1e-12);
}

TEST(CertifyDrift, PersistsUnderIteration) {
  for (const auto& f : test_products()) {
    for (int i = 0; i < 64; ++i) {
      StepGraph g = StepGraph::constant(f.base(), (i + 0.5) / 64);
      const auto first = certify_drift(f, g).kind;
      if (first == DriftKind::inconclusive) continue;
      for (int k = 0; k < std::min(iteration_cap(f), 6); ++k) {
        g = image_graph(f, g).simplified();
        const auto next = certify_drift(f, g);
        // margins shrink geometrically; only the direction must survive
        if (next.kind == DriftKind::inconclusive) {
          EXPECT_LT(std::abs(next.margin), kCertMargin);
        } else {
          EXPECT_EQ(next.kind, first);
        }
      }
    }
  }
}

TEST(Classify, ContractionExamples) {
  const auto f = constant_affine();
  const WitnessSearch s1(f, 1);
  const auto up = s1.classify(point_for(s1, {0, 1}, 0.2));
  ASSERT_EQ(up.verdict, Verdict::up);
  EXPECT_LT(up.witness->level, 0.2);
  EXPECT_GT(f.map(0).value(up.witness->level), 0.2);
  const auto down = s1.classify(point_for(s1, {1, 0, 0}, 0.8));
  ASSERT_EQ(down.verdict, Verdict::down);
  EXPECT_GT(down.witness->level, 0.8);
  EXPECT_LT(f.map(0).value(down.witness->level), 0.8);
  for (int m : {0, 1, 4, 8, 12}) {
    const WitnessSearch s(f, m);
    EXPECT_EQ(s.classify(point_for(s, {0, 1, 1}, 0.5)).verdict, Verdict::unknown);
  }
}

TEST(Classify, ClosedFormOneDimensional) {
  // constant Affine(a, b): x < a/(1-b) drifts up, x > a/(1-b) down; everything
  // outside a thin collar must certify at depth 10
  const auto f = constant_affine(0.1, 0.8);
  const WitnessSearch s(f, 10);
  for (int i = 1; i < 200; ++i) {
    const double x = i / 200.0;
    const auto v = s.classify(point_for(s, {0, 1}, x)).verdict;
    if (x < 0.5 - 0.02) {
      EXPECT_EQ(v, Verdict::up) << x;
    } else if (x > 0.5 + 0.02) {
      EXPECT_EQ(v, Verdict::down) << x;
    }
    if (x == 0.5) {
      EXPECT_EQ(v, Verdict::unknown);
    }
  }
}

TEST(Classify, ShortWindowRejected) {
  const WitnessSearch s(constant_affine(), 4);
  try {
    s.classify({SymbolWindow(-1, {0, 0, 0}), 0.3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::window_too_short);
  }
}

TEST(Classify, CertificatesReplay) {
  std::mt19937_64 gen(5);
  for (const auto& f : test_products()) {
    const WitnessSearch s(f, 6);
    for (int t = 0; t < 200; ++t) {
      const auto p = random_point(s, gen);
      const auto c = s.classify(p);
      if (!c.witness) continue;
      const auto cert = make_certificate(f, *c.witness);
      EXPECT_EQ(cert.fingerprint, f.fingerprint());
      EXPECT_GE(cert.margin, kCertMargin);
      EXPECT_TRUE(replay_certificate(f, cert, p));
    }
  }
}

TEST(Classify, NeverBothDirections) {
  std::mt19937_64 gen(6);
  for (const auto& f : test_products()) {
    const WitnessSearch s(f, 8);
    for (int t = 0; t < 400; ++t) {
      const auto p = random_point(s, gen);
      const bool up = s.find(p, Direction::up).has_value();
      const bool down = s.find(p, Direction::down).has_value();
      EXPECT_FALSE(up && down);
    }
  }
}

TEST(Classify, LongerWindowSameVerdict) {
  std::mt19937_64 gen(7);
  for (const auto& f : test_products()) {
    const WitnessSearch s(f, 6);
    for (int t = 0; t < 100; ++t) {
      const auto p = random_point(s, gen);
      SplitMix64 g(gen());
      const auto& sym = p.window.symbols();
      // extend on both sides through admissible symbols
      std::vector<Symbol> wide;
      Symbol first = sym.front();
      std::vector<Symbol> pre;
      for (int k = 0; k < 3; ++k) {
        Symbol a = 0;
        while (!f.base().allowed(a, first)) ++a;
        pre.insert(pre.begin(), a);
        first = a;
      }
      wide = pre;
      wide.insert(wide.end(), sym.begin(), sym.end());
      Symbol last = sym.back();
      for (int k = 0; k < 3; ++k) {
        Symbol b = static_cast<Symbol>(g() % 2);
        if (!f.base().allowed(last, b)) b = 0;
        wide.push_back(b);
        last = b;
      }
      const LabeledPoint q{SymbolWindow(p.window.offset() - 3, wide), p.x};
      EXPECT_EQ(s.classify(p).verdict, s.classify(q).verdict);
    }
  }
}

TEST(Regions, ContractionCoversUpToCollar) {
  const auto f = constant_affine();
  auto regions = certified_regions(f, 8);
  const double collar = 0.4 * std::pow(0.8, 8);
  const auto boxes = regions.up.boxes();
  std::map<std::vector<Symbol>, std::vector<RealInterval>> per;
  for (const auto& b : boxes) per[b.cylinder.symbols()].push_back(b.x);
  ASSERT_FALSE(per.empty());
  for (auto& [w, ivs] : per) {
    merge_intervals(ivs);
    bool covered = false;
    for (const auto& iv : ivs) covered = covered || (iv.lo <= 0.1 + 1e-6 && iv.hi >= 0.5 - collar);
    EXPECT_TRUE(covered);
  }
  EXPECT_GE(regions.up.measure(f.chain()), 0.5 - collar - 0.1);
  EXPECT_GE(regions.down.measure(f.chain()), 0.5 - collar - 0.1);
  EXPECT_EQ(regions.up.overlap(f.chain(), regions.down), 0.0);
}

TEST(Regions, EmptyAtDepthZero) {
  auto r = certified_regions(constant_affine(), 0);
  EXPECT_TRUE(r.up.empty());
  EXPECT_TRUE(r.down.empty());
  EXPECT_EQ(r.up.measure(constant_affine().chain()), 0.0);
}

TEST(Regions, UpAndDownNeverOverlap) {
  for (const auto& f : test_products()) {
    auto r = certified_regions(f, 8);
    EXPECT_EQ(r.up.overlap(f.chain(), r.down), 0.0);
    EXPECT_LE(r.up.measure(f.chain()) + r.down.measure(f.chain()), 1.0 + 1e-12);
  }
}

TEST(Regions, BoxesAgreeWithClassification) {
  std::mt19937_64 gen(9);
  for (const auto& f : test_products()) {
    const WitnessSearch s(f, 6);
    auto r = certified_regions(s);
    const auto up = r.up.boxes();
    const auto down = r.down.boxes();
    for (int t = 0; t < 300; ++t) {
      const auto p = random_point(s, gen);
      auto inside = [&](const std::vector<Box>& bs) {
        for (const auto& b : bs) {
          if (p.window.covers(b.cylinder.left(), b.cylinder.right()) &&
              std::ranges::equal(p.window.slice(b.cylinder.left(), b.cylinder.right()), b.cylinder.symbols()) &&
              b.x.lo < p.x && p.x < b.x.hi)
            return true;
        }
        return false;
      };
      const auto v = s.classify(p).verdict;
      if (inside(up)) {
        EXPECT_EQ(v, Verdict::up);
      }
      if (inside(down)) {
        EXPECT_EQ(v, Verdict::down);
      }
    }
  }
}

TEST(Periodic, ReturnMapExamples) {
  const auto f = two_affine();
  const PeriodicWord w{{0, 1}, 2};
  const auto maps = periodic_fiber_map(f, w);
  ASSERT_EQ(maps.size(), 2u);
  EXPECT_NEAR(compose_along_word(maps, 0.0), 0.27, 1e-15);
  EXPECT_NEAR(compose_along_word(maps, 0.3), 0.27 + 0.56 * 0.3, 1e-15);
  const double fixed = 0.27 / 0.44;
  EXPECT_NEAR(compose_along_word(maps, fixed), fixed, 1e-15);
  const auto c = constant_affine();
  EXPECT_EQ(periodic_fiber_map(c, {{0}, 1})[0], c.map(0));
}

TEST(Periodic, ConsistencyExamples) {
  const WitnessSearch s(two_affine(), 8);
  const auto check = periodic_consistency(s, {{0, 1}, 2}, 0.3);
  EXPECT_TRUE(check.consistent);
  EXPECT_NE(check.verdict, Verdict::down);
  EXPECT_NEAR(check.image, 0.438, 1e-15);
  const WitnessSearch c(constant_affine(), 8);
  const auto fixed = periodic_consistency(c, {{0}, 1}, 0.5);
  EXPECT_TRUE(fixed.consistent);
  EXPECT_EQ(fixed.verdict, Verdict::unknown);
}

TEST(Periodic, AllShortWordsConsistent) {
  SplitMix64 gen(10);
  for (const auto& f : test_products()) {
    const WitnessSearch s(f, 8);
    for (int n = 1; n <= 4; ++n) {
      for (const auto& w : periodic_words(f.base(), n)) {
        for (int t = 0; t < 20; ++t) EXPECT_TRUE(periodic_consistency(s, w, uniform01(gen)).consistent);
      }
    }
  }
}
