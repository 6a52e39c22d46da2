#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace skewdyn;
using namespace testsys;

TEST(MeasureBoxes, Examples) {
  const auto uni = MarkovChain::uniform(full2());
  const std::vector<Box> full{{SymbolWindow(0, {0}), {0.0, 0.5}}, {SymbolWindow(0, {1}), {0.0, 0.5}}};
  EXPECT_NEAR(measure_boxes(uni, full), 0.5, 1e-15);
  const std::vector<Box> golden{{SymbolWindow(0, {0, 1}), {0.2, 0.6}}};
  EXPECT_NEAR(measure_boxes(golden_chain(), golden), 0.1, 1e-12);
  EXPECT_EQ(measure_boxes(uni, {}), 0.0);
  const std::vector<Box> overlapping{{SymbolWindow(0, {0}), {0.0, 0.5}}, {SymbolWindow(0, {0}), {0.4, 0.6}}};
  try {
    measure_boxes(uni, overlapping);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_region);
  }
}

TEST(Hoeffding, Radius) {
  EXPECT_NEAR(hoeffding_radius(100), std::sqrt(std::log(40.0) / 200.0), 1e-15);
  EXPECT_NEAR(hoeffding_radius(100), 0.1358, 1e-4);
}

TEST(Estimate, ContractionBaseline) {
  const auto e = estimate_regions(constant_affine(), 8, 100000, 1);
  EXPECT_NEAR(e.mc_up, 0.5, 0.01);
  EXPECT_NEAR(e.mc_down, 0.5, 0.01);
  EXPECT_LE(e.mc_unknown, 0.15);
  EXPECT_NEAR(e.mc_up + e.mc_down + e.mc_unknown, 1.0, 1e-12);
  EXPECT_LE(e.certified_up + e.certified_down, 1.0 + 1e-12);
  EXPECT_GE(e.mc_up, e.certified_up - e.radius);
  EXPECT_GE(e.mc_down, e.certified_down - e.radius);
}

TEST(Estimate, Deterministic) {
  const auto a = estimate_regions(golden_multistep(), 6, 2000, 42);
  const auto b = estimate_regions(golden_multistep(), 6, 2000, 42);
  EXPECT_EQ(a, b);
  const auto c = estimate_regions(golden_multistep(), 6, 2000, 43);
  EXPECT_NE(a.mc_up, c.mc_up);
}

TEST(Estimate, ThreadSplitMatchesSequential) {
  const WitnessSearch s(golden_multistep(), 6);
  const auto whole = count_range(s, 0, 3000, 5);
  auto split = count_range(s, 0, 1234, 5);
  const auto rest = count_range(s, 1234, 3000, 5);
  split.up += rest.up;
  split.down += rest.down;
  split.unknown += rest.unknown;
  EXPECT_EQ(whole.up, split.up);
  EXPECT_EQ(whole.down, split.down);
  const auto par = count_classifications(s, 3000, 5);
  EXPECT_EQ(whole.up, par.up);
  EXPECT_EQ(whole.unknown, par.unknown);
}

TEST(Estimate, TooFewSamples) { EXPECT_THROW(estimate_regions(constant_affine(), 4, 99, 1), Error); }

TEST(Family, Members) {
  const MonotoneFamily fam(constant_affine(), 1.0, -0.2, 0.2);
  EXPECT_EQ(fam.member(0.0).maps(), constant_affine().maps());
  EXPECT_NEAR(fam.member(0.1).map(0).value(0.0), 0.109, 1e-15);
  EXPECT_EQ(compare_order(fam.member(0.0), fam.member(0.05)), Order::less);
  EXPECT_TRUE(fam.certify_order(0.0, 1e-6));
  try {
    fam.member(0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::family_range);
  }
}

TEST(Family, RangeLeavingClassRejected) {
  // Affine(0.1, 0.8) bumped by -1.2 is no longer increasing
  EXPECT_THROW(MonotoneFamily(constant_affine(), 3.0, -0.4, 0.0), Error);
  EXPECT_THROW(MonotoneFamily(constant_affine(), -1.0, 0.0, 0.1), Error);
}

TEST(Family, CertifiedOrderAgreesWithCompare) {
  const MonotoneFamily fam(golden_multistep(), 1.5, -0.1, 0.1);
  for (double t : {-0.1, -0.05, 0.0, 0.03}) {
    EXPECT_TRUE(fam.certify_order(t, t + 0.01));
    EXPECT_EQ(compare_order(fam.member(t), fam.member(t + 0.01)), Order::less);
  }
}

TEST(Sweep, EmptyGrid) {
  const MonotoneFamily fam(constant_affine(), 1.0, -0.1, 0.1);
  EXPECT_TRUE(sweep(fam, {}, 6, 1000, 1).points.empty());
}

TEST(Sweep, AffineFamilyContinuous) {
  const MonotoneFamily fam(constant_affine(), 1.0, -0.25, 0.25);
  const auto grid = make_grid(-0.245, 0.245, 0.01);
  ASSERT_EQ(grid.size(), 50u);
  auto sr = sweep(fam, grid, 8, 4000, 3);
  double max_jump = 0.0;
  for (std::size_t i = 0; i < sr.points.size(); ++i) {
    const auto& e = sr.points[i].estimate;
    if (i > 0) {
      const auto& prev = sr.points[i - 1].estimate;
      EXPECT_GE(e.certified_up, prev.certified_up);
      EXPECT_LE(e.certified_down, prev.certified_down);
      max_jump = std::max(max_jump, e.certified_up - prev.certified_up);
    }
    // fixed point of psi_tau(0.1 + 0.8x) located by bisection
    const auto f = fam.member(sr.points[i].tau).map(0);
    double lo = 0.0;
    double hi = 1.0;
    for (int k = 0; k < 60; ++k) {
      const double m = 0.5 * (lo + hi);
      (f.value(m) > m ? lo : hi) = m;
    }
    EXPECT_NEAR(e.mc_up, lo, 0.02 + e.radius);
  }
  EXPECT_LE(max_jump, 0.05);
  EXPECT_TRUE(detect_gaps(sr, 0.1).empty());
}

TEST(Sweep, GridValidation) {
  const MonotoneFamily fam(constant_affine(), 1.0, -0.1, 0.1);
  const std::vector<double> decreasing{0.0, -0.01};
  EXPECT_THROW(sweep(fam, decreasing, 4, 200, 1), Error);
  const std::vector<double> outside{0.0, 0.2};
  EXPECT_THROW(sweep(fam, outside, 4, 200, 1), Error);
}

TEST(DetectGaps, ContractAndTolerance) {
  SweepResult sr;
  const double r = hoeffding_radius(10000);
  auto pt = [&](double tau, double up) {
    RegionEstimate e;
    e.mc_up = up;
    e.radius = r;
    return SweepPoint{tau, e};
  };
  sr.points = {pt(0.0, 0.3), pt(0.1, 0.5), pt(0.2, 0.2), pt(0.3, 0.25)};
  const auto gaps = detect_gaps(sr, 0.05);
  ASSERT_EQ(gaps.size(), 1u);
  EXPECT_EQ(gaps[0].tau_lo, 0.0);
  EXPECT_EQ(gaps[0].tau_hi, 0.1);
  EXPECT_NEAR(gaps[0].lower_bound, 0.2 - 2 * r, 1e-15);
  try {
    detect_gaps(sr, 2 * r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::tolerance);
  }
}

TEST(MakeGrid, Examples) {
  const auto g = make_grid(-0.02, 0.02, 0.002);
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g[10], 0.0);
  EXPECT_NEAR(g.back(), 0.02, 1e-15);
  EXPECT_THROW(make_grid(0.0, 1.0, 0.0), Error);
  EXPECT_THROW(make_grid(0.0, 1.0, 1e-6), Error);
}
