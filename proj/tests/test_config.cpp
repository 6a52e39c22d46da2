#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace skewdyn;
using namespace testsys;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(json::parse(text));
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::invalid_argument;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(json::parse(text));
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, GoldenMeanParses) {
  const auto cfg = load_config(SKEWDYN_CONFIG_DIR "/golden_mean_affine.json");
  ASSERT_TRUE(cfg.chain);
  EXPECT_NEAR(cfg.chain->stationary()[0], 0.75, 1e-12);
  EXPECT_NEAR(cfg.chain->stationary()[1], 0.25, 1e-12);
  ASSERT_TRUE(cfg.product);
  EXPECT_EQ(cfg.product->left(), 1);
  EXPECT_EQ(cfg.product->words().size(), 5u);
  EXPECT_EQ(cfg.product->map_for(std::vector<Symbol>{1, 0, 1}).form(), MapForm::bumped_affine);
  EXPECT_EQ(cfg.analysis.grid.size(), 11u);
}

TEST(Config, AllShippedConfigsParse) {
  for (const char* name : {"golden_mean_affine", "constant_affine", "plateau_family", "continuous_geometric"}) {
    EXPECT_NO_THROW(load_config(std::string(SKEWDYN_CONFIG_DIR "/") + name + ".json")) << name;
  }
}

TEST(Config, FieldAnchoredErrors) {
  const std::string base = R"("base": {"alphabet_size": 2, "transitions": [[1,1],[1,1]]})";
  EXPECT_EQ(kind_of("{}"), ErrorKind::config);
  EXPECT_NE(message_of("{}").find("$.base"), std::string::npos);
  const auto bad_map = "{" + base + R"(, "product": {"map": {"form": "affine", "parameters": [0.1, "x"]}}})";
  EXPECT_NE(message_of(bad_map).find("$.product.map.parameters[1]"), std::string::npos);
  const auto bad_form = "{" + base + R"(, "product": {"map": {"form": "cubic", "parameters": [0.1, 0.8]}}})";
  EXPECT_NE(message_of(bad_form).find("$.product.map.form"), std::string::npos);
  const auto out_of_class = "{" + base + R"(, "product": {"map": {"form": "affine", "parameters": [0.1, 0.95]}}})";
  EXPECT_EQ(kind_of(out_of_class), ErrorKind::config);
  const auto not_transitive = R"({"base": {"alphabet_size": 2, "transitions": [[1,0],[0,1]]}})";
  EXPECT_EQ(kind_of(not_transitive), ErrorKind::invalid_matrix);
  EXPECT_NE(message_of(not_transitive).find("$.base.transitions"), std::string::npos);
  const auto wide = "{" + base + R"(, "product": {"window": [6, 6], "assignment": []}})";
  EXPECT_EQ(kind_of(wide), ErrorKind::resource_limit);
  const auto bad_symbol = "{" + base +
                          R"(, "product": {"window": [0, 0], "assignment": [{"word": [3], "map": {"form": "affine", "parameters": [0.1, 0.8]}}]}})";
  EXPECT_NE(message_of(bad_symbol).find("$.product.assignment[0].word[0]"), std::string::npos);
  const auto grid = "{" + base + R"(, "analysis": {"grid": "0:1"}})";
  EXPECT_NE(message_of(grid).find("$.analysis.grid"), std::string::npos);
}

TEST(Config, ProductRoundTrip) {
  const auto f = golden_multistep();
  const json j = {{"base", {{"alphabet_size", 2}, {"transitions", {{1, 1}, {1, 0}}}}}, {"product", to_json(f)}};
  const auto cfg = parse_config(j);
  EXPECT_EQ(cfg.product->maps(), f.maps());
}

TEST(Config, CertificateRoundTrip) {
  const auto f = golden_multistep();
  const WitnessSearch s(f, 8);
  SplitMix64 gen(1);
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    const auto p = sample_point(s, 3, static_cast<std::uint64_t>(t));
    const auto c = s.classify(p);
    if (!c.witness) continue;
    const auto cert = make_certificate(f, *c.witness);
    const auto back = certificate_from_json(json::parse(to_json(cert).dump()), f.base());
    EXPECT_EQ(back.graph.values(), cert.graph.values());
    EXPECT_EQ(back.fingerprint, cert.fingerprint);
    EXPECT_TRUE(replay_certificate(f, back, p));
    ++checked;
  }
  EXPECT_GT(checked, 20);
}

TEST(Points, ParseAndFormat) {
  std::istringstream in("# comment\nwindow,x\n-2 1 2 1 1,0.25\n");
  const auto pts = read_points_csv(in, full2());
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts[0].window, SymbolWindow(-2, {0, 1, 0, 0}));
  EXPECT_EQ(pts[0].x, 0.25);
  EXPECT_EQ(format_window(pts[0].window), "-2 1 2 1 1");
  std::istringstream bad("window,x\n-2 1 2 2,0.5\n");
  EXPECT_THROW(read_points_csv(bad, golden()), Error);
  std::istringstream header("w,x\n");
  EXPECT_THROW(read_points_csv(header, golden()), Error);
}

TEST(Csv, SeventeenDigits) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(0.5), "0.5");
  SweepResult sr;
  sr.points.push_back({0.0, RegionEstimate{0.1, 0.2, 0.3, 0.4, 0.3, 0.01, 1000, 5, 9}});
  std::ostringstream out;
  write_sweep_csv(out, sr, 9, 5, 1000);
  EXPECT_EQ(out.str(),
            "# seed=9 depth=5 samples=1000\n"
            "tau,certified_up,certified_down,mc_up,mc_down,mc_unknown,radius,n,M,seed\n"
            "0,0.10000000000000001,0.20000000000000001,0.29999999999999999,0.40000000000000002,"
            "0.29999999999999999,0.01,1000,5,9\n");
}
