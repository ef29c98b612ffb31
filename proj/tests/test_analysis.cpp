#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <vector>

#include "kbe/analysis.hpp"
#include "kbe/experiment.hpp"
#include "kbe/io.hpp"
#include "test_util.hpp"

using namespace kbe;
using namespace kbe::experiment;
using testutil::vec;
namespace fs = std::filesystem;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    differs = differs || x != c.uniform();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_TRUE(differs);
  EXPECT_KBE_ERROR(a.below(0), ErrorCode::InvalidArgument);
}

TEST(Rng, PermutationIsAPermutation) {
  Rng r(1);
  auto p = r.permutation(50);
  std::sort(p.begin(), p.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(p[static_cast<std::size_t>(i)], i);
}

TEST(PairwiseSum, ExactOnIntegersAndOrderFixed) {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[static_cast<std::size_t>(i)] = i;
  EXPECT_EQ(pairwise_sum(v), 499500.0);
  EXPECT_EQ(pairwise_sum(std::span<const double>{}), 0.0);
  std::vector<double> w(1000, 0.1);
  EXPECT_EQ(pairwise_sum(w), pairwise_sum(w));
  EXPECT_NEAR(pairwise_sum(w), 100.0, 1e-12);
}

TEST(Design, LatinHypercubeStratification) {
  const Design d = maximin_lhc(10, 3, 5, 20);
  ASSERT_EQ(d.X.rows(), 10);
  for (int j = 0; j < 3; ++j) {
    std::vector<double> c(d.X.col(j).data(), d.X.col(j).data() + 10);
    std::sort(c.begin(), c.end());
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(c[static_cast<std::size_t>(i)], -1.0 + (2.0 * i + 1.0) / 10, 1e-15);
  }
  EXPECT_NEAR(d.score, min_pairwise_distance(d.X), 1e-15);
}

TEST(Design, DeterministicAndRestartsHelp) {
  const Design a = maximin_lhc(12, 4, 9, 30), b = maximin_lhc(12, 4, 9, 30);
  EXPECT_EQ(a.X, b.X);
  EXPECT_GE(maximin_lhc(12, 4, 9, 30).score, maximin_lhc(12, 4, 9, 1).score);
  EXPECT_KBE_ERROR(maximin_lhc(1, 2, 0), ErrorCode::InvalidArgument);
  EXPECT_KBE_ERROR(maximin_lhc(5, 0, 0), ErrorCode::InvalidArgument);
}

TEST(StandardizedErrors, EdgeCases) {
  const auto se = standardized_errors(vec({1.0, 2.0, 3.0, 0.0}), vec({4.0, 0.0, 0.0, 1.0}), vec({3.0, 2.0, 4.0, 0.5}));
  EXPECT_DOUBLE_EQ(se.s[0], -1.0);
  EXPECT_EQ(se.s[1], 0.0);
  EXPECT_EQ(se.s[2], std::numeric_limits<double>::infinity());
  EXPECT_DOUBLE_EQ(se.s[3], -0.5);
  EXPECT_TRUE(se.flagged);
  EXPECT_KBE_ERROR(standardized_errors(vec({0}), vec({-1}), vec({0})), ErrorCode::InvalidArgument);
  EXPECT_KBE_ERROR(standardized_errors(vec({0}), vec({1, 2}), vec({0})), ErrorCode::DimensionMismatch);
}

TEST(Diagnostics, HandComputedValues) {
  const auto r = diagnostics_from(vec({0, 0, 0, 0}), vec({1, 4, 1, 1}), vec({1, -4, 5, 0}), 1.0);
  EXPECT_DOUBLE_EQ(r.sum_of_variances, 7.0);
  EXPECT_DOUBLE_EQ(r.maspe, (1.0 + 2.0 + 5.0 + 0.0) / 4);
  EXPECT_DOUBLE_EQ(r.rmse, std::sqrt((1.0 + 16.0 + 25.0) / 4));
  EXPECT_DOUBLE_EQ(r.three_sigma_fraction, 0.75);
  EXPECT_FALSE(r.flagged);
  EXPECT_EQ(r.n, 4);
  EXPECT_KBE_ERROR(diagnostics_from(Eigen::VectorXd(0), Eigen::VectorXd(0), Eigen::VectorXd(0), 1.0),
                   ErrorCode::InvalidArgument);
}

TEST(Io, CsvRoundTripIsExact) {
  io::Table t{{"a", "b"}, Eigen::MatrixXd(2, 2)};
  t.data << 0.1, -1e-300, 1.0 / 3.0, 12345.678901234567;
  std::stringstream ss;
  io::write_csv(ss, t);
  const io::Table u = io::read_csv(ss);
  EXPECT_EQ(u.header, t.header);
  EXPECT_EQ(u.data, t.data);
  EXPECT_EQ(u.column("b"), 1);
  EXPECT_KBE_ERROR(u.column("c"), ErrorCode::InvalidArgument);
}

TEST(Io, CsvErrors) {
  std::stringstream bad("a,b\n1,2\n3\n");
  EXPECT_KBE_ERROR(io::read_csv(bad), ErrorCode::InvalidArgument);
  std::stringstream nan("a\nxyz\n");
  EXPECT_KBE_ERROR(io::read_csv(nan), ErrorCode::InvalidArgument);
  std::stringstream empty("");
  EXPECT_KBE_ERROR(io::read_csv(empty), ErrorCode::Io);
  EXPECT_KBE_ERROR(io::read_csv(fs::path("/nonexistent/x.csv")), ErrorCode::Io);
}

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("kbe_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Config, DefaultsAndJsonOverrides) {
  const Config d = load_config("three_d");
  EXPECT_EQ(d.boundaries.size(), 3U);
  EXPECT_EQ(load_config("additive").model, "additive");
  EXPECT_KBE_ERROR(load_config("no_such_model_or_file"), ErrorCode::Io);

  const fs::path dir = temp_dir("config");
  io::write_text(dir / "c.json", R"({"model": "three_d", "kernel": {"theta": [1.0, 0.5, 2.0]}, "prior": {"beta": 0.25, "sigma2": 3.0},
    "boundaries": ["K", {"label": "M2", "normal_indices": [0], "alpha": [0.0], "solver": "three_d.M"}],
    "design": {"n": 7, "seed": 11}})");
  const Config c = load_config((dir / "c.json").string());
  EXPECT_EQ(c.theta, (std::vector<double>{1.0, 0.5, 2.0}));
  EXPECT_EQ(*c.beta, 0.25);
  EXPECT_EQ(c.design_n, 7);
  ASSERT_EQ(c.boundaries.size(), 2U);
  EXPECT_EQ(c.boundaries[1].solver, "three_d.M");
  const Model m = model("three_d");
  const BoundarySet bs = make_set(m, c.boundaries);
  EXPECT_EQ(bs.size(), 2U);

  io::write_text(dir / "bad.json", R"({"model": "three_d", "boundaries": [
    {"label": "A", "normal_indices": [0, 1], "alpha": [0, 0], "solver": "three_d.exact"},
    {"label": "B", "normal_indices": [1, 2], "alpha": [1, 0], "solver": "three_d.exact"}]})");
  EXPECT_KBE_ERROR(make_set(m, load_config((dir / "bad.json").string()).boundaries), ErrorCode::InvalidPair);
  io::write_text(dir / "broken.json", "{not json");
  EXPECT_KBE_ERROR(load_config((dir / "broken.json").string()), ErrorCode::InvalidArgument);
}

TEST(Config, SolverMustDescribeItsPlane) {
  const Model m = model("three_d");
  BoundarySpec s{"K", {1, 2}, {0.0, 1.0}, "three_d.K"};
  EXPECT_KBE_ERROR(make_boundary(m, s), ErrorCode::InvalidArgument);
  s.solver = "other.K";
  EXPECT_KBE_ERROR(make_boundary(m, s), ErrorCode::InvalidArgument);
}

TEST(EmulatorFile, RoundTripReproducesPredictions) {
  const Model m = model("three_d");
  const Config c = default_config("three_d");
  EmulatorFile f{"three_d", make_prior(c, m), c.boundaries, design_points(m, 8, 3, 10), {}};
  f.D = evaluate(m, f.X);
  const fs::path dir = temp_dir("emulator");
  save_emulator(dir / "em.json", f);
  const EmulatorFile g = load_emulator_file(dir / "em.json");
  EXPECT_EQ(g.X, f.X);
  EXPECT_EQ(g.D, f.D);
  EXPECT_EQ(g.prior.kernel.theta(), f.prior.kernel.theta());
  const Eigen::MatrixXd xs = uniform_points(m, 10, 4);
  const Prediction a = build(f).predict(xs), b = build(g).predict(xs);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.var, b.var);

  io::write_text(dir / "bad.json", R"({"format": "something-else"})");
  EXPECT_KBE_ERROR(load_emulator_file(dir / "bad.json"), ErrorCode::InvalidArgument);
  EXPECT_KBE_ERROR(load_emulator_file(dir / "missing.json"), ErrorCode::Io);
}

TEST(Scoping, MomentsAreSampleMeanAndVariance) {
  const Model m = model("additive");
  const auto pm = scoping_moments(m, 50, 9);
  const Eigen::VectorXd y = evaluate(m, uniform_points(m, 50, 9));
  EXPECT_NEAR(pm.beta, y.mean(), 1e-12);
  EXPECT_NEAR(pm.sigma2, (y.array() - y.mean()).square().sum() / 49, 1e-12);
  EXPECT_KBE_ERROR(scoping_moments(m, 1, 9), ErrorCode::InvalidArgument);
}
