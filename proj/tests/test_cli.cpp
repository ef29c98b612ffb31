#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "kbe/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(KBE_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("kbe_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("predict").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, ValidateBuiltinSet) {
  const CliResult r = run("validate --config three_d");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("K L ParallelNested"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("valid"), std::string::npos);
}

TEST(Cli, ValidateRejectsOverlappingPair) {
  const fs::path d = scratch("validate");
  kbe::io::write_text(d / "bad.json", R"({"model": "three_d", "boundaries": [
    {"label": "A", "normal_indices": [0, 1], "alpha": [0, 0], "solver": "three_d.exact"},
    {"label": "B", "normal_indices": [1, 2], "alpha": [1, 0], "solver": "three_d.exact"}]})");
  EXPECT_EQ(run("validate --config " + (d / "bad.json").string()).code, 2);
  EXPECT_EQ(run("validate --config " + (d / "missing.json").string()).code, 4);
}

TEST(Cli, DesignIsDeterministic) {
  const CliResult a = run("design --config three_d --train-n 12 --seed 5");
  const CliResult b = run("design --config three_d --train-n 12 --seed 5");
  const CliResult c = run("design --config three_d --train-n 12 --seed 6");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(a.out.rfind("x0,x1,x2\n", 0), 0U);
}

TEST(Cli, FitThenPredictInterpolates) {
  const fs::path d = scratch("fit");
  const std::string cfg = " --config three_d";
  ASSERT_EQ(run("design" + cfg + " --train-n 8 --out " + (d / "X.csv").string()).code, 0);
  ASSERT_EQ(run("run-model" + cfg + " --input " + (d / "X.csv").string() + " --out " + (d / "y.csv").string()).code, 0);
  ASSERT_EQ(run("fit" + cfg + " --design " + (d / "X.csv").string() + " --outputs " + (d / "y.csv").string() +
                " --out " + (d / "em.json").string())
                .code,
            0);
  ASSERT_EQ(run("predict --emulator " + (d / "em.json").string() + " --points " + (d / "X.csv").string() + " --out " +
                (d / "p.csv").string())
                .code,
            0);
  const auto y = kbe::io::read_csv(d / "y.csv");
  const auto p = kbe::io::read_csv(d / "p.csv");
  ASSERT_EQ(p.data.rows(), y.data.rows());
  for (Eigen::Index i = 0; i < p.data.rows(); ++i) {
    EXPECT_NEAR(p.data(i, 0), y.data(i, 0), 1e-6);
    EXPECT_LT(p.data(i, 1), 1e-6);
  }
  EXPECT_EQ(run("predict --emulator " + (d / "nope.json").string() + " --points " + (d / "X.csv").string()).code, 4);
}

TEST(Cli, CompareOracleWritesTables) {
  const fs::path d = scratch("oracle");
  const CliResult r = run("compare-oracle --config three_d --train-n 6 --points 10 --out " + d.string());
  EXPECT_EQ(r.code, 0);
  const auto s = kbe::io::read_csv(d / "summary.csv");
  ASSERT_GE(s.data.rows(), 8);
  const int size = s.column("oracle_size"), expected = s.column("expected_size"), rel = s.column("max_rel_mean_diff");
  for (Eigen::Index i = 0; i < s.data.rows(); ++i) {
    if (s.data(i, expected) >= 0) EXPECT_EQ(s.data(i, size), s.data(i, expected));
    EXPECT_LT(s.data(i, rel), 1e-6);
  }
  EXPECT_TRUE(fs::exists(d / "timing.csv"));
  EXPECT_TRUE(fs::exists(d / "points_config.csv"));
}

TEST(Cli, ReproduceFigureGrid) {
  const fs::path d = scratch("fig");
  EXPECT_EQ(run("reproduce --figure fig1 --out " + d.string()).code, 0);
  EXPECT_TRUE(fs::exists(d / "fig1.csv"));
  EXPECT_EQ(run("reproduce --figure fig9 --out " + d.string()).code, 2);
}
