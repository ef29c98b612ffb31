#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kbe/multivariate.hpp"
#include "kbe/three_d.hpp"
#include "test_util.hpp"

using namespace kbe;
using testutil::vec;

namespace {

const Eigen::VectorXd lo = Eigen::Vector3d(-3, -1, -3), hi = Eigen::Vector3d(3, 1, 3);

Eigen::VectorXd two_outputs(const Eigen::VectorXd& x) { return Eigen::Vector2d(three_d::eval(x), x[0] * x[2] + 0.3); }

MultiBoundary multi(const Boundary& b) { return {b, two_outputs}; }

Eigen::MatrixXd sigma2x2() { return (Eigen::MatrixXd(2, 2) << 2.0, 0.6, 0.6, 1.0).finished(); }

}  // namespace

TEST(Multivariate, SingleOutputReducesToScalar) {
  const auto k = three_d::prior().kernel;
  const auto bset = three_d::boundaries({"K", "L", "M"});
  const auto scalar = adjust_set(EmulatorPrior(0.4, 2.0, k), bset);
  std::vector<MultiBoundary> mbs;
  for (const Boundary& b : bset.boundaries())
    mbs.push_back({b, [b](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, b.solve(x)); }});
  const MultivariateAdjustedPrior mv(vec({0.4}), OutputCovariance(Eigen::MatrixXd::Constant(1, 1, 2.0)), k, mbs);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto x = testutil::uniform(rng, lo, hi), y = testutil::uniform(rng, lo, hi);
    EXPECT_NEAR(mv.mean(x)[0], scalar.mean(x), 1e-12);
    EXPECT_NEAR(mv.cov(x, y)(0, 0), scalar.cov(x, y), 1e-12);
  }
}

TEST(Multivariate, ExactOnBoundaryForEveryOutput) {
  const auto k = three_d::prior().kernel;
  const auto mv = adjust_single_multivariate(vec({0.0, 0.0}), OutputCovariance(sigma2x2()), k, multi(three_d::boundary_M()));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto x = project(testutil::uniform(rng, lo, hi), three_d::boundary_M()).point;
    EXPECT_LT((mv.mean(x) - two_outputs(x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(mv.var(x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Multivariate, DiagonalSigmaDecouplesOutputs) {
  const auto k = three_d::prior().kernel;
  const Eigen::Matrix2d S = Eigen::Vector2d(2.0, 0.5).asDiagonal();
  const auto mv = adjust_single_multivariate(vec({0.1, -0.2}), OutputCovariance(S), k, multi(three_d::boundary_K()));
  Boundary b1 = three_d::boundary_K();
  b1.set_solver([](const Eigen::VectorXd& x) { return x[0] * x[2] + 0.3; });
  const auto second = adjust_single(EmulatorPrior(-0.2, 0.5, k), b1);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto x = testutil::uniform(rng, lo, hi), y = testutil::uniform(rng, lo, hi);
    const Eigen::MatrixXd c = mv.cov(x, y);
    EXPECT_EQ(c(0, 1), 0.0);
    EXPECT_NEAR(mv.mean(x)[1], second.mean(x), 1e-12);
    EXPECT_NEAR(c(1, 1), second.cov(x, y), 1e-12);
  }
}

TEST(Multivariate, RejectsBadSigma) {
  EXPECT_KBE_ERROR(OutputCovariance((Eigen::MatrixXd(2, 2) << 1, 2, 2, 1).finished()), ErrorCode::NotPositiveSemidefinite);
  EXPECT_KBE_ERROR(OutputCovariance((Eigen::MatrixXd(2, 2) << 1, 0.5, 0.4, 1).finished()), ErrorCode::NotPositiveSemidefinite);
  EXPECT_KBE_ERROR(OutputCovariance(Eigen::MatrixXd(2, 3)), ErrorCode::DimensionMismatch);
  const auto k = three_d::prior().kernel;
  EXPECT_KBE_ERROR(adjust_single_multivariate(vec({0, 0, 0}), OutputCovariance(sigma2x2()), k, multi(three_d::boundary_M())),
                   ErrorCode::DimensionMismatch);
  EXPECT_KBE_ERROR(adjust_single_multivariate(vec({0, 0}), OutputCovariance(sigma2x2()), k, {three_d::boundary_M(), nullptr}),
                   ErrorCode::SolverFailure);
}

TEST(CrossOutput, UncorrelatedOutputIsUnchanged) {
  const auto k = three_d::prior().kernel;
  const Eigen::Matrix2d S = (Eigen::Matrix2d() << 2.0, 0.0, 0.0, 1.5).finished();
  const Boundary K = three_d::boundary_K();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 10; ++i) {
    const auto x = testutil::uniform(rng, lo, hi), y = testutil::uniform(rng, lo, hi);
    const auto r = cross_output_adjust(vec({0.3, 0.7}), OutputCovariance(S), k, K, K.solver(), 1, 1, x, y);
    EXPECT_DOUBLE_EQ(r.expectation, 0.7);
    EXPECT_NEAR(r.covariance, 1.5 * k.corr(x - y), 1e-14);
  }
}

TEST(CrossOutput, KnownOutputMatchesUnivariate) {
  const auto k = three_d::prior().kernel;
  const Boundary K = three_d::boundary_K();
  const auto uni = adjust_single(EmulatorPrior(0.3, 2.0, k), K);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto x = testutil::uniform(rng, lo, hi), y = testutil::uniform(rng, lo, hi);
    const auto r = cross_output_adjust(vec({0.3, 0.7}), OutputCovariance(sigma2x2()), k, K, K.solver(), 0, 0, x, y);
    EXPECT_NEAR(r.expectation, uni.mean(x), 1e-12);
    EXPECT_NEAR(r.covariance, uni.cov(x, y), 1e-12);
  }
}

// Condition jointly-Gaussian (f0 on a fine set of plane points, f1(x), f1(y))
// directly; with the plane densely sampled along its free direction the
// result approaches the analytic cross-output update.
TEST(CrossOutput, AgreesWithDirectConditioning) {
  const auto k = CorrelationKernel::gaussian(vec({1.0, 0.8}));
  const Boundary b(2, "B", {1}, vec({0.0}), [](const Eigen::VectorXd& x) { return std::sin(x[0]); });
  const Eigen::Matrix2d S = sigma2x2();
  const Eigen::Vector2d mu(0.1, -0.4);
  const int n = 161;
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < n; ++i) pts.push_back(vec({-8.0 + 16.0 * i / (n - 1), 0.0}));
  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd resid(n);
  for (int i = 0; i < n; ++i) {
    resid[i] = b.solve(pts[static_cast<std::size_t>(i)]) - mu[0];
    for (int j = 0; j < n; ++j) V(i, j) = S(0, 0) * k.corr(pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]);
  }
  V.diagonal().array() += 1e-10;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
  const Eigen::VectorXd x = vec({0.4, 0.5}), y = vec({-0.3, -0.2});
  Eigen::VectorXd cx(n), cy(n);
  for (int i = 0; i < n; ++i) {
    cx[i] = S(1, 0) * k.corr(x - pts[static_cast<std::size_t>(i)]);
    cy[i] = S(1, 0) * k.corr(y - pts[static_cast<std::size_t>(i)]);
  }
  const double m_direct = mu[1] + cx.dot(ldlt.solve(resid));
  const double c_direct = S(1, 1) * k.corr(x - y) - cx.dot(ldlt.solve(cy));
  const auto r = cross_output_adjust(mu, OutputCovariance(S), k, b, b.solver(), 1, 1, x, y);
  EXPECT_NEAR(r.expectation, m_direct, 1e-5);
  EXPECT_NEAR(r.covariance, c_direct, 1e-5);
}

TEST(CrossOutput, FurtherAdjustmentUnsupported) {
  const auto k = three_d::prior().kernel;
  const Boundary K = three_d::boundary_K();
  const CrossOutputAdjustedPrior cp(vec({0, 0}), OutputCovariance(sigma2x2()), k, K, K.solver());
  EXPECT_KBE_ERROR(cp.adjust(three_d::boundary_M()), ErrorCode::Unsupported);
  EXPECT_KBE_ERROR(cross_output_adjust(vec({0, 0}), OutputCovariance(sigma2x2()), k, K, K.solver(), 2, 0, vec({0, 0, 0}),
                                       vec({0, 0, 0})),
                   ErrorCode::IndexOutOfRange);
}
