#pragma once

// Multi-output emulators with a separable covariance Sigma (x) r(x - x').
//
// Boundaries on which every output is known reuse the univariate machinery:
// the adjustment weights depend only on the correlation function, so the
// scalar expansion is computed once and applied to vector-valued residuals.
// A boundary on which only output 0 is known is handled by
// cross_output_adjust; the result no longer has product form, so nothing can
// be chained after it.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "kbe/engine.hpp"

namespace kbe {

struct OutputCovariance {
  Eigen::MatrixXd Sigma;

  explicit OutputCovariance(Eigen::MatrixXd s) : Sigma(std::move(s)) { check(); }

  int q() const { return static_cast<int>(Sigma.rows()); }

  void check() const {
    if (Sigma.rows() == 0 || Sigma.rows() != Sigma.cols())
      throw Error(ErrorCode::DimensionMismatch, "output covariance must be square and nonempty");
    if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Sigma.cwiseAbs().maxCoeff()))
      throw Error(ErrorCode::NotPositiveSemidefinite, "output covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma, Eigen::EigenvaluesOnly);
    const double tr = Sigma.trace();
    if (es.eigenvalues().minCoeff() < -1e-10 * std::abs(tr))
      throw Error(ErrorCode::NotPositiveSemidefinite, "output covariance has a negative eigenvalue");
  }
};

/// All q outputs of the model on a boundary.
using VectorSolver = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct MultiBoundary {
  Boundary geometry;  // its scalar solver is ignored
  VectorSolver solver;
};

class MultivariateAdjustedPrior {
 public:
  MultivariateAdjustedPrior(Eigen::VectorXd prior_mean, OutputCovariance Sigma, CorrelationKernel kernel,
                            std::vector<MultiBoundary> boundaries)
      : mean0_(std::move(prior_mean)), Sigma_(std::move(Sigma)), weights_(make_weights(kernel, boundaries, mean0_)) {
    if (mean0_.size() != Sigma_.q()) throw Error(ErrorCode::DimensionMismatch, "prior mean and Sigma sizes differ");
    const auto& chain_order = weights_.boundaries().chain_order();
    for (int i : chain_order) solvers_.push_back(boundaries[static_cast<std::size_t>(i)].solver);
  }

  int q() const { return Sigma_.q(); }
  const OutputCovariance& output_covariance() const { return Sigma_; }

  Eigen::VectorXd mean(const Eigen::VectorXd& x) const {
    const auto e = weights_.expand(x);
    Eigen::VectorXd m = mean0_;
    for (std::size_t s = 1; s < e.weight.size(); ++s) {
      if (e.weight[s] == 0.0) continue;
      const auto b = static_cast<std::size_t>(std::countr_zero(s));
      const Eigen::VectorXd f = solvers_[b](e.points[s]);
      if (f.size() != q()) throw Error(ErrorCode::SolverFailure, "vector solver returned the wrong number of outputs");
      m += (std::popcount(s) % 2 == 1 ? 1.0 : -1.0) * e.weight[s] * (f - mean0_);
    }
    return m;
  }

  Eigen::MatrixXd cov(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return Sigma_.Sigma * weights_.cov(x, y);
  }

  Eigen::MatrixXd var(const Eigen::VectorXd& x) const { return cov(x, x); }

  /// Correlation-only part of the adjustment (unit variance).
  const BoundaryAdjustedPrior& scalar_part() const { return weights_; }

 private:
  static BoundaryAdjustedPrior make_weights(const CorrelationKernel& kernel, const std::vector<MultiBoundary>& bs,
                                            const Eigen::VectorXd& mean0) {
    if (mean0.size() == 0) throw Error(ErrorCode::InvalidArgument, "no outputs");
    std::vector<Boundary> geo;
    for (const auto& mb : bs) {
      if (!mb.solver) throw Error(ErrorCode::SolverFailure, "boundary '" + mb.geometry.label() + "' has no solver");
      Boundary b = mb.geometry;
      // Only used by the degenerate-probe fallback, which then checks output 0.
      b.set_solver([s = mb.solver](const Eigen::VectorXd& x) { return s(x)[0]; });
      geo.push_back(std::move(b));
    }
    return BoundaryAdjustedPrior(EmulatorPrior(mean0[0], 1.0, kernel), validate_set(std::move(geo), kernel.dim()));
  }

  Eigen::VectorXd mean0_;
  OutputCovariance Sigma_;
  BoundaryAdjustedPrior weights_;
  std::vector<VectorSolver> solvers_;
};

inline MultivariateAdjustedPrior adjust_single_multivariate(Eigen::VectorXd prior_mean, OutputCovariance Sigma,
                                                            CorrelationKernel kernel, MultiBoundary b) {
  return MultivariateAdjustedPrior(std::move(prior_mean), std::move(Sigma), std::move(kernel), {std::move(b)});
}

struct CrossOutputResult {
  double expectation;  ///< E_K[f_v(x)]
  double covariance;   ///< Cov_K[f_v(x), f_w(x')]
};

/// Adjust by a boundary on which only output 0 is known. `f0` gives output 0
/// on the boundary.
inline CrossOutputResult cross_output_adjust(const Eigen::VectorXd& prior_mean, const OutputCovariance& Sigma,
                                             const CorrelationKernel& kernel, const Boundary& b, const Solver& f0,
                                             int v, int w, const Eigen::VectorXd& x, const Eigen::VectorXd& x2) {
  const Eigen::MatrixXd& S = Sigma.Sigma;
  if (v < 0 || w < 0 || v >= Sigma.q() || w >= Sigma.q())
    throw Error(ErrorCode::IndexOutOfRange, "output index out of range");
  if (prior_mean.size() != Sigma.q()) throw Error(ErrorCode::DimensionMismatch, "prior mean and Sigma sizes differ");
  if (!(S(0, 0) > 0.0)) throw Error(ErrorCode::InvalidArgument, "Sigma_11 must be positive");
  const Projection px = project(x, b);
  const Projection py = project(x2, b);
  const IndexSet& J = b.normals();
  const IndexSet P = b.free_directions();
  const double rJa = kernel.corr_subset(J, px.displacement);
  const double rJb = kernel.corr_subset(J, py.displacement);
  const double rJd = kernel.corr_subset(J, px.displacement - py.displacement);
  const double rP = kernel.corr_subset(P, x - x2);
  CrossOutputResult out{};
  out.expectation = prior_mean[v] + S(v, 0) / S(0, 0) * rJa * (f0(px.point) - prior_mean[0]);
  out.covariance = (S(v, w) * rJd - S(v, 0) * S(w, 0) / S(0, 0) * rJa * rJb) * rP;
  return out;
}

/// Beliefs after a partial-output boundary. Further boundary adjustment is
/// not available because the covariance has lost its product form.
class CrossOutputAdjustedPrior {
 public:
  CrossOutputAdjustedPrior(Eigen::VectorXd prior_mean, OutputCovariance Sigma, CorrelationKernel kernel, Boundary b,
                           Solver f0)
      : mean0_(std::move(prior_mean)), Sigma_(std::move(Sigma)), kernel_(std::move(kernel)), b_(std::move(b)),
        f0_(std::move(f0)) {}

  double mean(int v, const Eigen::VectorXd& x) const {
    return cross_output_adjust(mean0_, Sigma_, kernel_, b_, f0_, v, v, x, x).expectation;
  }
  double cov(int v, int w, const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    return cross_output_adjust(mean0_, Sigma_, kernel_, b_, f0_, v, w, x, y).covariance;
  }

  [[noreturn]] void adjust(const Boundary& next) const {
    throw Error(ErrorCode::Unsupported,
                "cannot adjust by '" + next.label() + "' after a partial-output boundary: the adjusted covariance is "
                "no longer separable, so the analytic update does not apply");
  }

 private:
  Eigen::VectorXd mean0_;
  OutputCovariance Sigma_;
  CorrelationKernel kernel_;
  Boundary b_;
  Solver f0_;
};

}  // namespace kbe
