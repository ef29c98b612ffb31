#pragma once

// Brute-force reference: an ordinary dense Bayes linear update on a finite
// design made of the training runs plus their (sequential) projections onto
// the known boundaries, together with the projections of the prediction
// targets. No boundary-specific algebra is used here.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kbe/engine.hpp"
#include "kbe/error.hpp"
#include "kbe/geometry.hpp"
#include "kbe/log.hpp"

namespace kbe {

enum class Provenance { Training, BoundaryProjection, BoundaryGrid };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Training: return "training";
    case Provenance::BoundaryProjection: return "boundary-projection";
    case Provenance::BoundaryGrid: return "boundary-grid";
  }
  return "?";
}

struct AugmentedDesign {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> values;
  std::vector<Provenance> provenance;
  double dedup_tol = 1e-12;

  std::size_t size() const { return points.size(); }

  std::size_t count(Provenance p) const {
    std::size_t n = 0;
    for (auto q : provenance) n += (q == p);
    return n;
  }

  /// Appends unless a point within dedup_tol (max norm) is already present.
  bool add(const Eigen::VectorXd& x, double v, Provenance p) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SolverFailure, "non-finite value in augmented design");
    for (const auto& y : points) {
      if ((x - y).cwiseAbs().maxCoeff() <= dedup_tol) return false;
    }
    points.push_back(x);
    values.push_back(v);
    provenance.push_back(p);
    return true;
  }
};

/// Training runs plus, for every nonempty subset of the chain, the sequential
/// projections of the training inputs and of the targets onto that subset
/// (highest chain position applied first), valued by the boundary applied
/// last.
inline AugmentedDesign build_augmented(const Eigen::MatrixXd& X_D, const Eigen::VectorXd& D, const BoundarySet& bset,
                                       const Eigen::MatrixXd& targets, double dedup_tol = 1e-12) {
  if (X_D.rows() != D.size()) throw Error(ErrorCode::DimensionMismatch, "design and outputs differ in length");
  AugmentedDesign aug;
  aug.dedup_tol = dedup_tol;
  for (Eigen::Index i = 0; i < X_D.rows(); ++i) aug.add(X_D.row(i).transpose(), D[i], Provenance::Training);
  const std::vector<Boundary> chain = bset.chain();
  const std::size_t h = chain.size();
  if (h > 16) throw Error(ErrorCode::Unsupported, "too many boundaries for the augmented design");
  auto add_projections = [&](const Eigen::MatrixXd& xs) {
    for (std::size_t s = 1; s < (std::size_t{1} << h); ++s) {
      std::vector<Boundary> sub;
      for (std::size_t b = 0; b < h; ++b) {
        if (s & (std::size_t{1} << b)) sub.push_back(chain[b]);
      }
      for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        const Eigen::VectorXd y = sequential_project(xs.row(i).transpose(), sub);
        aug.add(y, sub.front().solve(y), Provenance::BoundaryProjection);
      }
    }
  };
  add_projections(X_D);
  add_projections(targets);
  return aug;
}

/// Adds m random points on each boundary, free coordinates uniform in the box
/// [lo, hi].
inline void add_boundary_grid(AugmentedDesign& aug, const BoundarySet& bset, int m, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const Boundary& b : bset.boundaries()) {
    for (int k = 0; k < m; ++k) {
      Eigen::VectorXd y(b.dim());
      for (int j = 0; j < b.dim(); ++j) y[j] = lo[j] + (hi[j] - lo[j]) * detail::uniform01(rng);
      y = project(y, b).point;
      aug.add(y, b.solve(y), Provenance::BoundaryGrid);
    }
  }
}

struct NaiveResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  std::size_t factor_size = 0;
  double factor_seconds = 0.0;
  double total_seconds = 0.0;
  double jitter = 0.0;
};

/// Dense update of the constant-mean prior by every point of aug.
inline NaiveResult naive_update(const EmulatorPrior& prior, const AugmentedDesign& aug, const Eigen::MatrixXd& xs) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const auto n = static_cast<Eigen::Index>(aug.size());
  NaiveResult out;
  out.factor_size = aug.size();
  out.mean = Eigen::VectorXd::Constant(xs.rows(), prior.beta);
  out.var = Eigen::VectorXd::Constant(xs.rows(), prior.sigma2);
  if (n == 0) return out;
  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    resid[i] = aug.values[static_cast<std::size_t>(i)] - prior.beta;
    for (Eigen::Index j = 0; j <= i; ++j)
      V(i, j) = V(j, i) = prior.cov(aug.points[static_cast<std::size_t>(i)], aug.points[static_cast<std::size_t>(j)]);
  }
  const auto tf = clock::now();
  Eigen::LLT<Eigen::MatrixXd> llt;
  bool ok = false;
  for (double delta : {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    Eigen::MatrixXd Vj = V;
    Vj.diagonal().array() += delta * prior.sigma2;
    llt.compute(Vj);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().minCoeff() > 1e-7 * std::sqrt(prior.sigma2)) {
      out.jitter = delta;
      ok = true;
      break;
    }
  }
  out.factor_seconds = std::chrono::duration<double>(clock::now() - tf).count();
  if (!ok) throw Error(ErrorCode::SingularMatrix, "augmented covariance is singular beyond the jitter ladder");
  const Eigen::VectorXd w = llt.solve(resid);
  for (Eigen::Index t = 0; t < xs.rows(); ++t) {
    const Eigen::VectorXd x = xs.row(t).transpose();
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k[i] = prior.cov(x, aug.points[static_cast<std::size_t>(i)]);
    out.mean[t] = prior.beta + k.dot(w);
    out.var[t] = prior.sigma2 - llt.matrixL().solve(k).squaredNorm();
  }
  out.total_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return out;
}

}  // namespace kbe
