#pragma once

// Boundary-adjusted emulator construction.
//
// Boundaries are applied one at a time in the set's chain order. For a new
// boundary L and the beliefs (m, c) adjusted by the boundaries before it,
//
//   lambda(x)    = c(x, y0) / c(x^L, y0)        for a probe point y0 on L,
//   m_new(x)     = m(x) + lambda(x) (f(x^L) - m(x^L)),
//   c_new(x, x') = c(x, x') - lambda(x) c(x^L, x'^L) lambda(x').
//
// Unrolling the recursion over h boundaries gives, for every point x, an
// expansion over subsets S of the chain: a weight w_S(x) and the sequential
// projection x_S of x onto the members of S (highest chain index first). Then
//
//   c_h(x, x') = sigma^2 sum_S (-1)^|S| w_S(x) w_S(x') r(x_S - x'_S),
//   m_h(x)     = beta - sum_{S != {}} (-1)^|S| w_S(x) (f(x_S) - beta),
//
// so once a point's expansion is known every covariance costs 2^h kernel
// evaluations. Expansions are built bottom-up; the weights come from the
// lambda ratios above, evaluated through lower-level expansions.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kbe/error.hpp"
#include "kbe/geometry.hpp"
#include "kbe/kernel.hpp"
#include "kbe/log.hpp"

namespace kbe {

/// Constant prior mean beta, variance sigma2 and a product correlation kernel.
struct EmulatorPrior {
  double beta = 0.0;
  double sigma2 = 1.0;
  CorrelationKernel kernel;

  EmulatorPrior(double beta_, double sigma2_, CorrelationKernel kernel_)
      : beta(beta_), sigma2(sigma2_), kernel(std::move(kernel_)) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw Error(ErrorCode::InvalidArgument, "prior variance must be positive");
    if (!std::isfinite(beta)) throw Error(ErrorCode::InvalidArgument, "prior mean must be finite");
  }

  int dim() const { return kernel.dim(); }
  double cov(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const {
    return sigma2 * kernel.corr(x, y);
  }
};

struct AdjustOptions {
  /// Probe denominators below eps * sigma2 are treated as zero.
  double denominator_eps = 1e-12;
  /// Extra probes tried after the default one fails.
  int random_probes = 8;
  /// |f(x^L) - m(x^L)| below this means L adds nothing at x^L.
  double resolved_tol = 1e-10;
  std::uint64_t probe_seed = 0x6b62652d70726f62ULL;
};

namespace detail {

/// Memoized boundary solver values keyed by (boundary, exact point bits).
class SolverCache {
 public:
  std::optional<double> find(int boundary, const Eigen::VectorXd& x) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = values_.find(key(boundary, x));
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }
  void insert(int boundary, const Eigen::VectorXd& x, double v) {
    std::lock_guard<std::mutex> lock(mu_);
    values_.emplace(key(boundary, x), v);
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return values_.size();
  }

 private:
  static std::string key(int boundary, const Eigen::VectorXd& x) {
    std::string k(sizeof(int) + sizeof(double) * static_cast<std::size_t>(x.size()), '\0');
    std::memcpy(k.data(), &boundary, sizeof(int));
    std::memcpy(k.data() + sizeof(int), x.data(), sizeof(double) * static_cast<std::size_t>(x.size()));
    return k;
  }
  mutable std::mutex mu_;
  std::unordered_map<std::string, double> values_;
};

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Prior beliefs adjusted by every boundary of a validated set.
class BoundaryAdjustedPrior {
 public:
  /// Weights and sequential projections indexed by subset bitmask; bit i
  /// stands for the i-th boundary in chain order.
  struct Expansion {
    std::vector<double> weight;
    std::vector<Eigen::VectorXd> points;
    int levels() const { return std::countr_zero(weight.size()); }
  };

  BoundaryAdjustedPrior(EmulatorPrior prior, BoundarySet bset, AdjustOptions opts = {})
      : prior_(std::move(prior)), bset_(std::move(bset)), opts_(opts), cache_(std::make_shared<detail::SolverCache>()) {
    if (!bset_.empty() && bset_.dim() != prior_.dim())
      throw Error(ErrorCode::DimensionMismatch, "boundary set and prior have different input dimensions");
    chain_ = bset_.chain();
    if (chain_.size() > 20) throw Error(ErrorCode::Unsupported, "more than 20 boundaries");
  }

  const EmulatorPrior& prior() const { return prior_; }
  const BoundarySet& boundaries() const { return bset_; }
  const std::vector<Boundary>& chain() const { return chain_; }
  int levels() const { return static_cast<int>(chain_.size()); }
  int dim() const { return prior_.dim(); }

  Expansion expand(const Eigen::Ref<const Eigen::VectorXd>& x) const { return expand(x, levels()); }

  /// Expansion after the first `level` boundaries of the chain only.
  Expansion expand(const Eigen::Ref<const Eigen::VectorXd>& x, int level) const {
    check_dim(x, dim());
    if (level < 0 || level > levels()) throw Error(ErrorCode::InvalidArgument, "level out of range");
    return expand_impl(x, level);
  }

  double mean(const Eigen::Ref<const Eigen::VectorXd>& x) const { return mean_from(expand(x)); }
  double cov(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const {
    return cov_from(expand(x), expand(y));
  }
  double var(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Expansion e = expand(x);
    return cov_from(e, e);
  }

  /// Mean and covariance after the first `level` boundaries.
  double mean(const Eigen::Ref<const Eigen::VectorXd>& x, int level) const { return mean_from(expand(x, level)); }
  double cov(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
             int level) const {
    return cov_from(expand(x, level), expand(y, level));
  }

  double mean_from(const Expansion& e) const {
    double acc = 0.0;
    for (std::size_t s = 1; s < e.weight.size(); ++s) {
      if (e.weight[s] == 0.0) continue;
      const int boundary = std::countr_zero(s);
      const double df = boundary_value(boundary, e.points[s]) - prior_.beta;
      acc += (std::popcount(s) % 2 == 1 ? 1.0 : -1.0) * e.weight[s] * df;
    }
    return prior_.beta + acc;
  }

  double cov_from(const Expansion& a, const Expansion& b) const {
    if (a.weight.size() != b.weight.size()) throw Error(ErrorCode::InvalidArgument, "expansions of different depth");
    double acc = 0.0;
    for (std::size_t s = 0; s < a.weight.size(); ++s) {
      const double w = a.weight[s] * b.weight[s];
      if (w == 0.0) continue;
      const double term = w * prior_.kernel.corr(a.points[s], b.points[s]);
      acc += (std::popcount(s) % 2 == 0) ? term : -term;
    }
    return prior_.sigma2 * acc;
  }

  /// lambda for chain boundary `level` (1-based) at x, using an explicit
  /// probe point on that boundary. Exposed so the probe-independence of the
  /// ratio can be checked directly.
  double lambda_with_probe(int level, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& probe) const {
    if (level < 1 || level > levels()) throw Error(ErrorCode::InvalidArgument, "level out of range");
    const Boundary& L = chain_[static_cast<std::size_t>(level - 1)];
    if (!L.contains(probe)) throw Error(ErrorCode::InvalidArgument, "probe does not lie on the boundary");
    const Eigen::VectorXd xl = project(x, L).point;
    const Expansion ey = expand_impl(probe, level - 1);
    const double den = cov_from(expand_impl(xl, level - 1), ey);
    if (den == 0.0) throw Error(ErrorCode::DegenerateDenominator, "zero denominator at the given probe");
    return cov_from(expand_impl(x, level - 1), ey) / den;
  }

  /// Solver value of the chain boundary with the given index, memoized.
  double boundary_value(int chain_index, const Eigen::VectorXd& x) const {
    if (auto hit = cache_->find(chain_index, x)) return *hit;
    const Boundary& b = chain_[static_cast<std::size_t>(chain_index)];
    double v = 0.0;
    try {
      v = b.solve(x);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SolverFailure, "boundary '" + b.label() + "': " + e.what());
    }
    if (!std::isfinite(v)) throw Error(ErrorCode::SolverFailure, "boundary '" + b.label() + "' returned non-finite");
    cache_->insert(chain_index, x, v);
    return v;
  }

  std::size_t cached_solver_values() const { return cache_->size(); }

 private:
  Expansion expand_impl(const Eigen::VectorXd& x, int level) const {
    if (level == 0) return Expansion{{1.0}, {x}};
    Expansion prev = expand_impl(x, level - 1);
    const Boundary& L = chain_[static_cast<std::size_t>(level - 1)];
    const Projection pr = project(x, L);
    double lam = 1.0;
    Expansion on_plane;
    if (pr.displacement.isZero(0.0)) {
      on_plane = prev;
    } else {
      on_plane = expand_impl(pr.point, level - 1);
      lam = lambda(level, prev, pr.point, on_plane);
    }
    const std::size_t half = prev.weight.size();
    Expansion out;
    out.weight.resize(2 * half);
    out.points.resize(2 * half);
    for (std::size_t s = 0; s < half; ++s) {
      out.weight[s] = prev.weight[s];
      out.points[s] = std::move(prev.points[s]);
      out.weight[s + half] = lam * on_plane.weight[s];
      out.points[s + half] = std::move(on_plane.points[s]);
    }
    return out;
  }

  double lambda(int level, const Expansion& at_x, const Eigen::VectorXd& xl, const Expansion& at_xl) const {
    const Boundary& L = chain_[static_cast<std::size_t>(level - 1)];
    const double eps = opts_.denominator_eps * prior_.sigma2;
    const IndexSet free = L.free_directions();
    const Eigen::VectorXd& theta = prior_.kernel.theta();

    auto attempt = [&](const Eigen::VectorXd& probe) -> std::optional<double> {
      const Expansion ey = expand_impl(probe, level - 1);
      const double den = cov_from(at_xl, ey);
      if (!(std::abs(den) > eps)) return std::nullopt;
      return cov_from(at_x, ey) / den;
    };

    Eigen::VectorXd probe = xl;
    if (!free.empty()) probe[free.front()] += theta[free.front()];
    if (auto v = attempt(probe)) return *v;

    if (!free.empty()) {
      std::mt19937_64 rng(opts_.probe_seed + static_cast<std::uint64_t>(level));
      for (int k = 0; k < opts_.random_probes; ++k) {
        probe = xl;
        const std::size_t pick = static_cast<std::size_t>(rng() % free.size());
        const int j = free[pick];
        const double mag = 0.5 + detail::uniform01(rng);
        probe[j] += (detail::uniform01(rng) < 0.5 ? -mag : mag) * theta[j];
        if (auto v = attempt(probe)) return *v;
      }
    }

    const double residual = boundary_value(level - 1, xl) - mean_from(at_xl);
    if (std::abs(residual) < opts_.resolved_tol) return 0.0;
    throw Error(ErrorCode::DegenerateDenominator,
                "no probe on '" + L.label() + "' gives a usable denominator, yet the boundary residual is " +
                    std::to_string(residual));
  }

  EmulatorPrior prior_;
  BoundarySet bset_;
  std::vector<Boundary> chain_;
  AdjustOptions opts_;
  std::shared_ptr<detail::SolverCache> cache_;
};

inline BoundaryAdjustedPrior adjust_set(const EmulatorPrior& prior, const BoundarySet& bset, AdjustOptions opts = {}) {
  return BoundaryAdjustedPrior(prior, bset, opts);
}

inline BoundaryAdjustedPrior adjust_single(const EmulatorPrior& prior, const Boundary& b, AdjustOptions opts = {}) {
  return BoundaryAdjustedPrior(prior, validate_set({b}, prior.dim()), opts);
}

/// The unadjusted prior, as a boundary-adjusted prior over an empty set.
inline BoundaryAdjustedPrior no_boundaries(const EmulatorPrior& prior) {
  return BoundaryAdjustedPrior(prior, validate_set({}, prior.dim()));
}

struct TrainingOptions {
  /// Diagonal jitter ladder, in units of sigma2.
  double jitter_start = 1e-10;
  double jitter_max = 1e-6;
  /// Tolerance for deciding that a training point lies on a boundary.
  double on_boundary_tol = kDefaultLocationTolerance;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  std::optional<Eigen::MatrixXd> cov;
};

/// Boundary-adjusted prior further adjusted by n training runs.
class Emulator {
 public:
  explicit Emulator(BoundaryAdjustedPrior base)
      : base_(std::move(base)), X_(0, base_.dim()), D_(0), weights_(0) {}

  const BoundaryAdjustedPrior& base() const { return base_; }
  /// Training inputs actually used (rows on a boundary removed).
  const Eigen::MatrixXd& design() const { return X_; }
  const Eigen::VectorXd& outputs() const { return D_; }
  /// Row indices of the original design that were dropped.
  const std::vector<int>& dropped() const { return dropped_; }
  double jitter() const { return jitter_; }
  int n() const { return static_cast<int>(X_.rows()); }

  double mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const auto e = base_.expand(x);
    double m = base_.mean_from(e);
    if (n() > 0) m += cross(e).dot(weights_);
    return m;
  }

  double var(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const auto e = base_.expand(x);
    double v = base_.cov_from(e, e);
    if (n() > 0) v -= chol_.matrixL().solve(cross(e)).squaredNorm();
    return v;
  }

  Prediction predict(const Eigen::MatrixXd& xs, bool want_cov = false) const {
    if (xs.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no prediction points");
    if (xs.cols() != base_.dim())
      throw Error(ErrorCode::DimensionMismatch, "prediction points have " + std::to_string(xs.cols()) +
                                                    " columns, expected " + std::to_string(base_.dim()));
    const Eigen::Index m = xs.rows();
    Prediction out;
    out.mean.resize(m);
    out.var.resize(m);
    std::vector<BoundaryAdjustedPrior::Expansion> ex;
    ex.reserve(static_cast<std::size_t>(m));
    Eigen::MatrixXd V(n(), m);  // L^{-1} Cov_K(D, x) columns
    for (Eigen::Index i = 0; i < m; ++i) {
      ex.push_back(base_.expand(xs.row(i).transpose()));
      const auto& e = ex.back();
      double mu = base_.mean_from(e);
      double v = base_.cov_from(e, e);
      if (n() > 0) {
        const Eigen::VectorXd k = cross(e);
        mu += k.dot(weights_);
        V.col(i) = chol_.matrixL().solve(k);
        v -= V.col(i).squaredNorm();
      }
      out.mean[i] = mu;
      out.var[i] = clamp_variance(v);
    }
    if (want_cov) {
      Eigen::MatrixXd C(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
          double c = base_.cov_from(ex[static_cast<std::size_t>(i)], ex[static_cast<std::size_t>(j)]);
          if (n() > 0) c -= V.col(i).dot(V.col(j));
          C(i, j) = C(j, i) = c;
        }
        C(i, i) = out.var[i];
      }
      out.cov = std::move(C);
    }
    return out;
  }

 private:
  friend Emulator update_by_training(BoundaryAdjustedPrior base, const Eigen::MatrixXd& X, const Eigen::VectorXd& D,
                                     TrainingOptions opts);

  Eigen::VectorXd cross(const BoundaryAdjustedPrior::Expansion& e) const {
    Eigen::VectorXd k(n());
    for (int i = 0; i < n(); ++i) k[i] = base_.cov_from(e, train_[static_cast<std::size_t>(i)]);
    return k;
  }

  double clamp_variance(double v) const {
    if (v >= 0.0) return v;
    if (v >= -1e-10 * base_.prior().sigma2) return 0.0;
    log::warn("negative predictive variance ", v, " (numerical breakdown)");
    return v;
  }

  BoundaryAdjustedPrior base_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd D_;
  std::vector<int> dropped_;
  std::vector<BoundaryAdjustedPrior::Expansion> train_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
};

/// Sequential adjustment by training runs on top of the boundary-adjusted
/// prior. Rows lying on a known boundary are dropped with a warning.
inline Emulator update_by_training(BoundaryAdjustedPrior base, const Eigen::MatrixXd& X, const Eigen::VectorXd& D,
                                   TrainingOptions opts = {}) {
  if (X.rows() != D.size()) throw Error(ErrorCode::DimensionMismatch, "design and outputs differ in length");
  if (X.rows() > 0 && X.cols() != base.dim())
    throw Error(ErrorCode::DimensionMismatch, "design has " + std::to_string(X.cols()) + " columns, expected " +
                                                  std::to_string(base.dim()));
  Emulator em(std::move(base));
  if (X.rows() == 0) return em;
  const auto& bset = em.base_.boundaries();
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (!std::isfinite(D[i])) throw Error(ErrorCode::InvalidArgument, "non-finite training output");
    if (bset.on_any(X.row(i).transpose(), opts.on_boundary_tol)) {
      log::warn("training point ", i, " lies on a known boundary and is dropped");
      em.dropped_.push_back(static_cast<int>(i));
    } else {
      keep.push_back(static_cast<int>(i));
    }
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  em.X_.resize(n, X.cols());
  em.D_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    em.X_.row(i) = X.row(keep[static_cast<std::size_t>(i)]);
    em.D_[i] = D[keep[static_cast<std::size_t>(i)]];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (em.X_.row(i) == em.X_.row(j))
        throw Error(ErrorCode::SingularTrainingCovariance,
                    "duplicate training points at rows " + std::to_string(keep[static_cast<std::size_t>(i)]) +
                        " and " + std::to_string(keep[static_cast<std::size_t>(j)]));
    }
  }
  if (n == 0) return em;

  em.train_.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    em.train_.push_back(em.base_.expand(em.X_.row(i).transpose()));
    resid[i] = em.D_[i] - em.base_.mean_from(em.train_.back());
  }
  Eigen::MatrixXd V(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      V(i, j) = V(j, i) = em.base_.cov_from(em.train_[static_cast<std::size_t>(i)],
                                            em.train_[static_cast<std::size_t>(j)]);
    }
  }
  const double s2 = em.base_.prior().sigma2;
  for (double delta = opts.jitter_start; delta <= opts.jitter_max * (1.0 + 1e-9); delta *= 10.0) {
    Eigen::MatrixXd Vj = V;
    Vj.diagonal().array() += delta * s2;
    em.chol_.compute(Vj);
    if (em.chol_.info() == Eigen::Success && em.chol_.matrixLLT().diagonal().minCoeff() > 0.0) {
      em.jitter_ = delta;
      em.weights_ = em.chol_.solve(resid);
      if (delta > opts.jitter_start) log::info("training covariance needed jitter ", delta);
      return em;
    }
  }
  throw Error(ErrorCode::SingularTrainingCovariance,
              "training covariance not positive definite even with jitter " + std::to_string(opts.jitter_max));
}

inline Prediction predict(const Emulator& em, const Eigen::MatrixXd& xs, bool want_cov = false) {
  return em.predict(xs, want_cov);
}

}  // namespace kbe
