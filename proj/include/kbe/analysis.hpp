#pragma once

// Space-filling designs and emulator diagnostics.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "kbe/engine.hpp"
#include "kbe/error.hpp"

namespace kbe {

/// mt19937_64 with hand-rolled uniform and shuffle so that streams do not
/// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do v = eng_();
    while (v >= limit);
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
  }

  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    shuffle(p);
    return p;
  }

  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

/// Pairwise (cascade) summation; order of additions is fixed by the length.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline double pairwise_sum(const Eigen::VectorXd& v) { return pairwise_sum(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))); }

struct Design {
  Eigen::MatrixXd X;
  std::uint64_t seed = 0;
  int restarts = 0;
  double score = 0.0;  ///< minimum pairwise Euclidean distance
};

inline double min_pairwise_distance(const Eigen::MatrixXd& X) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) best = std::min(best, (X.row(i) - X.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

/// Best of `restarts` random Latin hypercubes on [-1, 1]^p with points at
/// stratum centres, under the maximin criterion.
inline Design maximin_lhc(int n, int p, std::uint64_t seed, int restarts = 50) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "a Latin hypercube needs at least 2 points");
  if (p < 1 || restarts < 1) throw Error(ErrorCode::InvalidArgument, "need p >= 1 and restarts >= 1");
  Rng rng(seed);
  Design best;
  best.seed = seed;
  best.restarts = restarts;
  best.score = -1.0;
  Eigen::MatrixXd X(n, p);
  for (int r = 0; r < restarts; ++r) {
    for (int j = 0; j < p; ++j) {
      const std::vector<int> perm = rng.permutation(n);
      for (int i = 0; i < n; ++i) X(i, j) = -1.0 + (2.0 * perm[static_cast<std::size_t>(i)] + 1.0) / n;
    }
    const double s = min_pairwise_distance(X);
    if (s > best.score) {
      best.score = s;
      best.X = X;
    }
  }
  return best;
}

struct StandardizedErrors {
  Eigen::VectorXd s;
  /// Some point had (near) zero variance but a non-negligible residual.
  bool flagged = false;
};

/// s = (mu - f) / sqrt(nu). Points with nu < 1e-12 sigma2 give 0 when the
/// residual is below 1e-8 and +inf otherwise.
inline StandardizedErrors standardized_errors(const Eigen::VectorXd& means, const Eigen::VectorXd& variances,
                                              const Eigen::VectorXd& truths, double sigma2 = 1.0) {
  if (means.size() != variances.size() || means.size() != truths.size())
    throw Error(ErrorCode::DimensionMismatch, "means, variances and truths differ in length");
  StandardizedErrors out;
  out.s.resize(means.size());
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    const double r = means[i] - truths[i];
    const double v = variances[i];
    if (v < 0.0 && v < -1e-10 * sigma2) throw Error(ErrorCode::InvalidArgument, "negative variance");
    if (v < 1e-12 * sigma2) {
      if (std::abs(r) < 1e-8) {
        out.s[i] = 0.0;
      } else {
        out.s[i] = std::numeric_limits<double>::infinity();
        out.flagged = true;
      }
    } else {
      out.s[i] = r / std::sqrt(v);
    }
  }
  return out;
}

struct DiagnosticsReport {
  double sum_of_variances = 0.0;
  double maspe = 0.0;
  double rmse = 0.0;
  Eigen::VectorXd standardized;
  double three_sigma_fraction = 0.0;
  bool flagged = false;
  int n = 0;
};

inline DiagnosticsReport diagnostics_from(const Eigen::VectorXd& means, const Eigen::VectorXd& variances,
                                          const Eigen::VectorXd& truths, double sigma2) {
  if (means.size() == 0) throw Error(ErrorCode::InvalidArgument, "no diagnostic points");
  StandardizedErrors se = standardized_errors(means, variances, truths, sigma2);
  DiagnosticsReport rep;
  rep.n = static_cast<int>(means.size());
  rep.sum_of_variances = pairwise_sum(variances.cwiseMax(0.0).eval());
  rep.maspe = pairwise_sum(se.s.cwiseAbs().eval()) / rep.n;
  rep.rmse = std::sqrt(pairwise_sum((means - truths).array().square().matrix().eval()) / rep.n);
  int within = 0;
  for (Eigen::Index i = 0; i < se.s.size(); ++i) within += (std::abs(se.s[i]) <= 3.0);
  rep.three_sigma_fraction = static_cast<double>(within) / rep.n;
  rep.standardized = std::move(se.s);
  rep.flagged = se.flagged;
  return rep;
}

inline DiagnosticsReport diagnostics(const Emulator& em, const Eigen::MatrixXd& test_inputs,
                                     const Eigen::VectorXd& test_truths) {
  if (test_inputs.rows() != test_truths.size())
    throw Error(ErrorCode::DimensionMismatch, "test inputs and truths differ in length");
  const Prediction pr = em.predict(test_inputs);
  return diagnostics_from(pr.mean, pr.var, test_truths, em.base().prior().sigma2);
}

}  // namespace kbe
