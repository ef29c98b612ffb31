#pragma once

// Product-form correlation functions r(d) = prod_j r_j(d_j) and the
// "updated correlation component" R_J(a, a') = r_J(a - a') - r_J(a) r_J(a').

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kbe/error.hpp"
#include "kbe/log.hpp"

namespace kbe {

/// Sorted, zero-based set of input dimension indices.
using IndexSet = std::vector<int>;

enum class CorrelationFamily { Gaussian };

inline std::string to_string(CorrelationFamily f) {
  switch (f) {
    case CorrelationFamily::Gaussian: return "gaussian";
  }
  return "unknown";
}

inline CorrelationFamily correlation_family_from_string(const std::string& s) {
  if (s == "gaussian" || s == "Gaussian") return CorrelationFamily::Gaussian;
  throw Error(ErrorCode::InvalidArgument, "unknown correlation family '" + s + "'");
}

class CorrelationKernel {
 public:
  CorrelationKernel(CorrelationFamily family, Eigen::VectorXd theta)
      : family_(family), theta_(std::move(theta)) {
    if (theta_.size() == 0) throw Error(ErrorCode::InvalidArgument, "kernel needs at least one dimension");
    for (Eigen::Index j = 0; j < theta_.size(); ++j) {
      if (!(theta_[j] > 0.0) || !std::isfinite(theta_[j]))
        throw Error(ErrorCode::InvalidArgument, "lengthscales must be positive and finite");
    }
    inv_theta2_ = theta_.array().square().inverse().matrix();
  }

  static CorrelationKernel gaussian(Eigen::VectorXd theta) {
    return CorrelationKernel(CorrelationFamily::Gaussian, std::move(theta));
  }

  /// Common lengthscale in every one of p dimensions.
  static CorrelationKernel gaussian(int p, double theta) {
    return gaussian(Eigen::VectorXd::Constant(p, theta));
  }

  int dim() const { return static_cast<int>(theta_.size()); }
  CorrelationFamily family() const { return family_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  /// r_j(a) for a single dimension.
  double component(int j, double a) const {
    check_index(j);
    switch (family_) {
      case CorrelationFamily::Gaussian: return std::exp(-a * a * inv_theta2_[j]);
    }
    return 0.0;
  }

  double corr(const Eigen::Ref<const Eigen::VectorXd>& d) const {
    check_size(d);
    return std::exp(-(d.array().square() * inv_theta2_.array()).sum());
  }

  /// Correlation between two points, r(x - y).
  double corr(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) const {
    check_size(x);
    check_size(y);
    return std::exp(-((x - y).array().square() * inv_theta2_.array()).sum());
  }

  /// r_J(q); equals 1 for the empty set.
  double corr_subset(const IndexSet& J, const Eigen::Ref<const Eigen::VectorXd>& q) const {
    check_size(q);
    double s = 0.0;
    for (int j : J) {
      check_index(j);
      s += q[j] * q[j] * inv_theta2_[j];
    }
    return std::exp(-s);
  }

  /// R_J(a, a') = r_J(a - a') - r_J(a) r_J(a').
  ///
  /// For the Gaussian family this is evaluated as
  /// exp(-|a|^2 - |a'|^2) * expm1(2 <a, a'>) (scaled by the lengthscales),
  /// which keeps full relative precision when both points approach the plane.
  double updated_corr(const IndexSet& J, const Eigen::Ref<const Eigen::VectorXd>& a,
                      const Eigen::Ref<const Eigen::VectorXd>& a2) const {
    check_size(a);
    check_size(a2);
#ifndef NDEBUG
    if (J.empty()) log::warn("updated_corr called with an empty index set (degenerate boundary)");
#endif
    double s1 = 0.0, s2 = 0.0, c = 0.0;
    for (int j : J) {
      check_index(j);
      s1 += a[j] * a[j] * inv_theta2_[j];
      s2 += a2[j] * a2[j] * inv_theta2_[j];
      c += a[j] * a2[j] * inv_theta2_[j];
    }
    return std::exp(-(s1 + s2)) * std::expm1(2.0 * c);
  }

 private:
  void check_size(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    if (v.size() != theta_.size())
      throw Error(ErrorCode::DimensionMismatch, "expected a vector of length " + std::to_string(theta_.size()) +
                                                    ", got " + std::to_string(v.size()));
  }
  void check_index(int j) const {
    if (j < 0 || j >= theta_.size())
      throw Error(ErrorCode::IndexOutOfRange, "dimension index " + std::to_string(j) + " out of range");
  }

  CorrelationFamily family_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd inv_theta2_;
};

/// Complement of J within {0, ..., p-1}.
inline IndexSet complement(const IndexSet& J, int p) {
  IndexSet out;
  std::size_t k = 0;
  for (int j = 0; j < p; ++j) {
    if (k < J.size() && J[k] == j) {
      ++k;
      continue;
    }
    out.push_back(j);
  }
  return out;
}

}  // namespace kbe
