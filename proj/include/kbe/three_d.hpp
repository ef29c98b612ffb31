#pragma once

// Analytic 3-input test function f(x) = sin(x0 / exp(x1)) + cos(x2) and the
// three planes on which it is known in closed form.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "kbe/engine.hpp"
#include "kbe/geometry.hpp"

namespace kbe::three_d {

inline constexpr double pi = std::numbers::pi;

inline double eval(const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(x, 3);
  return std::sin(x[0] / std::exp(x[1])) + std::cos(x[2]);
}

inline Eigen::VectorXd domain_lo() { return Eigen::Vector3d(-2 * pi, -pi / 4, -2 * pi); }
inline Eigen::VectorXd domain_hi() { return Eigen::Vector3d(2 * pi, pi / 4, 2 * pi); }

inline EmulatorPrior prior() {
  return EmulatorPrior(0.0, 2.0, CorrelationKernel::gaussian(Eigen::Vector3d(pi, pi / 8, pi)));
}

/// (x1, x2) = (0, 0); f = sin(x0) + 1.
inline Boundary boundary_K() {
  return Boundary(3, "K", {1, 2}, Eigen::Vector2d(0.0, 0.0),
                  [](const Eigen::VectorXd& x) { return std::sin(x[0]) + 1.0; });
}

/// (x1, x2) = (0, -pi); f = sin(x0) - 1.
inline Boundary boundary_L() {
  return Boundary(3, "L", {1, 2}, Eigen::Vector2d(0.0, -pi),
                  [](const Eigen::VectorXd& x) { return std::sin(x[0]) - 1.0; });
}

/// x0 = 0; f = cos(x2).
inline Boundary boundary_M() {
  return Boundary(3, "M", {0}, Eigen::VectorXd::Zero(1), [](const Eigen::VectorXd& x) { return std::cos(x[2]); });
}

inline Boundary boundary(const std::string& label) {
  if (label == "K") return boundary_K();
  if (label == "L") return boundary_L();
  if (label == "M") return boundary_M();
  throw Error(ErrorCode::InvalidArgument, "unknown 3D boundary '" + label + "'");
}

inline BoundarySet boundaries(const std::vector<std::string>& labels) {
  std::vector<Boundary> bs;
  for (const auto& l : labels) bs.push_back(boundary(l));
  return validate_set(std::move(bs), 3);
}

}  // namespace kbe::three_d
