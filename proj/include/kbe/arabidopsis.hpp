#pragma once

// Hormonal crosstalk model of the Arabidopsis root: 18 ODEs driven by 38 free
// rate parameters, the closed-form [ET] solutions on the two known
// boundaries, and the sqrt-affine input transformation.

#include <Eigen/Dense>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "kbe/error.hpp"
#include "kbe/geometry.hpp"

namespace kbe::arabidopsis {

inline constexpr int kInputs = 38;
inline constexpr int kStates = 18;

/// Free input indices, in table order.
enum Input : int {
  k1, k1a, k2, k2a, k2b, k2c, k3, k3a, k3auxin, k1vauxin,
  k4, k5, k6a, k7, k8, k9, k10, k10a, k11, k12,
  k12a, k13, k14, k15, k16a, k17, k18, k18a, k19, k20a,
  k20b, k20c, k1v21, k22a, k1v23, k1v24, k25a, k25b,
};

/// State indices.
enum State : int {
  Auxin, X, PLSp, Ra, RaS, CK, ET, PLSm, Re, ReS,
  CTR1, CTR1S, PIN1m, PIN1pi, PIN1pm, IAA, cytokinin, ACC,
};

struct InputSpec {
  const char* name;
  double lo;
  double hi;
};

inline const std::array<InputSpec, kInputs>& inputs() {
  static const std::array<InputSpec, kInputs> table{{
      {"k1", 0.1, 4},        {"k1a", 0.1, 4},     {"k2", 0.02, 0.8},     {"k2a", 0.28, 11.2},
      {"k2b", 0.1, 4},       {"k2c", 0.001, 0.04}, {"k3", 0.2, 8},       {"k3a", 0.045, 1.8},
      {"k3auxin", 1, 40},    {"k1vauxin", 0.1, 4}, {"k4", 0.1, 4},       {"k5", 0.03, 1.2},
      {"k6a", 0.02, 0.8},    {"k7", 0.1, 4},      {"k8", 0.1, 1},        {"k9", 0.1, 1},
      {"k10", 0.00003, 0.0012}, {"k10a", 0.5, 20}, {"k11", 0.5, 20},     {"k12", 0.01, 0.4},
      {"k12a", 0.01, 0.4},   {"k13", 0.1, 1},     {"k14", 0.3, 12},      {"k15", 0.0085, 0.34},
      {"k16a", 0.1, 4},      {"k17", 0.01, 0.4},  {"k18", 0.01, 0.4},    {"k18a", 0.1, 4},
      {"k19", 0.1, 4},       {"k20a", 0.08, 3.2}, {"k20b", 0.1, 4},      {"k20c", 0.03, 1.2},
      {"k1v21", 0.1, 4},     {"k22a", 0.1, 1},    {"k1v23", 0.075, 3},   {"k1v24", 1, 40},
      {"k25a", 0.1, 4},      {"k25b", 0.1, 4},
  }};
  return table;
}

inline const std::array<const char*, kStates>& state_names() {
  static const std::array<const char*, kStates> names{
      "Auxin", "X",     "PLSp",  "Ra",    "Ra*",    "CK",     "ET",  "PLSm",      "Re",
      "Re*",   "CTR1",  "CTR1*", "PIN1m", "PIN1pi", "PIN1pm", "IAA", "cytokinin", "ACC"};
  return names;
}

using StateVector = std::array<double, kStates>;

inline StateVector initial_state() {
  return {0.1, 0.1, 0.1, 0.0, 1.0, 0.1, 0.1, 0.1, 0.0, 0.3, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
}

/// Fixed (non-explored) parameters.
struct FixedRates {
  double V_IAA = 0.0, V_CK = 0.0, V_ACC = 0.0;
  double Km_IAA = 1.0, Km_CK = 1.0, Km_ACC = 1.0;
  double k16_ratio = 0.3;  // k16 = 0.3 k16a
};

/// Time derivatives. `k` holds the 38 free rates in raw units. The table's
/// k6 (PLSm production) is the free input k1vauxin.
inline void rhs(const StateVector& s, StateVector& ds, const double* k, const FixedRates& fx = {}) {
  const double k16 = fx.k16_ratio * k[k16a];
  const double k6 = k[k1vauxin];
  const double pin_recycle = k[k25a] * s[PIN1pm] / (1.0 + s[Auxin] / k[k25b]);

  ds[Auxin] = k[k1a] / (1.0 + s[X] / k[k1]) + k[k2] +
              k[k2a] * s[ET] / (1.0 + s[CK] / k[k2b]) * s[PLSp] / (k[k2c] + s[PLSp]) +
              fx.V_IAA * s[IAA] / (fx.Km_IAA + s[IAA]) -
              (k[k3] + k[k3a] * s[PIN1pm] / (k[k3auxin] + s[Auxin])) * s[Auxin];
  ds[X] = k16 - k[k16a] * s[CTR1S] - k[k17] * s[X];
  ds[PLSp] = k[k8] * s[PLSm] - k[k9] * s[PLSp];
  ds[Ra] = -k[k4] * s[Auxin] * s[Ra] + k[k5] * s[RaS];
  ds[RaS] = -ds[Ra];
  ds[CK] = k[k18a] / (1.0 + s[Auxin] / k[k18]) - k[k19] * s[CK] + fx.V_CK * s[cytokinin] / (fx.Km_CK + s[cytokinin]);
  ds[ET] = k[k12] + k[k12a] * s[Auxin] * s[CK] - k[k13] * s[ET] + fx.V_ACC * s[ACC] / (fx.Km_ACC + s[ACC]);
  ds[PLSm] = k6 * s[RaS] / (1.0 + s[ET] / k[k6a]) - k[k7] * s[PLSm];
  ds[Re] = k[k11] * s[ReS] * s[ET] - (k[k10] + k[k10a] * s[PLSp]) * s[Re];
  ds[ReS] = -ds[Re];
  ds[CTR1] = -k[k14] * s[ReS] * s[CTR1] + k[k15] * s[CTR1S];
  ds[CTR1S] = -ds[CTR1];
  ds[PIN1m] = k[k20a] / (k[k20b] + s[CK]) * s[X] * s[Auxin] / (k[k20c] + s[Auxin]) - k[k1v21] * s[PIN1m];
  ds[PIN1pi] = k[k22a] * s[PIN1m] - k[k1v23] * s[PIN1pi] - k[k1v24] * s[PIN1pi] + pin_recycle;
  ds[PIN1pm] = k[k1v24] * s[PIN1pi] - pin_recycle;
  ds[IAA] = 0.0;
  ds[cytokinin] = 0.0;
  ds[ACC] = 0.0;
}

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double initial_dt = 1e-3;
  double min_dt = 1e-14;
  long max_steps = 1000000;
};

inline std::string describe(const Eigen::VectorXd& raw) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < raw.size(); ++i) os << (i ? "," : "") << inputs()[static_cast<std::size_t>(i)].name << "=" << raw[i];
  return os.str();
}

inline void check_raw(const Eigen::VectorXd& raw) {
  if (raw.size() != kInputs)
    throw Error(ErrorCode::DimensionMismatch, "expected 38 rate parameters, got " + std::to_string(raw.size()));
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]) || raw[i] < 0.0)
      throw Error(ErrorCode::OutOfRange, std::string("rate ") + inputs()[static_cast<std::size_t>(i)].name +
                                             " must be finite and non-negative");
  }
}

/// State at t_end, by adaptive Dormand-Prince 5(4).
inline StateVector integrate(const Eigen::VectorXd& raw, double t_end, const IntegrateOptions& opt = {},
                             const FixedRates& fx = {}) {
  namespace odeint = boost::numeric::odeint;
  check_raw(raw);
  if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "integration horizon must be positive");
  const Eigen::VectorXd k = raw;
  auto sys = [&](const StateVector& s, StateVector& ds, double) { rhs(s, ds, k.data(), fx); };
  auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<StateVector>());
  StateVector s = initial_state();
  double t = 0.0;
  double dt = std::min(opt.initial_dt, t_end);
  long steps = 0;
  while (t < t_end) {
    if (t + dt > t_end) dt = t_end - t;
    if (stepper.try_step(sys, s, t, dt) == odeint::fail) {
      if (dt < opt.min_dt * std::max(1.0, t))
        throw Error(ErrorCode::StepSizeUnderflow, "step size underflow at t=" + std::to_string(t) + " for " + describe(raw));
    }
    if (++steps > opt.max_steps)
      throw Error(ErrorCode::StepSizeUnderflow, "step limit reached at t=" + std::to_string(t) + " for " + describe(raw));
    if (t_end - t <= 1e-15 * t_end) break;
  }
  for (double v : s) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SolverFailure, "non-finite state for " + describe(raw));
  }
  return s;
}

/// Output of interest: [ET] at t = 2.
inline double et_at(const Eigen::VectorXd& raw, double t = 2.0, const IntegrateOptions& opt = {}) {
  return integrate(raw, t, opt)[ET];
}

/// [ET] when k12a = 0.
inline double et_boundary_L(double k12_, double k13_, double et0, double t) {
  if (!(k13_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "k13 must be positive");
  return ((et0 * k13_ - k12_) * std::exp(-k13_ * t) + k12_) / k13_;
}

namespace detail {
/// (exp(-a t) - exp(-b t)) / (b - a), with its limit t exp(-b t) at a = b.
inline double exp_diff(double a, double b, double t) {
  if (std::abs(b - a) < 1e-8) return t * std::exp(-b * t);
  return (std::exp(-a * t) - std::exp(-b * t)) / (b - a);
}
}  // namespace detail

/// [ET] when k1a = k2a = k3a = k18a = 0: Auxin and CK decouple and solve in
/// closed form, leaving a linear equation for ET.
inline double et_boundary_K(double k2_, double k3_, double k12_, double k12a_, double k13_, double k19_, double auxin0,
                            double ck0, double et0, double t) {
  if (!(k3_ > 0.0) || !(k13_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "k3 and k13 must be positive");
  const double c1 = k12a_ * ck0 * k2_ / k3_;
  const double c2 = k12a_ * ck0 * (auxin0 * k3_ - k2_) / k3_;
  const double e13 = std::exp(-k13_ * t);
  return et0 * e13 + k12_ / k13_ * (1.0 - e13) + c1 * detail::exp_diff(k19_, k13_, t) +
         c2 * detail::exp_diff(k3_ + k19_, k13_, t);
}

/// sqrt-affine map, defined for any raw >= 0 (below the range it continues
/// linearly in sqrt space past -1).
inline double to_unit(double raw, const InputSpec& r) {
  const double a = std::sqrt(r.lo), b = std::sqrt(r.hi);
  return 2.0 * (std::sqrt(raw) - a) / (b - a) - 1.0;
}

inline double from_unit(double u, const InputSpec& r) {
  const double a = std::sqrt(r.lo), b = std::sqrt(r.hi);
  double s = a + (u + 1.0) * 0.5 * (b - a);
  if (s < 0.0) {
    if (s < -1e-12) throw Error(ErrorCode::OutOfRange, "transformed input below the image of zero");
    s = 0.0;
  }
  return s * s;
}

/// Raw rates (within the table ranges) to [-1, 1]^38.
inline Eigen::VectorXd transform_inputs(const Eigen::VectorXd& raw) {
  if (raw.size() != kInputs)
    throw Error(ErrorCode::DimensionMismatch, "expected 38 rate parameters, got " + std::to_string(raw.size()));
  Eigen::VectorXd u(kInputs);
  for (int i = 0; i < kInputs; ++i) {
    const auto& r = inputs()[static_cast<std::size_t>(i)];
    if (!(raw[i] >= r.lo && raw[i] <= r.hi))
      throw Error(ErrorCode::OutOfRange, std::string("rate ") + r.name + " outside [" + std::to_string(r.lo) + ", " +
                                             std::to_string(r.hi) + "]");
    u[i] = to_unit(raw[i], r);
  }
  return u;
}

/// Same map without the range check (raw >= 0).
inline Eigen::VectorXd transform_extended(const Eigen::VectorXd& raw) {
  check_raw(raw);
  Eigen::VectorXd u(kInputs);
  for (int i = 0; i < kInputs; ++i) u[i] = to_unit(raw[i], inputs()[static_cast<std::size_t>(i)]);
  return u;
}

inline Eigen::VectorXd inverse_transform(const Eigen::VectorXd& u) {
  if (u.size() != kInputs)
    throw Error(ErrorCode::DimensionMismatch, "expected 38 transformed inputs, got " + std::to_string(u.size()));
  Eigen::VectorXd raw(kInputs);
  for (int i = 0; i < kInputs; ++i) raw[i] = from_unit(u[i], inputs()[static_cast<std::size_t>(i)]);
  return raw;
}

/// Location of raw = 0 in transformed units.
inline double zero_location(int input) { return to_unit(0.0, inputs()[static_cast<std::size_t>(input)]); }

inline constexpr double kInitialAuxin = 0.1, kInitialCK = 0.1, kInitialET = 0.1;

/// Raw rates of a transformed point on a boundary; the normal rates are set
/// to exactly zero.
inline Eigen::VectorXd raw_on(const Eigen::VectorXd& u, const IndexSet& zeroed) {
  Eigen::VectorXd raw = inverse_transform(u);
  for (int j : zeroed) raw[j] = 0.0;
  return raw;
}

/// k12a = 0; [ET](t) in closed form.
inline Boundary boundary_L(double t = 2.0) {
  const IndexSet J{k12a};
  return Boundary(kInputs, "L", J, Eigen::VectorXd::Constant(1, zero_location(k12a)),
                  [J, t](const Eigen::VectorXd& u) {
                    const Eigen::VectorXd raw = raw_on(u, J);
                    return et_boundary_L(raw[k12], raw[k13], kInitialET, t);
                  });
}

/// k1a = k2a = k3a = k18a = 0; [ET](t) in closed form.
inline Boundary boundary_K(double t = 2.0) {
  const IndexSet J{k1a, k2a, k3a, k18a};
  Eigen::VectorXd alpha(4);
  for (int i = 0; i < 4; ++i) alpha[i] = zero_location(J[static_cast<std::size_t>(i)]);
  return Boundary(kInputs, "K", J, alpha, [J, t](const Eigen::VectorXd& u) {
    const Eigen::VectorXd raw = raw_on(u, J);
    return et_boundary_K(raw[k2], raw[k3], raw[k12], raw[k12a], raw[k13], raw[k19], kInitialAuxin, kInitialCK,
                         kInitialET, t);
  });
}

inline Boundary boundary(const std::string& label) {
  if (label == "K") return boundary_K();
  if (label == "L") return boundary_L();
  throw Error(ErrorCode::InvalidArgument, "unknown arabidopsis boundary '" + label + "'");
}

inline BoundarySet boundaries(const std::vector<std::string>& labels) {
  std::vector<Boundary> bs;
  for (const auto& l : labels) bs.push_back(boundary(l));
  return validate_set(std::move(bs), kInputs);
}

/// [ET](2) at a transformed input point.
inline double et_transformed(const Eigen::VectorXd& u, const IntegrateOptions& opt = {}) {
  return et_at(inverse_transform(u), 2.0, opt);
}

}  // namespace kbe::arabidopsis
