#pragma once

// Closed-form adjusted moments for specific boundary configurations, written
// directly from the product-correlation algebra. Deliberately shares no code
// with the engine beyond Eigen.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <vector>

namespace fixtures {

using Vec = Eigen::VectorXd;
using Fn = std::function<double(const Vec&)>;
using Dirs = std::vector<int>;

struct Plane {
  Dirs J;
  std::vector<double> alpha;  // same order as J
};

struct Setup {
  double beta;
  double sigma2;
  Vec theta;
  Fn f;

  double r(const Dirs& J, const Vec& v) const {
    double s = 0.0;
    for (int j : J) s += v[j] * v[j] / (theta[j] * theta[j]);
    return std::exp(-s);
  }
  // R_J(a, b) = r_J(a - b) - r_J(a) r_J(b)
  double R(const Dirs& J, const Vec& a, const Vec& b) const { return r(J, a - b) - r(J, a) * r(J, b); }
  double df(const Vec& y) const { return f(y) - beta; }
};

inline Vec proj(const Vec& x, const Plane& P) {
  Vec y = x;
  for (std::size_t i = 0; i < P.J.size(); ++i) y[P.J[i]] = P.alpha[i];
  return y;
}

inline Dirs unite(const Dirs& a, const Dirs& b) {
  std::set<int> s(a.begin(), a.end());
  s.insert(b.begin(), b.end());
  return {s.begin(), s.end()};
}

inline Dirs minus(const Dirs& a, const Dirs& b) {
  Dirs out;
  for (int j : a) {
    bool found = false;
    for (int k : b) found = found || k == j;
    if (!found) out.push_back(j);
  }
  return out;
}

inline Dirs all_dirs(int p) {
  Dirs d;
  for (int j = 0; j < p; ++j) d.push_back(j);
  return d;
}

// Vector from plane A to parallel plane B (on J_A): alpha^B - alpha^A.
inline Vec between(int p, const Plane& A, const Plane& B) {
  Vec d = Vec::Zero(p);
  for (std::size_t i = 0; i < A.J.size(); ++i) {
    const int j = A.J[i];
    for (std::size_t k = 0; k < B.J.size(); ++k)
      if (B.J[k] == j) d[j] = B.alpha[k] - A.alpha[i];
  }
  return d;
}

// ---------------------------------------------------------------------------
// h mutually orthogonal intersecting planes.

struct Orthogonal {
  Setup s;
  std::vector<Plane> planes;

  Vec project_all(const Vec& x, unsigned mask) const {
    Vec y = x;
    for (std::size_t i = 0; i < planes.size(); ++i)
      if (mask >> i & 1U) y = proj(y, planes[i]);
    return y;
  }
  Dirs dirs(unsigned mask) const {
    Dirs J;
    for (std::size_t i = 0; i < planes.size(); ++i)
      if (mask >> i & 1U) J = unite(J, planes[i].J);
    return J;
  }

  double mean(const Vec& x) const {
    double m = s.beta;
    const unsigned full = (1U << planes.size()) - 1U;
    for (unsigned T = 1; T <= full; ++T) {
      const int k = std::popcount(T);
      const Vec xt = project_all(x, T);
      m += (k % 2 ? 1.0 : -1.0) * s.r(dirs(T), x - xt) * s.df(xt);
    }
    return m;
  }

  double cov(const Vec& x, const Vec& y) const {
    const unsigned full = (1U << planes.size()) - 1U;
    const Dirs JH = dirs(full);
    const Vec ax = x - project_all(x, full);
    const Vec ay = y - project_all(y, full);
    double R = 0.0;
    for (unsigned T = 0; T <= full; ++T) {
      const Dirs JT = dirs(T);
      R += (std::popcount(T) % 2 ? -1.0 : 1.0) * s.r(minus(JH, JT), x - y) * s.r(JT, ax) * s.r(JT, ay);
    }
    return s.sigma2 * s.r(minus(all_dirs(static_cast<int>(x.size())), JH), x - y) * R;
  }
};

// ---------------------------------------------------------------------------
// Two planes K, L with J_K a subset of J_L, adjusted K first.

struct TwoParallel {
  Setup s;
  Plane K, L;

  double mean(const Vec& x) const {
    const int p = static_cast<int>(x.size());
    const Vec xK = proj(x, K), xL = proj(x, L), xLK = proj(xL, K);
    const Vec aK = x - xK, aL = x - xL;
    const Vec LK = between(p, K, L);
    const Dirs extra = minus(L.J, K.J);
    const double q = s.R(K.J, aK, LK) / s.R(K.J, LK, LK) * s.r(extra, aL);
    return s.beta + s.r(K.J, aK) * s.df(xK) + q * (s.df(xL) - s.r(K.J, LK) * s.df(xLK));
  }

  double cov(const Vec& x, const Vec& y) const {
    const int p = static_cast<int>(x.size());
    const Vec aKx = x - proj(x, K), aKy = y - proj(y, K);
    const Vec aLx = x - proj(x, L), aLy = y - proj(y, L);
    const Vec LK = between(p, K, L);
    const Dirs extra = minus(L.J, K.J);
    const double R2 = s.R(K.J, aKx, aKy) * s.r(extra, x - y) -
                      s.R(K.J, aKx, LK) * s.R(K.J, LK, aKy) / s.R(K.J, LK, LK) * s.r(extra, aLx) * s.r(extra, aLy);
    return s.sigma2 * s.r(minus(all_dirs(p), L.J), x - y) * R2;
  }
};

// ---------------------------------------------------------------------------
// Chain K_1, ..., K_h with J_1 subset of J_2 subset of ... (1-based below).

struct ParallelChain {
  Setup s;
  std::vector<Plane> K;  // K[0] is K_1

  int p() const { return static_cast<int>(s.theta.size()); }
  const Dirs& J(int i) const {
    static const Dirs none;
    return i == 0 ? none : K[static_cast<std::size_t>(i - 1)].J;
  }
  Dirs step(int i) const { return minus(J(i), J(i - 1)); }
  Vec a(const Vec& x, int i) const { return x - proj(x, K[static_cast<std::size_t>(i - 1)]); }

  // R^(g)(x, x'), on J_g.
  double Rg(int g, const Vec& x, const Vec& y) const {
    if (g == 0) return 1.0;
    const Vec ax = a(x, g), ay = a(y, g);
    const Vec pg = proj(x, K[static_cast<std::size_t>(g - 1)]);
    return Rg(g - 1, x, y) * s.r(step(g), x - y) -
           Rg(g - 1, x, pg) * Rg(g - 1, y, pg) / Rg(g - 1, pg, pg) * s.r(step(g), ax) * s.r(step(g), ay);
  }
  // R^(g) with either argument replaced by an arbitrary point of plane i.
  Vec on(int i) const { return proj(Vec::Zero(p()), K[static_cast<std::size_t>(i - 1)]); }

  // x^{K_b}: project onto K_{b_last} first, then down to K_{b_1}.
  Vec seq(const Vec& x, const std::vector<int>& b) const {
    Vec y = x;
    for (auto it = b.rbegin(); it != b.rend(); ++it) y = proj(y, K[static_cast<std::size_t>(*it - 1)]);
    return y;
  }

  // Vector from plane i to plane j (on J_i), i.e. alpha^j - alpha^i.
  Vec dist(int from_i, int to_j) const {
    return between(p(), K[static_cast<std::size_t>(to_j - 1)], K[static_cast<std::size_t>(from_i - 1)]);
  }

  double mean(const Vec& x) const {
    const int h = static_cast<int>(K.size());
    double m = s.beta + s.r(J(1), a(x, 1)) * s.df(proj(x, K[0]));
    for (int g = 2; g <= h; ++g) {
      const Vec yg = on(g);
      const double q = Rg(g - 1, x, yg) / Rg(g - 1, yg, yg) * s.r(step(g), a(x, g));
      double inner = s.df(proj(x, K[static_cast<std::size_t>(g - 1)]));
      // increasing sequences b_1 < ... < b_i = g, i >= 2
      for (unsigned mask = 1; mask < (1U << (g - 1)); ++mask) {
        std::vector<int> b;
        for (int t = 1; t < g; ++t)
          if (mask >> (t - 1) & 1U) b.push_back(t);
        b.push_back(g);
        const int i = static_cast<int>(b.size());
        double prod = 1.0;
        for (int l = 0; l + 1 < i; ++l) {
          const int bl = b[static_cast<std::size_t>(l)];
          const int bn = b[static_cast<std::size_t>(l + 1)];
          const Vec ybl = on(bl);
          // First argument lies on the next plane of the sequence. Putting
          // plane g there instead agrees only while h <= 3.
          prod *= Rg(bl - 1, on(bn), ybl) / Rg(bl - 1, ybl, ybl) * s.r(step(bl), dist(bn, bl));
        }
        inner += ((i + 1) % 2 ? -1.0 : 1.0) * prod * s.df(seq(x, b));
      }
      m += q * inner;
    }
    return m;
  }

  double cov(const Vec& x, const Vec& y) const {
    const int h = static_cast<int>(K.size());
    return s.sigma2 * s.r(minus(all_dirs(p()), J(h)), x - y) * Rg(h, x, y);
  }
};

// ---------------------------------------------------------------------------
// The 3D set {K, L, M}: K, L on (x1, x2), M on x0.

struct ThreeSet {
  Setup s;
  Plane K, L, M;

  double mean(const Vec& x) const {
    const Dirs J23 = K.J, J1 = M.J;
    const Vec xK = proj(x, K), xL = proj(x, L), xM = proj(x, M);
    const Vec xMK = proj(xK, M), xML = proj(xL, M), xLK = proj(xL, K), xMLK = proj(xLK, M);
    const Vec aK = x - xK, aM = x - xM;
    const Vec LK = between(static_cast<int>(x.size()), K, L);
    const double rM = s.r(J1, aM);
    const double q = s.R(J23, aK, LK) / s.R(J23, LK, LK);
    return s.beta + rM * s.df(xM) + s.r(J23, aK) * (s.df(xK) - rM * s.df(xMK)) + q * (s.df(xL) - rM * s.df(xML)) -
           q * s.r(J23, LK) * (s.df(xLK) - rM * s.df(xMLK));
  }

  double var(const Vec& x) const {
    const Dirs J23 = K.J, J1 = M.J;
    const Vec aK = x - proj(x, K), aM = x - proj(x, M);
    const Vec LK = between(static_cast<int>(x.size()), K, L);
    const double R2 = s.R(J23, aK, aK) - s.R(J23, aK, LK) * s.R(J23, LK, aK) / s.R(J23, LK, LK);
    return s.sigma2 * R2 * s.R(J1, aM, aM);
  }
};

inline Vec uniform_point(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(lo.size());
  for (Eigen::Index j = 0; j < lo.size(); ++j) x[j] = lo[j] + (hi[j] - lo[j]) * u(rng);
  return x;
}

}  // namespace fixtures
