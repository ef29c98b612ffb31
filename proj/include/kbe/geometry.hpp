#pragma once

// Known boundaries are axis-aligned hyperplanes x_J = alpha. This header
// holds their representation, orthogonal projections, pairwise
// classification and validation of whole boundary sets.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kbe/error.hpp"
#include "kbe/kernel.hpp"

namespace kbe {

/// Model output on a boundary. Only ever called with points lying exactly on
/// the plane.
using Solver = std::function<double(const Eigen::VectorXd&)>;

class Boundary {
 public:
  Boundary() = default;

  /// Indices may be given in any order; alpha is permuted along with them.
  Boundary(int p, std::string label, IndexSet normals, Eigen::VectorXd alpha, Solver solver = {})
      : p_(p), label_(std::move(label)), solver_(std::move(solver)) {
    if (p <= 0) throw Error(ErrorCode::InvalidArgument, "boundary dimension must be positive");
    if (normals.empty()) throw Error(ErrorCode::InvalidArgument, "boundary '" + label_ + "' has no normal directions");
    if (static_cast<Eigen::Index>(normals.size()) != alpha.size())
      throw Error(ErrorCode::DimensionMismatch, "boundary '" + label_ + "': normals and alpha differ in length");
    std::vector<std::pair<int, double>> pairs;
    for (std::size_t i = 0; i < normals.size(); ++i) {
      if (normals[i] < 0 || normals[i] >= p)
        throw Error(ErrorCode::IndexOutOfRange, "boundary '" + label_ + "': normal index out of range");
      if (!std::isfinite(alpha[static_cast<Eigen::Index>(i)]))
        throw Error(ErrorCode::InvalidArgument, "boundary '" + label_ + "': non-finite location");
      pairs.emplace_back(normals[i], alpha[static_cast<Eigen::Index>(i)]);
    }
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (pairs[i].first == pairs[i - 1].first)
        throw Error(ErrorCode::InvalidArgument, "boundary '" + label_ + "': repeated normal index");
    }
    normals_.reserve(pairs.size());
    alpha_full_ = Eigen::VectorXd::Zero(p);
    for (auto& [j, a] : pairs) {
      normals_.push_back(j);
      alpha_full_[j] = a;
    }
  }

  int dim() const { return p_; }
  int codim() const { return static_cast<int>(normals_.size()); }
  const std::string& label() const { return label_; }
  const IndexSet& normals() const { return normals_; }
  /// Location of the plane along normal direction j (j must be in normals()).
  double alpha_at(int j) const { return alpha_full_[j]; }
  Eigen::VectorXd alpha() const {
    Eigen::VectorXd a(codim());
    for (int i = 0; i < codim(); ++i) a[i] = alpha_full_[normals_[static_cast<std::size_t>(i)]];
    return a;
  }
  bool has_solver() const { return static_cast<bool>(solver_); }
  const Solver& solver() const { return solver_; }
  void set_solver(Solver s) { solver_ = std::move(s); }

  bool is_normal(int j) const { return std::binary_search(normals_.begin(), normals_.end(), j); }

  /// Free (in-plane) directions, i.e. the complement of the normal set.
  IndexSet free_directions() const { return complement(normals_, p_); }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    for (int j : normals_) {
      if (std::abs(x[j] - alpha_full_[j]) > tol) return false;
    }
    return true;
  }

  double solve(const Eigen::VectorXd& x) const {
    if (!solver_) throw Error(ErrorCode::SolverFailure, "boundary '" + label_ + "' has no solver");
    return solver_(x);
  }

 private:
  int p_ = 0;
  std::string label_;
  IndexSet normals_;
  Eigen::VectorXd alpha_full_;
  Solver solver_;
};

struct Projection {
  Eigen::VectorXd point;         ///< x^K
  Eigen::VectorXd displacement;  ///< a^K = x - x^K, zero outside the normal set
};

inline void check_dim(const Eigen::Ref<const Eigen::VectorXd>& x, int p) {
  if (x.size() != p)
    throw Error(ErrorCode::DimensionMismatch,
                "expected a point of dimension " + std::to_string(p) + ", got " + std::to_string(x.size()));
}

inline Projection project(const Eigen::Ref<const Eigen::VectorXd>& x, const Boundary& b) {
  check_dim(x, b.dim());
  Projection out{x, Eigen::VectorXd::Zero(x.size())};
  for (int j : b.normals()) {
    out.point[j] = b.alpha_at(j);
    out.displacement[j] = x[j] - out.point[j];
  }
  return out;
}

/// Projection onto the last boundary first, then the next-to-last, and so on.
inline Eigen::VectorXd sequential_project(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          const std::vector<Boundary>& bs) {
  if (bs.empty()) throw Error(ErrorCode::InvalidArgument, "sequential_project needs at least one boundary");
  Eigen::VectorXd y = x;
  for (auto it = bs.rbegin(); it != bs.rend(); ++it) y = project(y, *it).point;
  return y;
}

struct PairClass {
  enum class Kind { OrthogonalIntersecting, ParallelNested, Identical, Invalid };
  Kind kind = Kind::Invalid;
  /// For ParallelNested: index within the pair (0 or 1) of the parent, the
  /// boundary with the smaller normal set (higher dimension). -1 otherwise.
  int parent = -1;

  bool valid() const { return kind == Kind::OrthogonalIntersecting || kind == Kind::ParallelNested; }
};

inline std::string to_string(PairClass::Kind k) {
  switch (k) {
    case PairClass::Kind::OrthogonalIntersecting: return "OrthogonalIntersecting";
    case PairClass::Kind::ParallelNested: return "ParallelNested";
    case PairClass::Kind::Identical: return "Identical";
    case PairClass::Kind::Invalid: return "Invalid";
  }
  return "?";
}

inline constexpr double kDefaultLocationTolerance = 1e-12;

inline PairClass classify_pair(const Boundary& b1, const Boundary& b2, double tol = kDefaultLocationTolerance) {
  if (b1.dim() != b2.dim()) throw Error(ErrorCode::DimensionMismatch, "boundaries live in different input spaces");
  const IndexSet& J1 = b1.normals();
  const IndexSet& J2 = b2.normals();
  IndexSet shared;
  std::set_intersection(J1.begin(), J1.end(), J2.begin(), J2.end(), std::back_inserter(shared));
  const bool agree = std::all_of(shared.begin(), shared.end(),
                                 [&](int j) { return std::abs(b1.alpha_at(j) - b2.alpha_at(j)) <= tol; });
  if (agree && J1 == J2) return {PairClass::Kind::Identical, -1};
  if (agree) return {PairClass::Kind::OrthogonalIntersecting, -1};
  if (std::includes(J2.begin(), J2.end(), J1.begin(), J1.end())) return {PairClass::Kind::ParallelNested, 0};
  if (std::includes(J1.begin(), J1.end(), J2.begin(), J2.end())) return {PairClass::Kind::ParallelNested, 1};
  return {PairClass::Kind::Invalid, -1};
}

/// Shortest-distance vector between a parent boundary b1 and a parallel
/// (possibly lower-dimensional) boundary b2 with J1 a subset of J2:
/// entries alpha1_j - alpha2_j on J1, zero elsewhere.
inline Eigen::VectorXd boundary_distance(const Boundary& b1, const Boundary& b2,
                                         double tol = kDefaultLocationTolerance) {
  const PairClass pc = classify_pair(b1, b2, tol);
  const bool nested = std::includes(b2.normals().begin(), b2.normals().end(), b1.normals().begin(),
                                    b1.normals().end());
  if (!(pc.kind == PairClass::Kind::ParallelNested || pc.kind == PairClass::Kind::Identical) || !nested)
    throw Error(ErrorCode::InvalidPair, "boundary_distance needs '" + b2.label() + "' parallel-nested in '" +
                                            b1.label() + "'");
  Eigen::VectorXd d = Eigen::VectorXd::Zero(b1.dim());
  for (int j : b1.normals()) d[j] = b1.alpha_at(j) - b2.alpha_at(j);
  return d;
}

/// Validated boundary collection plus the order used by the update engine.
class BoundarySet {
 public:
  BoundarySet() = default;

  int dim() const { return p_; }
  std::size_t size() const { return boundaries_.size(); }
  bool empty() const { return boundaries_.empty(); }
  /// Boundaries in input order.
  const std::vector<Boundary>& boundaries() const { return boundaries_; }
  const PairClass& pair_class(std::size_t i, std::size_t j) const { return pair_classes_[i][j]; }
  /// Input indices in the order the engine applies them.
  const std::vector<int>& chain_order() const { return chain_order_; }
  /// Boundaries in chain order.
  std::vector<Boundary> chain() const {
    std::vector<Boundary> out;
    out.reserve(chain_order_.size());
    for (int i : chain_order_) out.push_back(boundaries_[static_cast<std::size_t>(i)]);
    return out;
  }

  /// Rebuild with boundaries taken in a caller-chosen order. The order must
  /// still satisfy the nesting rule; used by invariance checks.
  BoundarySet reordered(const std::vector<int>& order) const;

  /// True when x lies on any member boundary.
  bool on_any(const Eigen::Ref<const Eigen::VectorXd>& x, double tol = 0.0) const {
    return std::any_of(boundaries_.begin(), boundaries_.end(), [&](const Boundary& b) { return b.contains(x, tol); });
  }

 private:
  friend BoundarySet validate_set(std::vector<Boundary> bs, int p, double tol);
  int p_ = 0;
  std::vector<Boundary> boundaries_;
  std::vector<std::vector<PairClass>> pair_classes_;
  std::vector<int> chain_order_;
};

namespace detail {

/// Whether boundary `later` may be applied after boundary `earlier`.
inline bool may_follow(const PairClass& pc_earlier_later, const Boundary& earlier, const Boundary& later) {
  if (pc_earlier_later.kind == PairClass::Kind::OrthogonalIntersecting) return true;
  if (pc_earlier_later.kind != PairClass::Kind::ParallelNested) return false;
  return std::includes(later.normals().begin(), later.normals().end(), earlier.normals().begin(),
                       earlier.normals().end());
}

}  // namespace detail

/// Classifies every pair and derives the update order. Parallel-nested pairs
/// are ordered larger boundary (smaller normal set) first; otherwise input
/// order is kept.
inline BoundarySet validate_set(std::vector<Boundary> bs, int p, double tol = kDefaultLocationTolerance) {
  BoundarySet out;
  out.p_ = p;
  const std::size_t h = bs.size();
  for (const Boundary& b : bs) {
    if (b.dim() != p)
      throw Error(ErrorCode::DimensionMismatch, "boundary '" + b.label() + "' has dimension " +
                                                    std::to_string(b.dim()) + ", expected " + std::to_string(p));
  }
  out.pair_classes_.assign(h, std::vector<PairClass>(h));
  std::ostringstream invalid, identical;
  bool any_invalid = false, any_identical = false;
  for (std::size_t i = 0; i < h; ++i) {
    out.pair_classes_[i][i] = {PairClass::Kind::Identical, -1};
    for (std::size_t j = i + 1; j < h; ++j) {
      const PairClass pc = classify_pair(bs[i], bs[j], tol);
      out.pair_classes_[i][j] = pc;
      PairClass mirrored = pc;
      if (pc.parent >= 0) mirrored.parent = 1 - pc.parent;
      out.pair_classes_[j][i] = mirrored;
      if (pc.kind == PairClass::Kind::Invalid) {
        invalid << (any_invalid ? ", " : "") << "(" << bs[i].label() << ", " << bs[j].label() << ")";
        any_invalid = true;
      } else if (pc.kind == PairClass::Kind::Identical) {
        identical << (any_identical ? ", " : "") << "(" << bs[i].label() << ", " << bs[j].label() << ")";
        any_identical = true;
      }
    }
  }
  if (any_invalid)
    throw Error(ErrorCode::InvalidPair, "boundaries neither intersect nor nest: " + invalid.str());
  if (any_identical) throw Error(ErrorCode::IdenticalBoundaries, "identical boundaries: " + identical.str());

  // Kahn's algorithm over the "strictly nested parent before child" relation,
  // always releasing the lowest input index first.
  std::vector<int> indegree(h, 0);
  std::vector<std::vector<int>> children(h);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      if (i == j) continue;
      const PairClass& pc = out.pair_classes_[i][j];
      if (pc.kind == PairClass::Kind::ParallelNested && pc.parent == 0 &&
          bs[i].normals().size() < bs[j].normals().size()) {
        children[i].push_back(static_cast<int>(j));
        ++indegree[j];
      }
    }
  }
  std::vector<bool> done(h, false);
  for (std::size_t step = 0; step < h; ++step) {
    std::size_t next = h;
    for (std::size_t i = 0; i < h; ++i) {
      if (!done[i] && indegree[i] == 0) {
        next = i;
        break;
      }
    }
    done[next] = true;
    out.chain_order_.push_back(static_cast<int>(next));
    for (int c : children[next]) --indegree[static_cast<std::size_t>(c)];
  }
  out.boundaries_ = std::move(bs);
  return out;
}

inline BoundarySet BoundarySet::reordered(const std::vector<int>& order) const {
  if (order.size() != boundaries_.size())
    throw Error(ErrorCode::InvalidArgument, "reordering must name every boundary once");
  std::vector<bool> seen(boundaries_.size(), false);
  for (int i : order) {
    if (i < 0 || static_cast<std::size_t>(i) >= boundaries_.size() || seen[static_cast<std::size_t>(i)])
      throw Error(ErrorCode::InvalidArgument, "reordering must name every boundary once");
    seen[static_cast<std::size_t>(i)] = true;
  }
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const auto ia = static_cast<std::size_t>(order[a]);
      const auto ib = static_cast<std::size_t>(order[b]);
      if (!detail::may_follow(pair_classes_[ia][ib], boundaries_[ia], boundaries_[ib]))
        throw Error(ErrorCode::InvalidPair, "'" + boundaries_[ib].label() + "' cannot be applied after '" +
                                                boundaries_[ia].label() + "'");
    }
  }
  BoundarySet out = *this;
  out.chain_order_ = order;
  return out;
}

}  // namespace kbe
