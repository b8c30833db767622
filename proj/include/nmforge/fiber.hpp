#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "nmforge/linalg.hpp"
#include "nmforge/real.hpp"

namespace nmforge {

/// A vector of a fiber (or of its dual) in the fiber's coordinates.
using Vector = std::vector<Real>;

enum class LpIndex { One, Two, Inf };

/// Largest dimension accepted for polyhedral norms (vertex enumeration).
inline constexpr std::size_t kMaxPolyhedralDim = 6;
/// Largest dimension accepted for lp norms (the linf ball has 2^dim vertices).
inline constexpr std::size_t kMaxLpDim = 16;

// FiberSpace
//
// Finite-dimensional normed space. Norm families:
//   weighted l1:   sum_i w_i |v_i|
//   weighted l2:   (sum_i w_i v_i^2)^(1/2)
//   weighted linf: max_i w_i |v_i|
//   polyhedral:    max_j |<g_j, v>|, with the g_j spanning the dual
// Plain lp is the weighted family with unit weights.
class FiberSpace {
 public:
  enum class Family { Lp, Polyhedral };

  static FiberSpace lp(std::size_t dim, LpIndex p);
  /// Throws NotANorm on a nonpositive weight.
  static FiberSpace weighted_lp(LpIndex p, RationalVector weights);
  /// Throws NotANorm when the functionals do not span, DimensionMismatch on
  /// ragged input or dimension above kMaxPolyhedralDim.
  static FiberSpace polyhedral(std::vector<RationalVector> functionals);

  std::size_t dim() const { return dim_; }
  Family family() const { return family_; }
  LpIndex index() const { return index_; }
  const RationalVector& weights() const { return weights_; }
  const std::vector<RationalVector>& functionals() const { return functionals_; }
  bool unit_weights() const;

  /// Exact except for the l2 family when the root is irrational.
  /// Throws DimensionMismatch.
  Real norm(const Vector& v) const;

  /// True when the closed unit ball is a polytope (every family except l2).
  bool polytope_ball() const { return !(family_ == Family::Lp && index_ == LpIndex::Two); }
  /// Vertices of the unit ball; empty for the l2 family.
  const std::vector<RationalVector>& ball_vertices() const;

  std::string describe() const;

  friend bool operator==(const FiberSpace& a, const FiberSpace& b);

 private:
  Family family_ = Family::Lp;
  LpIndex index_ = LpIndex::Two;
  std::size_t dim_ = 0;
  RationalVector weights_;
  std::vector<RationalVector> functionals_;
  struct VertexCache {
    std::once_flag once;
    std::vector<RationalVector> vertices;
  };
  // Enumerated on first use and shared between copies.
  std::shared_ptr<VertexCache> vertices_;
};

// DualFiberSpace
//
// The topological dual of a fiber, itself a FiberSpace, with a reference back
// to the predual it was computed from.
class DualFiberSpace {
 public:
  DualFiberSpace(FiberSpace space, FiberSpace predual) : space_(std::move(space)), predual_(std::move(predual)) {}

  const FiberSpace& space() const { return space_; }
  const FiberSpace& predual() const { return predual_; }
  std::size_t dim() const { return space_.dim(); }
  Real norm(const Vector& w) const { return space_.norm(w); }

 private:
  FiberSpace space_;
  FiberSpace predual_;
};

/// l1 <-> linf and l2 self-dual with reciprocal weights; the dual of a
/// polyhedral norm is the polyhedral norm generated by the vertices of the
/// primal unit ball.
DualFiberSpace dual_fiber(const FiberSpace& fiber);

/// Bilinear pairing. Throws DimensionMismatch.
Real pair(const Vector& w, const Vector& v);

/// A vector v of the primal fiber with norm 1 and <w, v> = ||w||'. Exact for
/// every family except l2.
Vector attaining_vector(const FiberSpace& primal, const Vector& w);

/// Operator norm of the matrix (rows = target dim) from `from` to `to`.
Real operator_norm(const std::vector<Vector>& matrix, const FiberSpace& from, const FiberSpace& to);

Vector add(const Vector& a, const Vector& b);
Vector scale(const Real& s, const Vector& v);
Vector zero_vector(std::size_t dim);
bool is_zero(const Vector& v);

}  // namespace nmforge
