#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmforge/real.hpp"

namespace nmforge {

/// A real function on the carrier of a finite space, indexed by point.
using Function = std::vector<Real>;

/// Maximum carrier size; subsets are stored as 64-bit masks.
inline constexpr std::size_t kMaxPoints = 64;

// PointSet
//
// Subset of a carrier of at most kMaxPoints points.
class PointSet {
 public:
  constexpr PointSet() = default;
  constexpr explicit PointSet(std::uint64_t bits) : bits_(bits) {}
  static PointSet singleton(std::size_t i) { return PointSet(std::uint64_t{1} << i); }
  static PointSet full(std::size_t n) {
    return PointSet(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }

  bool contains(std::size_t i) const { return (bits_ >> i) & 1u; }
  void insert(std::size_t i) { bits_ |= std::uint64_t{1} << i; }
  void erase(std::size_t i) { bits_ &= ~(std::uint64_t{1} << i); }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  std::size_t first() const { return static_cast<std::size_t>(std::countr_zero(bits_)); }
  std::uint64_t bits() const { return bits_; }
  std::vector<std::size_t> members() const;

  PointSet operator|(PointSet o) const { return PointSet(bits_ | o.bits_); }
  PointSet operator&(PointSet o) const { return PointSet(bits_ & o.bits_); }
  PointSet operator-(PointSet o) const { return PointSet(bits_ & ~o.bits_); }
  PointSet operator^(PointSet o) const { return PointSet(bits_ ^ o.bits_); }
  bool subset_of(PointSet o) const { return (bits_ & ~o.bits_) == 0; }
  friend bool operator==(PointSet, PointSet) = default;

 private:
  std::uint64_t bits_ = 0;
};

// FiniteMeasureSpace
//
// Ordered carrier with exact nonnegative masses. The sigma-algebra is the
// full powerset; zero-mass points are kept and make up the null ideal.
class FiniteMeasureSpace {
 public:
  FiniteMeasureSpace() = default;

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  const Rational& weight(std::size_t i) const { return weights_.at(i); }
  const std::vector<Rational>& weights() const { return weights_; }

  bool is_null(std::size_t i) const { return sgn(weights_.at(i)) == 0; }
  std::optional<std::size_t> find(std::string_view label) const;
  /// Throws UnknownPoint.
  std::size_t index_of(std::string_view label) const;

  PointSet carrier() const { return PointSet::full(size()); }
  PointSet support() const;
  Rational mass(PointSet set) const;
  Rational total_mass() const { return mass(carrier()); }

  /// Sum of f(x) mu(x).
  Real integrate(const Function& f) const;
  /// Sum of |f(x)| mu(x).
  Real l1_norm(const Function& f) const;
  /// True iff f and g agree on every positive-mass point.
  bool ae_equal(const Function& f, const Function& g) const;
  /// f with its values on null points set to zero.
  Function canonical(Function f) const;

  std::string describe(PointSet set) const;

  friend bool operator==(const FiniteMeasureSpace&, const FiniteMeasureSpace&) = default;

 private:
  friend FiniteMeasureSpace make_space(std::vector<std::string>, std::vector<Rational>);
  std::vector<std::string> labels_;
  std::vector<Rational> weights_;
};

/// Errors: NegativeWeight, DuplicateLabel, AllNull.
FiniteMeasureSpace make_space(std::vector<std::string> labels, std::vector<Rational> weights);

// MeasurableMap
//
// Point assignment between two finite spaces. The measure-preserving flag is
// computed from the weights at construction.
class MeasurableMap {
 public:
  MeasurableMap() = default;
  /// assign[y] is the target index of source point y. Throws UnknownPoint.
  static MeasurableMap make(FiniteMeasureSpace source, FiniteMeasureSpace target,
                            std::vector<std::size_t> assign);
  static MeasurableMap identity(const FiniteMeasureSpace& space);

  const FiniteMeasureSpace& source() const { return source_; }
  const FiniteMeasureSpace& target() const { return target_; }
  std::size_t operator()(std::size_t y) const { return assign_.at(y); }
  const std::vector<std::size_t>& assignment() const { return assign_; }

  /// phi_* mu_Y == mu_X.
  bool measure_preserving() const { return measure_preserving_; }
  /// phi_* mu_Y << mu_X.
  bool absolutely_continuous() const { return absolutely_continuous_; }

  PointSet preimage(PointSet target_set) const;
  /// f o phi for a function on the target.
  Function compose(const Function& f) const;

 private:
  FiniteMeasureSpace source_;
  FiniteMeasureSpace target_;
  std::vector<std::size_t> assign_;
  bool measure_preserving_ = false;
  bool absolutely_continuous_ = false;
};

/// The measure phi_*(f mu_Y), returned as a mass per target point.
Function pushforward(const MeasurableMap& map, const Function& f);

/// Density g with nu = g mu; g is zero on null points. Throws
/// NotAbsolutelyContinuous when nu charges a null point.
Function radon_nikodym(const Function& nu, const FiniteMeasureSpace& mu);

// PartitionChain
//
// Refining partitions generated by an initial segment of a sequence of sets.
// Level 0 is {X}; level k is the set of atoms of the algebra generated by the
// first k generators. Cells in a level are ordered by their smallest member.
class PartitionChain {
 public:
  const FiniteMeasureSpace& space() const { return space_; }
  const std::vector<PointSet>& generators() const { return generators_; }
  std::size_t level_count() const { return levels_.size(); }
  /// Throws LevelOutOfRange.
  const std::vector<PointSet>& level(std::size_t k) const;
  /// Index of the cell of level k containing point x.
  std::size_t cell_of(std::size_t k, std::size_t x) const;
  /// Final level isolates every positive-mass point.
  bool fully_refining() const { return fully_refining_; }

 private:
  friend PartitionChain build_chain(const FiniteMeasureSpace&, const std::vector<PointSet>&);
  FiniteMeasureSpace space_;
  std::vector<PointSet> generators_;
  std::vector<std::vector<PointSet>> levels_;
  bool fully_refining_ = false;
};

/// Throws UnknownPoint if a generator leaves the carrier.
PartitionChain build_chain(const FiniteMeasureSpace& space, const std::vector<PointSet>& generators);
PartitionChain build_chain(const FiniteMeasureSpace& space,
                           const std::vector<std::vector<std::string>>& generators);

Function indicator(PointSet set, std::size_t n);
Function plus(const Function& f, const Function& g);
Function minus(const Function& f, const Function& g);
Function times(const Function& f, const Function& g);
Function scaled(const Real& s, const Function& f);

/// Partition P refines Q: every cell of P lies inside exactly one cell of Q.
bool refines(const std::vector<PointSet>& fine, const std::vector<PointSet>& coarse);
/// Cells are pairwise disjoint and cover the carrier of n points.
bool is_partition(const std::vector<PointSet>& cells, std::size_t n);

}  // namespace nmforge
