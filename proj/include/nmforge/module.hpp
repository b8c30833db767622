#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmforge/fiber.hpp"
#include "nmforge/measure.hpp"

namespace nmforge {

/// Value of a section at every carrier point, in that point's fiber.
using Section = std::vector<Vector>;

/// Negligible sets of a module: the zero-mass points of the base measure, or
/// only the empty set.
enum class NullIdeal { Measure, Trivial };

// Exponent
//
// p in [1, inf]. Integrability exponent of a module or of its dual.
class Exponent {
 public:
  Exponent() : value_(Rational(2)) {}
  Exponent(int p) : Exponent(Rational(p)) {}
  /// Throws BadExponents for p < 1.
  Exponent(Rational p);
  static Exponent infinity() {
    Exponent e;
    e.value_.reset();
    return e;
  }

  bool is_infinite() const { return !value_.has_value(); }
  /// Throws BadExponents when infinite.
  const Rational& value() const;
  /// 1/p + 1/q = 1.
  Exponent conjugate() const;
  std::string str() const { return value_ ? to_string(*value_) : "inf"; }

  friend bool operator==(const Exponent&, const Exponent&) = default;

 private:
  std::optional<Rational> value_;
};

// StrongBundle
//
// Fibers over a finite base plus a finite family of test sections. Test(V) is
// the linear span of the family, so closure under linear combinations holds
// by construction and membership is decided by an exact linear solve.
class StrongBundle {
 public:
  /// Throws DimensionMismatch when a test section does not fit the fibers.
  static std::shared_ptr<const StrongBundle> make(FiniteMeasureSpace base, std::vector<FiberSpace> fibers,
                                                  std::vector<Section> test_sections = {},
                                                  NullIdeal ideal = NullIdeal::Measure);
  static std::shared_ptr<const StrongBundle> uniform(FiniteMeasureSpace base, const FiberSpace& fiber,
                                                     std::vector<Section> test_sections = {},
                                                     NullIdeal ideal = NullIdeal::Measure);

  const FiniteMeasureSpace& base() const { return base_; }
  std::size_t size() const { return base_.size(); }
  const FiberSpace& fiber(std::size_t x) const { return fibers_.at(x); }
  const std::vector<FiberSpace>& fibers() const { return fibers_; }
  const std::vector<Section>& test_sections() const { return test_sections_; }
  NullIdeal ideal() const { return ideal_; }

  /// x belongs to a negligible set of the ideal.
  bool negligible(std::size_t x) const { return ideal_ == NullIdeal::Measure && base_.is_null(x); }

  /// s agrees off a negligible set with a linear combination of test sections.
  bool is_test_section(const Section& s) const;
  /// Dimension of the span of the test-section values at x.
  std::size_t realized_rank(std::size_t x) const;

  /// Same base, fibers and ideal.
  bool same_shape(const StrongBundle& other) const;

  /// 1_{x} e_j for every point x off the ideal and every basis vector e_j.
  std::vector<Section> localized_basis() const;
  /// Generators of L^p_str as a module: the test sections, followed by the
  /// localized basis when they do not span every fiber off the ideal.
  std::vector<Section> generators() const;

 private:
  FiniteMeasureSpace base_;
  std::vector<FiberSpace> fibers_;
  std::vector<Section> test_sections_;
  NullIdeal ideal_ = NullIdeal::Measure;
};

using BundlePtr = std::shared_ptr<const StrongBundle>;

void check_section(const StrongBundle& bundle, const Section& s);
Section zero_section(const StrongBundle& bundle);

// ModuleElement
//
// Class of a section under agreement off the ideal. The stored representative
// is canonical: zero on negligible points. Elements of L^p_str for finite p
// and of the L^inf-normed module for p = inf share this type.
class ModuleElement {
 public:
  /// Throws DimensionMismatch.
  ModuleElement(BundlePtr bundle, Section section, Exponent p = Exponent());
  static ModuleElement zero(BundlePtr bundle, Exponent p = Exponent());

  const BundlePtr& bundle() const { return bundle_; }
  const Section& section() const { return section_; }
  const Vector& at(std::size_t x) const { return section_.at(x); }
  const Exponent& exponent() const { return exponent_; }
  ModuleElement with_exponent(Exponent p) const { return ModuleElement(bundle_, section_, p); }

  ModuleElement operator+(const ModuleElement& other) const;
  ModuleElement operator-(const ModuleElement& other) const;
  ModuleElement scaled(const Real& s) const;
  /// Action of a bounded function.
  ModuleElement times(const Function& f) const;
  /// 1_E . v
  ModuleElement restricted(PointSet set) const;

  /// The equivalence of the quotient: agreement at every non-negligible point.
  bool equivalent(const ModuleElement& other) const;

 private:
  void check_compatible(const ModuleElement& other) const;

  BundlePtr bundle_;
  Section section_;
  Exponent exponent_;
};

/// x -> ||v(x)||, zero on negligible points.
Function pointwise_norm(const ModuleElement& v);

/// (sum |v|^p mu)^(1/p) for finite p; the max of |v| over positive-mass
/// points for p = inf.
Real lp_module_norm(const ModuleElement& v);

/// sum |v|^p mu, the p-th power of the module norm. Finite p only.
Real lp_module_norm_pow(const ModuleElement& v);

/// The element equal to elements[n] on pieces[n]. Throws NotAPartition.
ModuleElement glue(const std::vector<PointSet>& pieces, const std::vector<ModuleElement>& elements);

// Fiberization
//
// Re-derives the fiber of a module at each positive-mass point from the
// martingale representatives: M_x is read off Leb_p(|v|), the seminorm from
// Rep_p(|v|)(x), and v -> [Rep(v)] is checked to be a pointwise-norm
// preserving bijection onto L^p_str of the bundle.

struct PointFiber {
  std::size_t point = 0;
  std::size_t fiber_dim = 0;
  /// Dimension of the span of {v(x) : v in the module}.
  std::size_t realized_rank = 0;
};

struct SeminormProbe {
  std::size_t element = 0;
  std::size_t point = 0;
  bool in_leb = false;
  /// Rep_p(|v|)(x).
  Real closed_form;
  /// Least sum of Rep_p(|v_i|)(x) over the sampled decompositions v = sum v_i.
  Real decomposition_infimum;
  /// ||v(x)|| in the bundle fiber.
  Real fiber_norm;
  /// Some sampled decomposition undercut the closed form.
  bool undercut = false;
  std::size_t decompositions = 0;
};

class FiberizationResult {
 public:
  const std::vector<PointFiber>& fibers() const { return fibers_; }
  const std::vector<SeminormProbe>& probes() const { return probes_; }

  /// ||v||_x = Rep_p(|v|)(x).
  Real seminorm(std::size_t x, const ModuleElement& v) const;
  /// iota_x(v), identified with the fiber vector v(x).
  Vector embed(std::size_t x, const ModuleElement& v) const;
  /// Rep(v): iota_x(v) on Leb_p(|v|), zero elsewhere.
  Section representative(const ModuleElement& v) const;

  /// Closed form = decomposition infimum = fiber norm for every probe.
  bool seminorm_consistent() const { return seminorm_consistent_; }
  /// Rep(a v + b w) = a Rep(v) + b Rep(w) on common Leb points.
  bool representatives_linear() const { return linear_; }
  /// ||[Rep(v)]|| = |v| for every probe.
  bool norms_preserved() const { return norms_preserved_; }
  /// Realized fibers fill the bundle fibers and the map has trivial kernel.
  bool bijective() const { return bijective_; }
  bool ok() const { return seminorm_consistent_ && linear_ && norms_preserved_ && bijective_; }

 private:
  friend FiberizationResult fiberize(const BundlePtr&, const PartitionChain&, const Rational&,
                                     const std::vector<ModuleElement>&, std::uint64_t);
  BundlePtr bundle_;
  std::shared_ptr<const PartitionChain> chain_;
  Rational p_;
  std::vector<PointFiber> fibers_;
  std::vector<SeminormProbe> probes_;
  bool seminorm_consistent_ = false;
  bool linear_ = false;
  bool norms_preserved_ = false;
  bool bijective_ = false;
};

/// Decomposition search: pool of kDecompositionPool random elements of the
/// module, decompositions into at most kDecompositionParts parts.
inline constexpr std::size_t kDecompositionPool = 32;
inline constexpr std::size_t kDecompositionParts = 3;

/// The module is L^p_str of the bundle, spanned by its generators(); `probes` are
/// the elements whose seminorms are evaluated. Throws ChainNotRefining.
FiberizationResult fiberize(const BundlePtr& bundle, const PartitionChain& chain, const Rational& p,
                            const std::vector<ModuleElement>& probes, std::uint64_t seed = 1);

}  // namespace nmforge
