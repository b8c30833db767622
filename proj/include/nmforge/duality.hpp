#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nmforge/module.hpp"
#include "nmforge/pullback.hpp"

namespace nmforge {

// WeakBundle
//
// Dual fibers over a finite base, tested against sections of the predual
// fibers. At finite dimension every functional is defined on the whole fiber.
class WeakBundle {
 public:
  /// Throws DimensionMismatch.
  static std::shared_ptr<const WeakBundle> make(FiniteMeasureSpace base, std::vector<FiberSpace> preduals,
                                                std::vector<Section> test_vectors = {},
                                                NullIdeal ideal = NullIdeal::Measure);
  /// Fiberwise dual of a strong bundle; its test sections become the test vectors.
  static std::shared_ptr<const WeakBundle> dual_of(const StrongBundle& bundle);

  const FiniteMeasureSpace& base() const { return base_; }
  std::size_t size() const { return base_.size(); }
  const DualFiberSpace& fiber(std::size_t x) const { return fibers_.at(x); }
  const FiberSpace& predual(std::size_t x) const { return fibers_.at(x).predual(); }
  const std::vector<Section>& test_vectors() const { return test_vectors_; }
  NullIdeal ideal() const { return ideal_; }
  bool negligible(std::size_t x) const { return ideal_ == NullIdeal::Measure && base_.is_null(x); }

  /// Same base, predual fibers and ideal.
  bool same_shape(const WeakBundle& other) const;
  /// The predual fibers match the fibers of `bundle`.
  bool predual_of(const StrongBundle& bundle) const;

 private:
  FiniteMeasureSpace base_;
  std::vector<DualFiberSpace> fibers_;
  std::vector<Section> test_vectors_;
  NullIdeal ideal_ = NullIdeal::Measure;
};

using WeakBundlePtr = std::shared_ptr<const WeakBundle>;

// DualElement
//
// Weak section of dual fibers up to agreement off the ideal, canonicalized to
// zero on negligible points, with exponent q (finite or inf).
class DualElement {
 public:
  /// Throws DimensionMismatch.
  DualElement(WeakBundlePtr bundle, Section section, Exponent q = Exponent());
  static DualElement zero(WeakBundlePtr bundle, Exponent q = Exponent());

  const WeakBundlePtr& bundle() const { return bundle_; }
  const Section& section() const { return section_; }
  const Vector& at(std::size_t x) const { return section_.at(x); }
  const Exponent& exponent() const { return exponent_; }

  DualElement operator+(const DualElement& other) const;
  DualElement operator-(const DualElement& other) const;
  DualElement scaled(const Real& s) const;
  DualElement times(const Function& f) const;
  bool equivalent(const DualElement& other) const;

 private:
  WeakBundlePtr bundle_;
  Section section_;
  Exponent exponent_;
};

/// x -> ||w(x)||' in the dual fiber.
Function pointwise_norm(const DualElement& w);
Real lp_module_norm(const DualElement& w);

/// <w, v>(x) = <w(x), v(x)>, zero on negligible points.
Function weak_pairing(const DualElement& w, const Section& v);

/// |<w, v>| <= |w| ||v(.)|| at every non-negligible point.
bool dualnorm_bound_holds(const DualElement& w, const Section& v);

/// Sections with ||v(x)|| <= 1 everywhere: the dual-norm attaining vectors of
/// `w` localized at each point, then kRandomUnitSections random unit sections.
inline constexpr std::size_t kRandomUnitSections = 64;
/// An empty `w` gives only the random sections.
std::vector<Section> unit_pool(const WeakBundle& bundle, const Section& w, std::uint64_t seed = 1);

/// The essential supremum of <w, v> over the unit pool: a lower bound for the
/// dual norm that the attaining vectors make exact.
Function ess_sup_norm(const DualElement& w, std::uint64_t seed = 1);

/// An L^inf-linear map from a module to functions on a measure space.
using Functional = std::function<Function(const ModuleElement&)>;

// DualModule
//
// M* realized as weak sections of the dual fibers. Finite p gives the
// L^q-normed dual of maps into L^1; p = inf gives the L^inf-normed dual of
// maps into L^inf.
class DualModule {
 public:
  const BundlePtr& primal() const { return primal_; }
  const WeakBundlePtr& dual() const { return dual_; }
  const Exponent& p() const { return p_; }
  const Exponent& q() const { return q_; }

  DualElement element(Section s) const { return DualElement(dual_, std::move(s), q_); }
  /// 1_{x} e_j^* for every non-negligible x and dual basis vector e_j^*.
  std::vector<DualElement> generators() const;

 private:
  friend DualModule dual_module(const BundlePtr&, const Exponent&);
  BundlePtr primal_;
  WeakBundlePtr dual_;
  Exponent p_;
  Exponent q_;
};

/// Throws BadExponents unless p > 1.
DualModule dual_module(const BundlePtr& module, const Exponent& p);

/// I(w): v -> class of x -> <w(x), v(x)>. Throws FiberMismatch.
Functional iso_sections_to_dual(const DualElement& w, const BundlePtr& module);

/// I^{-1}(L): the section x -> (L(1_{x} e_j)(x))_j.
DualElement section_of_functional(const DualModule& dual, const Functional& L);

/// Outcome of an instance check of an isomorphism onto a dual module.
struct IsoReport {
  bool injective = true;
  bool surjective = true;
  bool linear = true;
  bool norm_preserving = true;
  bool bound = true;
  /// Two constructions of the same dual give the same canonical sections.
  bool routes_agree = true;
  std::string witness;
  bool ok() const { return injective && surjective && linear && norm_preserving && bound && routes_agree; }
  void fail(bool IsoReport::*flag, std::string what);
  void merge(const IsoReport& other);
};

/// A functional given only as a black box, v -> x -> <a(x), A(x) v(x)> with
/// random a and A; used to exercise surjectivity.
Functional random_functional(const StrongBundle& bundle, std::uint64_t seed);

/// Checks I on the instance: J(I(w)) = w, I(J(L)) = L on black-box functionals,
/// L^inf-linearity, |I(w)| = |w| through the unit pool, and the pairing bound.
IsoReport verify_chardual(const DualModule& dual, const std::vector<DualElement>& sections,
                          const std::vector<ModuleElement>& probes, std::uint64_t seed = 1);

// HomLocElement
//
// The local operator v -> L(phi^* v) from M to L^1(mu_Y), together with its
// kernel y -> eta(y) in the dual of M_{phi(y)} and pointwise norm |T|.
class HomLocElement {
 public:
  HomLocElement(PullbackModule pb, LocalOperator op, Section kernel);

  const PullbackModule& pullback() const { return pb_; }
  Function operator()(const ModuleElement& v) const { return op_(v); }
  const LocalOperator& op() const { return op_; }
  const Section& kernel() const { return kernel_; }
  /// |T|(y) = ||eta(y)||'.
  const Function& norm() const { return norm_; }
  /// Ess sup of T(v)(y) over |v| o phi <= 1, sampled: a lower bound for |T|.
  Function sampled_norm(std::uint64_t seed = 1) const;

 private:
  PullbackModule pb_;
  LocalOperator op_;
  Section kernel_;
  Function norm_;
};

/// I(L)(v) = L(phi^* v).
HomLocElement homloc_iso(const PullbackModule& pb, const Functional& L);
/// The inverse, built with extend_local_operator and g = |T|.
Functional homloc_inverse(const HomLocElement& T);

IsoReport verify_homloc(const PullbackModule& pb, const std::vector<Functional>& functionals,
                        const std::vector<ModuleElement>& probes, std::uint64_t seed = 1);

// DualOfPullback
//
// (phi^*M)* realized as weak sections y -> w(y) of the duals of M_{phi(y)},
// with the isomorphism I(w)(V) = class of y -> <w(y), V(y)>.
class DualOfPullback {
 public:
  const PullbackModule& pullback() const { return pb_; }
  const DualModule& dual() const { return dual_; }

  Functional apply(const DualElement& w) const { return iso_sections_to_dual(w, pb_.pulled()); }
  DualElement section(const Functional& L) const { return section_of_functional(dual_, L); }
  /// y -> eta(phi(y)) for a dual element over the base: the embedding of phi^*(M*).
  DualElement pull(const DualElement& eta) const;

 private:
  friend DualOfPullback dual_of_pullback(const PullbackModule&);
  PullbackModule pb_;
  DualModule dual_;
};

/// Throws MapNotMeasurePreserving.
DualOfPullback dual_of_pullback(const PullbackModule& pb);

/// verify_chardual on the pulled module, plus I(w)(phi^* v) = <w, v o phi> and
/// |I(w)(phi^* v)| <= |w| (|v| o phi) on the probes.
IsoReport verify_dual_of_pullback(const DualOfPullback& dop, const std::vector<DualElement>& sections,
                                  const std::vector<ModuleElement>& probes, std::uint64_t seed = 1);

// C_p and R
//
// On a finite carrier every section has bounded and p-integrable pointwise
// norm, so both maps keep the section and change the exponent.

/// L^inf-normed element re-normed by the L^p norm.
ModuleElement cp(const ModuleElement& v, const Exponent& p);
/// L^p-normed element seen in the L^inf-normed module.
ModuleElement restrict_bounded(const ModuleElement& v);

struct ConsistencyReport {
  bool sections_preserved = true;
  bool duals_agree = true;
  std::string witness;
  bool ok() const { return sections_preserved && duals_agree; }
};

/// Compares the L^inf dual of M with R of the L^q dual of C_p(M) on generators.
ConsistencyReport verify_consist_dual(const BundlePtr& module, const Exponent& p);

}  // namespace nmforge
