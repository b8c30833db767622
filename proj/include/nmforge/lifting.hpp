#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nmforge/duality.hpp"
#include "nmforge/module.hpp"
#include "nmforge/pullback.hpp"

namespace nmforge {

/// Carriers up to this size get the set axioms checked over every pair of subsets.
inline constexpr std::size_t kExhaustiveLatticePoints = 12;
inline constexpr std::size_t kRandomSetPairs = 4096;

// Lifting
//
// Induced by a retraction t onto the positive-mass points:
// l(E) = t^{-1}(E cap supp mu) and l(f) = f o t.
class Lifting {
 public:
  const FiniteMeasureSpace& space() const { return space_; }
  const std::vector<std::size_t>& retraction() const { return retraction_; }
  std::size_t t(std::size_t x) const { return retraction_.at(x); }

  PointSet lift(PointSet set) const;
  Function lift(const Function& f) const;

 private:
  friend Lifting make_lifting(const FiniteMeasureSpace&, std::vector<std::size_t>);
  FiniteMeasureSpace space_;
  std::vector<std::size_t> retraction_;
  std::vector<PointSet> fibers_;  // t^{-1}(x)
};

/// Throws BadRetraction when t moves a positive-mass point or hits a null point.
Lifting make_lifting(const FiniteMeasureSpace& space, std::vector<std::size_t> retraction);
/// Null points sent to the first positive-mass point.
Lifting default_lifting(const FiniteMeasureSpace& space);

struct LiftingReport {
  bool exhaustive = false;
  std::size_t pairs_checked = 0;
  bool empty_set = true;     // l(0) = 0
  bool full_set = true;      // l(X) = X
  bool unions = true;        // l(E u F) = l(E) u l(F)
  bool intersections = true; // l(E n F) = l(E) n l(F)
  bool null_invariant = true;  // mu(E ^ F) = 0 => l(E) = l(F)
  bool same_class = true;    // mu(E ^ l(E)) = 0
  bool function_laws = true; // products, moduli, order, sup norm, projection
  std::string witness;
  bool ok() const {
    return empty_set && full_set && unions && intersections && null_invariant && same_class && function_laws;
  }
};

LiftingReport check_lifting(const Lifting& lifting, std::uint64_t seed = 1);

/// A_i = l({a_i}) for every positive-mass point a_i, in point order.
std::vector<PointSet> lifted_atoms(const Lifting& lifting);

struct AtomReport {
  bool dichotomy = true;  // l(E) contains A_i or misses it
  bool constant = true;   // l(f) constant on each A_i
  bool partition = true;  // the A_i partition the carrier
  std::string witness;
  bool ok() const { return dichotomy && constant && partition; }
};

AtomReport check_atoms(const Lifting& lifting, std::uint64_t seed = 1);

/// l_Y with phi o t_Y = t_X o phi; a null y goes to the smallest-index
/// positive-mass point of phi^{-1}(t_X(phi(y))). Throws MapNotMeasurePreserving.
Lifting compatible_lifting(const MeasurableMap& phi, const Lifting& lx);

struct CompatibilityReport {
  bool sets = true;       // l_Y(phi^{-1} E) = phi^{-1}(l_X E)
  bool functions = true;  // l_Y(f o phi) = l_X(f) o phi
  std::string witness;
  bool ok() const { return sets && functions; }
};

CompatibilityReport check_compatibility(const MeasurableMap& phi, const Lifting& lx, const Lifting& ly,
                                        std::uint64_t seed = 1);

// LiftedModule
//
// l M over the trivial ideal: fiber M_{t(x)} at x, elements x -> v(t(x)).
class LiftedModule {
 public:
  const Lifting& lifting() const { return lifting_; }
  const BundlePtr& source() const { return source_; }
  const BundlePtr& lifted() const { return lifted_; }

  ModuleElement lift(const ModuleElement& v) const;
  /// pi: the class of a lifted element back in M.
  ModuleElement quotient(const ModuleElement& lv) const;

 private:
  friend LiftedModule lift_module(const Lifting&, const BundlePtr&);
  Lifting lifting_;
  BundlePtr source_;
  BundlePtr lifted_;
};

/// Throws FiberMismatch when M does not live on the lifting's space.
LiftedModule lift_module(const Lifting& lifting, const BundlePtr& module);

struct LiftModuleReport {
  bool fibers = true;         // (l M)_x = M_{t(x)}
  bool norm_identity = true;  // |l v| = l(|v|)
  bool products = true;       // l(f v) = l(f) l(v)
  bool generates = true;      // sections of l M are sums f_i l(v_i)
  bool round_trip = true;     // pi o l is a bijection onto the quotient
  std::string witness;
  bool ok() const { return fibers && norm_identity && products && generates && round_trip; }
};

LiftModuleReport check_lifted_module(const LiftedModule& lm, const std::vector<ModuleElement>& probes,
                                     std::uint64_t seed = 1);

/// An L^inf-linear map between modules over the same base.
using Morphism = std::function<ModuleElement(const ModuleElement&)>;

/// |T|(x): the operator norm of T at x, zero on negligible points.
Function morphism_norm(const BundlePtr& from, const BundlePtr& to, const Morphism& T);

// LiftedMorphism
//
// l T, glued from l T(l(1_{x} e_j)) = l(T(1_{x} e_j)) over the lifted atoms.
class LiftedMorphism {
 public:
  LiftedMorphism(LiftedModule from, LiftedModule to, std::vector<std::vector<Vector>> columns);

  const LiftedModule& from() const { return from_; }
  const LiftedModule& to() const { return to_; }
  ModuleElement operator()(const ModuleElement& V) const;
  /// |l T|(x), from the glued matrix at x.
  const Function& norm() const { return norm_; }

 private:
  LiftedModule from_;
  LiftedModule to_;
  std::vector<std::vector<Vector>> columns_;  // columns_[x][j] = l T(e_j at x)(x)
  Function norm_;
};

LiftedMorphism lift_morphism(const LiftedModule& from, const LiftedModule& to, const Morphism& T);

struct MorphismReport {
  bool square = true;         // l T o l = l o T
  bool norm_identity = true;  // |l T| = l(|T|)
  std::string witness;
  bool ok() const { return square && norm_identity; }
};

MorphismReport check_lifted_morphism(const LiftedMorphism& lt, const Morphism& T,
                                     const std::vector<ModuleElement>& probes);

struct DiagramReport {
  bool fibers = true;   // l_Y(phi^*M) and phi^*(l_X M) have the same fibers
  bool commutes = true; // l_Y(phi^* v) = phi^*(l_X v)
  std::size_t probes = 0;
  std::string witness;
  bool ok() const { return fibers && commutes; }
};

/// Throws LiftingsNotCompatible when phi o t_Y != t_X o phi.
DiagramReport pullback_commutes(const PullbackModule& pb, const Lifting& lx, const Lifting& ly,
                                const std::vector<ModuleElement>& probes);

/// The lifted L^inf(mu): one-dimensional fibers with f -> f(x) an isomorphism.
bool fibre_r_check(const Lifting& lifting, std::uint64_t seed = 1);

// Duals through liftings

/// v -> class of x -> <w(x), l(v)(x)>, for w a weak section of the duals of
/// the lifted fibers.
Functional dual2_apply(const LiftedModule& lm, const Section& w, const Exponent& p);
/// The lifted weak section x -> (L(1_{t(x)} e_j)(t(x)))_j.
Section dual2_section(const LiftedModule& lm, const Functional& L, const Exponent& p);

/// The dual through the lifting realizes M* and agrees with the direct
/// construction of dual_module.
IsoReport verify_dual2(const LiftedModule& lm, const Exponent& p, const std::vector<ModuleElement>& probes,
                       std::uint64_t seed = 1);

/// Lifting route to (phi^*M)*: the weak section
/// y -> (L(phi^*(l_X 1_{t_X phi(y)} e_j))(t_Y y))_j over the lifted fibers.
Section dual_of_pullback_lifted(const DualOfPullback& dop, const Lifting& lx, const Lifting& ly, const Functional& L);

/// Route agreement with the direct realization, bijectivity and norms.
IsoReport verify_dpb2(const DualOfPullback& dop, const Lifting& lx, const Lifting& ly,
                      const std::vector<Functional>& functionals, const std::vector<ModuleElement>& probes);

}  // namespace nmforge
