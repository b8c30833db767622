#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nmforge/module.hpp"

namespace nmforge {

// PullbackModule
//
// phi^*M realized as sections of the pulled-back bundle y -> M_{phi(y)} over
// the source of a measure-preserving map, together with the pullback map
// v -> v o phi.
class PullbackModule {
 public:
  const MeasurableMap& map() const { return map_; }
  const BundlePtr& source() const { return source_; }
  const BundlePtr& pulled() const { return pulled_; }
  const Exponent& exponent() const { return exponent_; }

  /// phi^* v. Throws FiberMismatch when v is not an element of the source.
  ModuleElement pull(const ModuleElement& v) const;
  /// f o phi.
  Function pull(const Function& f) const { return map_.compose(f); }

  /// |phi^* v| == |v| o phi off mu_Y-null points.
  bool norm_identity_holds(const ModuleElement& v) const;

  /// Terms (f_i, v_i) with V = sum_i f_i phi^* v_i, using point-localized
  /// basis elements v_i of the source.
  std::vector<std::pair<Function, ModuleElement>> generation_witness(const ModuleElement& V) const;

 private:
  friend PullbackModule pullback_module(const MeasurableMap&, const BundlePtr&, Exponent);
  MeasurableMap map_;
  BundlePtr source_;
  BundlePtr pulled_;
  Exponent exponent_;
};

/// Throws MapNotMeasurePreserving, FiberMismatch.
PullbackModule pullback_module(const MeasurableMap& phi, const BundlePtr& module, Exponent p = Exponent());

// FormalPullback
//
// Second, independent realization of phi^*M: formal sums sum_i c_i phi^*g_i
// over the generators g_i of M, with pointwise norm
// y -> ||sum_i c_i(y) g_i(phi(y))|| and quotient by norm zero.
class FormalPullback {
 public:
  struct Element {
    /// One coefficient function on the source space per generator.
    std::vector<Function> coefficients;
  };

  explicit FormalPullback(const PullbackModule& pb);

  std::size_t generator_count() const { return generators_.size(); }
  Element generator(std::size_t i) const;
  Element combine(const Element& a, const Real& s, const Element& b) const;  // a + s b
  Function pointwise_norm(const Element& e) const;
  bool equivalent(const Element& a, const Element& b) const;

  /// The canonical isomorphism matching phi^*g_i with the i-th generator.
  /// Throws InvariantViolation when V(y) is outside the span of the g_i(phi(y)).
  Element from_realized(const ModuleElement& V) const;
  ModuleElement to_realized(const Element& e) const;

 private:
  PullbackModule pb_;
  std::vector<Section> generators_;
};

/// Outcome of comparing the two realizations of phi^*M.
struct UniquenessReport {
  bool generators_matched = true;
  bool norm_preserving = true;
  bool round_trip_realized = true;
  bool round_trip_formal = true;
  std::string witness;
  bool ok() const { return generators_matched && norm_preserving && round_trip_realized && round_trip_formal; }
};

UniquenessReport verify_uniqueness(const PullbackModule& pb, const std::vector<ModuleElement>& realized_probes,
                                   const std::vector<FormalPullback::Element>& formal_probes);

/// A linear map M -> L^1(mu_Y), given as a black box.
using LocalOperator = std::function<Function(const ModuleElement&)>;

// ExtendedOperator
//
// The unique extension T^ of a dominated local operator T to phi^*M, stored as
// its kernel y -> eta(y) in the dual of M_{phi(y)}: T^(V)(y) = <eta(y), V(y)>.
class ExtendedOperator {
 public:
  ExtendedOperator(PullbackModule pb, Section kernel, Function bound)
      : pb_(std::move(pb)), kernel_(std::move(kernel)), bound_(std::move(bound)) {}

  const PullbackModule& pullback() const { return pb_; }
  const Section& kernel() const { return kernel_; }
  const Function& bound() const { return bound_; }

  Function apply(const ModuleElement& V) const;
  /// |T^(V)| <= g |V| at every mu_Y-positive point.
  bool dominated(const ModuleElement& V) const;

 private:
  PullbackModule pb_;
  Section kernel_;
  Function bound_;
};

/// Checks |T(v)| <= g (|v| o phi) on the localized basis and test sections of
/// M and builds T^. Throws DominationFails with the failing section.
ExtendedOperator extend_local_operator(const PullbackModule& pb, const LocalOperator& op, const Function& bound);

/// Two extensions agree on every phi^* of a localized basis element.
bool agree_on_generators(const ExtendedOperator& a, const ExtendedOperator& b);

}  // namespace nmforge
