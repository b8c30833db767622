#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmforge/duality.hpp"
#include "nmforge/pullback.hpp"

namespace nmforge {

/// Pr(f)(x) = sum_{y in phi^{-1}(x)} f(y) mu_Y(y) / mu_X(x), zero on null x.
/// Throws NotAbsolutelyContinuous.
Function pr(const MeasurableMap& phi, const Function& f);

struct PrReport {
  bool modulus = true;      // |Pr f| <= Pr |f|
  bool module_law = true;   // Pr(f (g o phi)) = g Pr(f)
  bool contraction = true;  // in L^1 and L^inf
  std::string witness;
  bool ok() const { return modulus && module_law && contraction; }
};

PrReport check_pr(const MeasurableMap& phi, const Function& f, const Function& g);

struct JensenVerdict {
  Function lhs;  // |Pr(1_E f)|^p
  Function rhs;  // Pr(1_E |f|^p) Pr(1_E)^{p-1}
  bool holds = true;
  std::string witness;
};

/// Exact for integer p, kRootTolerance otherwise.
JensenVerdict jensen_check(const MeasurableMap& phi, PointSet E, const Function& f, const Rational& p);

/// L_E(v) = Pr(1_E L(phi^* v)), a functional on M.
Functional localized_functional(const PullbackModule& pb, const Functional& L, PointSet E);

struct LocalizedReport {
  bool linear = true;  // L_E(f v) = f L_E(v), additive
  bool bound = true;   // |L_E(v)| <= |v| Pr(1_E |L|)
  std::string witness;
  bool ok() const { return linear && bound; }
};

LocalizedReport check_localized(const PullbackModule& pb, const Functional& L, PointSet E,
                                const std::vector<ModuleElement>& probes, std::uint64_t seed = 1);

struct LevelRecord {
  std::size_t level = 0;
  /// L_k as a dual section y -> L_k(y) of the duals of M_{phi(y)}.
  Section approximant;
  /// sum_y mu_Y(y) |I_phi(L_k)(phi^* v)(y) - L(phi^* v)(y)| per probe.
  std::vector<Real> gaps;
  /// int |L_k|^e d mu_Y (the max for e = inf).
  Real integral;
  bool bound_holds = true;
  bool jensen_holds = true;
};

// ApproximationRun
//
// The sequence L_k = sum_E 1_E phi^*L_E / (Pr(1_E) o phi) over the
// positive-mass cells of each chain level, compared with L on probes.
struct ApproximationRun {
  Exponent exponent;
  /// int |L|^e d mu_Y.
  Real integral;
  std::vector<LevelRecord> levels;
  /// First level whose positive-mass cells meet each fiber of phi in at most
  /// one positive-mass point; from there on L_k = L.
  std::optional<std::size_t> separating_level;
  bool gaps_vanish = true;
  bool uniform_bound = true;
  bool jensen = true;
  /// Informational: the L^1 gap is non-increasing in k for every probe.
  bool monotone = true;
  std::string witness;
  bool ok() const { return gaps_vanish && uniform_bound && jensen; }
};

/// `levels` caps the number of chain levels used. Throws LevelOutOfRange when
/// it exceeds the chain.
ApproximationRun approximation_sequence(const PullbackModule& pb, const Functional& L, const PartitionChain& chain,
                                        const std::vector<ModuleElement>& probes, const Exponent& e,
                                        std::optional<std::size_t> levels = std::nullopt);

/// I_phi(w)(phi^* v) = <w(y), v(phi(y))> for a dual section over the source.
Function embedded_action(const PullbackModule& pb, const Section& w, const ModuleElement& v);

}  // namespace nmforge
