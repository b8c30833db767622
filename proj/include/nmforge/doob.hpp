#pragma once

#include <cstddef>

#include "nmforge/measure.hpp"

namespace nmforge::doob {

/// Result of the martingale-limit representative selection.
struct RepResult {
  /// Points where P_k(f)(x) converges. On a finite chain this is every point.
  PointSet leb_set;
  /// The limit on leb_set, zero elsewhere.
  Function rep;
  /// Smallest k with P_j(f) == P_k(f) for every j >= k.
  std::size_t stabilization_level = 0;
};

/// P_k(f): the mu-average of f on each positive-mass cell of level k, zero
/// on zero-mass cells. Throws LevelOutOfRange.
Function cond_exp(const PartitionChain& chain, std::size_t k, const Function& f);

/// Leb/Rep of f. Throws ChainNotRefining when the chain does not isolate
/// every positive-mass point.
RepResult rep(const PartitionChain& chain, const Function& f);

/// Leb_p(f) = Leb(f^p) and Rep_p(f) = Rep(f^p)^(1/p) for f >= 0 and
/// rational p > 1. Throws NegativeInput, BadExponents, ChainNotRefining.
RepResult rep_p(const PartitionChain& chain, const Rational& p, const Function& f);

/// P_k(f^p)^(1/p), the level-k proxy of Rep_p.
Function cond_exp_p(const PartitionChain& chain, std::size_t k, const Rational& p, const Function& f);

/// Pointwise |f|.
Function abs(const Function& f);

}  // namespace nmforge::doob
