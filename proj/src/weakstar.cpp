#include "nmforge/weakstar.hpp"

#include "nmforge/error.hpp"
#include "nmforge/random.hpp"

namespace nmforge {

namespace {

Function modulus(Function f) {
  for (auto& v : f) v = abs(v);
  return f;
}

Function power(Function f, const Rational& p) {
  for (auto& v : f) v = pow(v, p);
  return f;
}

Real sup_on_support(const FiniteMeasureSpace& space, const Function& f) {
  Real best;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (!space.is_null(i)) best = max(best, abs(f[i]));
  return best;
}

}  // namespace

Function pr(const MeasurableMap& phi, const Function& f) {
  if (f.size() != phi.source().size()) throw Error(Errc::DimensionMismatch, "function does not live on the source space");
  return radon_nikodym(pushforward(phi, f), phi.target());
}

PrReport check_pr(const MeasurableMap& phi, const Function& f, const Function& g) {
  PrReport r;
  const auto& X = phi.target();
  const auto& Y = phi.source();
  Function pf = pr(phi, f);
  Function pabs = pr(phi, modulus(f));
  for (std::size_t x = 0; x < X.size(); ++x)
    if (abs(pf[x]) > pabs[x]) {
      r.modulus = false;
      if (r.witness.empty()) r.witness = "|Pr f| > Pr |f| at '" + X.label(x) + "'";
    }
  if (!X.ae_equal(pr(phi, times(f, phi.compose(g))), times(g, pf))) {
    r.module_law = false;
    if (r.witness.empty()) r.witness = "Pr(f (g o phi)) != g Pr(f)";
  }
  if (X.l1_norm(pf) > Y.l1_norm(f) || sup_on_support(X, pf) > sup_on_support(Y, f)) {
    r.contraction = false;
    if (r.witness.empty()) r.witness = "Pr is not a contraction";
  }
  return r;
}

JensenVerdict jensen_check(const MeasurableMap& phi, PointSet E, const Function& f, const Rational& p) {
  const auto& Y = phi.source();
  const auto& X = phi.target();
  Function ind = indicator(E, Y.size());
  JensenVerdict v;
  v.lhs = power(modulus(pr(phi, times(ind, f))), p);
  Function mass = pr(phi, ind);
  Function moment = pr(phi, times(ind, power(modulus(f), p)));
  v.rhs = times(moment, power(mass, Rational(p - 1)));
  for (std::size_t x = 0; x < X.size(); ++x)
    if (!leq(v.lhs[x], v.rhs[x], kRootTolerance)) {
      v.holds = false;
      if (v.witness.empty())
        v.witness = "E = " + Y.describe(E) + " at '" + X.label(x) + "': " + v.lhs[x].str() + " > " + v.rhs[x].str();
    }
  return v;
}

Functional localized_functional(const PullbackModule& pb, const Functional& L, PointSet E) {
  Function ind = indicator(E, pb.map().source().size());
  MeasurableMap phi = pb.map();
  return [pb, L, ind, phi](const ModuleElement& v) { return pr(phi, times(ind, L(pb.pull(v)))); };
}

LocalizedReport check_localized(const PullbackModule& pb, const Functional& L, PointSet E,
                                const std::vector<ModuleElement>& probes, std::uint64_t seed) {
  LocalizedReport r;
  const auto& phi = pb.map();
  const auto& X = phi.target();
  const auto& M = pb.source();
  Functional LE = localized_functional(pb, L, E);
  Function Lnorm = pointwise_norm(section_of_functional(dual_module(pb.pulled(), pb.exponent()), L));
  Function envelope = pr(phi, times(indicator(E, phi.source().size()), Lnorm));
  Rng rng(seed);

  std::vector<ModuleElement> domain;
  for (const auto& s : M->localized_basis()) domain.emplace_back(M, s, pb.exponent());
  for (const auto& v : probes) domain.push_back(v);
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto& v = domain[i];
    Function f;
    for (std::size_t x = 0; x < X.size(); ++x) f.emplace_back(static_cast<long>(rng.uniform(-3, 3)));
    Function value = LE(v);
    if (!X.ae_equal(LE(v.times(f)), times(f, value)) ||
        !X.ae_equal(LE(v + domain[(i + 1) % domain.size()]), plus(value, LE(domain[(i + 1) % domain.size()])))) {
      r.linear = false;
      if (r.witness.empty()) r.witness = "L_E not L^inf-linear on element " + std::to_string(i);
    }
    Function bound = times(pointwise_norm(v), envelope);
    for (std::size_t x = 0; x < X.size(); ++x)
      if (!X.is_null(x) && !leq(abs(value[x]), bound[x], kRootTolerance)) {
        r.bound = false;
        if (r.witness.empty()) r.witness = "|L_E(v)| > |v| Pr(1_E |L|) at '" + X.label(x) + "'";
      }
  }
  return r;
}

Function embedded_action(const PullbackModule& pb, const Section& w, const ModuleElement& v) {
  const auto& phi = pb.map();
  const auto& Y = phi.source();
  Function out(Y.size());
  for (std::size_t y = 0; y < Y.size(); ++y)
    if (!Y.is_null(y)) out[y] = pair(w.at(y), v.at(phi(y)));
  return out;
}

ApproximationRun approximation_sequence(const PullbackModule& pb, const Functional& L, const PartitionChain& chain,
                                        const std::vector<ModuleElement>& probes, const Exponent& e,
                                        std::optional<std::size_t> levels) {
  const auto& phi = pb.map();
  const auto& Y = phi.source();
  const auto& M = pb.source();
  if (!(chain.space() == Y)) throw Error(Errc::DimensionMismatch, "chain does not live on the source space");
  std::size_t count = levels.value_or(chain.level_count());
  if (count == 0 || count > chain.level_count())
    throw Error(Errc::LevelOutOfRange, "requested " + std::to_string(count) + " levels, chain has " +
                                           std::to_string(chain.level_count()));
  if (!e.is_infinite() && e.value() <= 1) throw Error(Errc::BadExponents, "the run exponent must exceed 1");

  DualModule dual_M = dual_module(M, pb.exponent());
  auto pulled_dual = WeakBundle::dual_of(*pb.pulled());

  auto integral = [&](const Function& norms) {
    if (e.is_infinite()) return sup_on_support(Y, norms);
    Real sum;
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (!Y.is_null(y)) sum = sum + pow(norms[y], e.value()) * Real(Y.weight(y));
    return sum;
  };
  auto norms_of = [&](const Section& w) {
    Function out(Y.size());
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (!Y.is_null(y)) out[y] = pulled_dual->fiber(y).norm(w[y]);
    return out;
  };

  ApproximationRun run;
  run.exponent = e;
  run.integral = integral(pointwise_norm(section_of_functional(dual_module(pb.pulled(), pb.exponent()), L)));

  std::vector<Function> targets;
  for (const auto& v : probes) targets.push_back(L(pb.pull(v)));

  for (std::size_t k = 0; k < count; ++k) {
    LevelRecord rec;
    rec.level = k;
    rec.approximant = zero_section(*pb.pulled());
    bool separating = true;
    for (const auto& cell : chain.level(k)) {
      if (sgn(Y.mass(cell)) == 0) continue;
      for (std::size_t x = 0; x < phi.target().size(); ++x)
        if ((cell & Y.support() & phi.preimage(PointSet::singleton(x))).size() > 1) separating = false;
      DualElement eta = section_of_functional(dual_M, localized_functional(pb, L, cell));
      Function denominator = pr(phi, indicator(cell, Y.size()));
      for (auto y : cell.members()) {
        if (Y.is_null(y)) continue;
        const Real& d = denominator[phi(y)];
        if (d.sign() <= 0)
          throw Error(Errc::InvariantViolation, "Pr(1_E) vanishes at the image of '" + Y.label(y) + "'");
        rec.approximant[y] = scale(Real(1) / d, eta.at(phi(y)));
      }
      if (!e.is_infinite()) {
        for (std::size_t i = 0; i < targets.size(); ++i) {
          JensenVerdict j = jensen_check(phi, cell, targets[i], e.value());
          if (!j.holds) {
            rec.jensen_holds = false;
            run.jensen = false;
            if (run.witness.empty()) run.witness = "level " + std::to_string(k) + ", probe " + std::to_string(i) + ": " + j.witness;
          }
        }
      }
    }
    if (separating && !run.separating_level) run.separating_level = k;

    for (std::size_t i = 0; i < probes.size(); ++i) {
      Function diff = minus(embedded_action(pb, rec.approximant, probes[i]), targets[i]);
      rec.gaps.push_back(Y.l1_norm(diff));
    }
    rec.integral = integral(norms_of(rec.approximant));
    rec.bound_holds = leq(rec.integral, run.integral, kRootTolerance);
    if (!rec.bound_holds) {
      run.uniform_bound = false;
      if (run.witness.empty())
        run.witness = "level " + std::to_string(k) + ": int |L_k|^e = " + rec.integral.str() + " > " + run.integral.str();
    }
    if (run.separating_level) {
      for (std::size_t i = 0; i < rec.gaps.size(); ++i)
        if (!near(rec.gaps[i], Real(), kRootTolerance)) {
          run.gaps_vanish = false;
          if (run.witness.empty())
            run.witness = "level " + std::to_string(k) + ", probe " + std::to_string(i) + ": gap " + rec.gaps[i].str();
        }
    }
    if (!run.levels.empty())
      for (std::size_t i = 0; i < rec.gaps.size(); ++i)
        if (rec.gaps[i] > run.levels.back().gaps[i]) run.monotone = false;
    run.levels.push_back(std::move(rec));
  }
  return run;
}

}  // namespace nmforge
