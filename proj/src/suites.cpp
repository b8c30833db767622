#include "nmforge/suites.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nmforge/doob.hpp"
#include "nmforge/duality.hpp"
#include "nmforge/error.hpp"
#include "nmforge/lifting.hpp"
#include "nmforge/pullback.hpp"
#include "nmforge/random.hpp"
#include "nmforge/weakstar.hpp"

namespace nmforge {

std::size_t InstanceReport::failures() const {
  return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; }));
}

std::size_t Report::checks() const {
  std::size_t n = 0;
  for (const auto& i : instances) n += i.checks.size();
  return n;
}

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const auto& i : instances) n += i.failures();
  return n;
}

namespace {

class Sink {
 public:
  explicit Sink(std::vector<Check>& out) : out_(out) {}

  void add(std::string name, std::string context, bool pass, std::string witness = {}) {
    if (pass) witness.clear();
    out_.push_back(Check{std::move(name), std::move(context), pass, std::move(witness)});
  }

  template <class R>
  void report(const std::string& name, const std::string& context, const R& r) {
    add(name, context, r.ok(), r.witness.empty() ? "report flags failed" : r.witness);
  }

  /// Runs f; an escaping exception becomes a failed check under `name`.
  template <class F>
  void guard(const std::string& name, const std::string& context, F&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      add(name, context, false, std::string("unexpected error: ") + e.what());
    }
  }

  template <class F>
  void expect_error(const std::string& name, const std::string& context, Errc code, F&& f) {
    try {
      f();
      add(name, context, false, std::string("expected ") + std::string(errc_name(code)) + ", nothing raised");
    } catch (const Error& e) {
      add(name, context, e.code() == code, e.what());
    } catch (const std::exception& e) {
      add(name, context, false, e.what());
    }
  }

 private:
  std::vector<Check>& out_;
};

struct Env {
  const Scenario& sc;
  const SuiteOptions& opt;
  Sink& sink;
  Rng rng;
};

Function random_function(std::size_t n, Rng& rng, std::int64_t bound = 8) {
  Function f;
  for (std::size_t i = 0; i < n; ++i) f.emplace_back(static_cast<long>(rng.uniform(-bound, bound)));
  return f;
}

Section random_section(const std::vector<std::size_t>& dims, Rng& rng, std::int64_t bound = 8) {
  Section s;
  for (auto d : dims) {
    Vector v;
    for (std::size_t j = 0; j < d; ++j) v.emplace_back(static_cast<long>(rng.uniform(-bound, bound)));
    s.push_back(std::move(v));
  }
  return s;
}

std::vector<std::size_t> dims_of(const StrongBundle& b) {
  std::vector<std::size_t> d;
  for (const auto& f : b.fibers()) d.push_back(f.dim());
  return d;
}

ModuleElement random_element(const BundlePtr& b, const Exponent& p, Rng& rng) {
  return ModuleElement(b, random_section(dims_of(*b), rng), p);
}

PointSet random_set(std::size_t n, Rng& rng) { return PointSet(rng.next()) & PointSet::full(n); }

std::string describe(const Function& f) {
  std::string s = "(";
  for (std::size_t i = 0; i < f.size(); ++i) s += (i ? ", " : "") + f[i].str();
  return s + ")";
}

/// First positive-mass point where pred(i) fails, as a witness string.
template <class Pred>
std::string first_failure(const FiniteMeasureSpace& S, Pred pred) {
  for (std::size_t i = 0; i < S.size(); ++i)
    if (!S.is_null(i) && !pred(i)) return "at '" + S.label(i) + "'";
  return {};
}

Rational finite_p(const Exponent& p) {
  if (p.is_infinite() || p.value() <= 1) return Rational(2);
  return p.value();
}

std::vector<std::pair<std::string, Function>> functions_on(Env& env, const std::string& space, std::size_t at_least) {
  std::vector<std::pair<std::string, Function>> out;
  for (const auto& [name, f] : env.sc.functions)
    if (f.space == space) out.emplace_back(name, f.values);
  std::size_t n = env.sc.space(space).size();
  for (std::size_t k = 0; out.size() < at_least; ++k)
    out.emplace_back("random#" + std::to_string(k), random_function(n, env.rng));
  return out;
}

std::vector<ModuleElement> elements_of(Env& env, const std::string& bundle, const Exponent& p, std::size_t extra) {
  auto out = env.sc.elements(bundle, p);
  const auto& b = env.sc.bundle(bundle).bundle;
  for (std::size_t k = 0; k < extra; ++k) out.push_back(random_element(b, p, env.rng));
  return out;
}

// doob

void doob_suite(Env& env) {
  using namespace doob;
  auto& sink = env.sink;
  Rational P = finite_p(env.opt.p);
  Rational Q = P / (P - 1);
  for (const auto& [cname, entry] : env.sc.chains) {
    const auto& chain = entry.chain;
    const auto& S = chain.space();
    auto funcs = functions_on(env, entry.space, 2);
    for (const auto& [fname, f] : funcs) {
      std::string ctx = "chain " + cname + ", function " + fname;
      sink.guard("doob.contraction", ctx, [&] {
        for (std::size_t k = 0; k < chain.level_count(); ++k)
          if (S.l1_norm(cond_exp(chain, k, f)) > S.l1_norm(f))
            return sink.add("doob.contraction", ctx, false, "level " + std::to_string(k));
        sink.add("doob.contraction", ctx, true);
      });
      sink.guard("doob.tower", ctx, [&] {
        for (std::size_t j = 0; j < chain.level_count(); ++j)
          for (std::size_t k = 0; k < chain.level_count(); ++k)
            if (!S.ae_equal(cond_exp(chain, j, cond_exp(chain, k, f)), cond_exp(chain, std::min(j, k), f)))
              return sink.add("doob.tower", ctx, false, "P_" + std::to_string(j) + " P_" + std::to_string(k));
        sink.add("doob.tower", ctx, true);
      });
      if (!chain.fully_refining()) {
        sink.expect_error("doob.rep-needs-refining", ctx, Errc::ChainNotRefining, [&] { rep(chain, f); });
        continue;
      }
      sink.guard("doob.rep", ctx, [&] {
        RepResult r = rep(chain, f);
        bool same = S.ae_equal(r.rep, f);
        bool full = sgn(S.mass(S.carrier() - r.leb_set)) == 0;
        sink.add("doob.rep", ctx, same && full,
                 same ? "mass off Leb(f) is " + to_string(S.mass(S.carrier() - r.leb_set))
                      : "Rep(f) = " + describe(r.rep) + " differs from f = " + describe(f));
        for (std::size_t k = r.stabilization_level; k < chain.level_count(); ++k)
          if (!S.l1_norm(minus(cond_exp(chain, k, f), f)).is_zero())
            return sink.add("doob.l1-convergence", ctx, false, "level " + std::to_string(k));
        sink.add("doob.l1-convergence", ctx, true);
      });
    }
    for (std::size_t i = 0; i < funcs.size(); ++i) {
      const auto& [fname, f] = funcs[i];
      const auto& [gname, g] = funcs[(i + 1) % funcs.size()];
      std::string ctx = "chain " + cname + ", functions " + fname + ", " + gname;
      Real a(static_cast<long>(env.rng.uniform(-4, 4)));
      Real b(static_cast<long>(env.rng.uniform(-4, 4)));
      Function comb = plus(scaled(a, f), scaled(b, g));
      Function above = plus(f, abs(g));
      sink.guard("doob.linearity", ctx, [&] {
        for (std::size_t k = 0; k < chain.level_count(); ++k)
          if (!S.ae_equal(cond_exp(chain, k, comb), plus(scaled(a, cond_exp(chain, k, f)), scaled(b, cond_exp(chain, k, g)))))
            return sink.add("doob.linearity", ctx, false, "level " + std::to_string(k));
        if (chain.fully_refining()) {
          RepResult rf = rep(chain, f), rg = rep(chain, g), rc = rep(chain, comb);
          PointSet common = rf.leb_set & rg.leb_set & rc.leb_set;
          Function expect = plus(scaled(a, rf.rep), scaled(b, rg.rep));
          for (auto x : common.members())
            if (rc.rep[x] != expect[x]) return sink.add("doob.linearity", ctx, false, "Rep at '" + S.label(x) + "'");
        }
        sink.add("doob.linearity", ctx, true);
      });
      sink.guard("doob.monotone", ctx, [&] {
        for (std::size_t k = 0; k < chain.level_count(); ++k) {
          Function lo = cond_exp(chain, k, f), hi = cond_exp(chain, k, above);
          std::string w = first_failure(S, [&](std::size_t x) { return lo[x] <= hi[x]; });
          if (!w.empty()) return sink.add("doob.monotone", ctx, false, "level " + std::to_string(k) + " " + w);
        }
        if (chain.fully_refining()) {
          RepResult lo = rep(chain, f), hi = rep(chain, above);
          for (auto x : (lo.leb_set & hi.leb_set).members())
            if (lo.rep[x] > hi.rep[x]) return sink.add("doob.monotone", ctx, false, "Rep at '" + S.label(x) + "'");
        }
        sink.add("doob.monotone", ctx, true);
      });
      Function af = abs(f), ag = abs(g), ac = abs(comb);
      Real abs_a = nmforge::abs(a), abs_b = nmforge::abs(b);
      sink.guard("doob.rep-p-subadditive", ctx, [&] {
        for (std::size_t k = 0; k < chain.level_count(); ++k) {
          Function lhs = cond_exp_p(chain, k, P, ac);
          Function rhs = plus(scaled(abs_a, cond_exp_p(chain, k, P, af)), scaled(abs_b, cond_exp_p(chain, k, P, ag)));
          std::string w = first_failure(S, [&](std::size_t x) { return leq(lhs[x], rhs[x], kRootTolerance); });
          if (!w.empty()) return sink.add("doob.rep-p-subadditive", ctx, false, "level " + std::to_string(k) + " " + w);
        }
        if (chain.fully_refining()) {
          RepResult rc = rep_p(chain, P, ac), rf = rep_p(chain, P, af), rg = rep_p(chain, P, ag);
          for (auto x : (rc.leb_set & rf.leb_set & rg.leb_set).members())
            if (!leq(rc.rep[x], abs_a * rf.rep[x] + abs_b * rg.rep[x], kRootTolerance))
              return sink.add("doob.rep-p-subadditive", ctx, false, "Rep_p at '" + S.label(x) + "'");
        }
        sink.add("doob.rep-p-subadditive", ctx, true);
      });
      sink.guard("doob.holder", ctx, [&] {
        Function prod = times(af, ag);
        for (std::size_t k = 0; k < chain.level_count(); ++k) {
          Function lhs = cond_exp(chain, k, prod);
          Function rhs = times(cond_exp_p(chain, k, P, af), cond_exp_p(chain, k, Q, ag));
          std::string w = first_failure(S, [&](std::size_t x) { return leq(lhs[x], rhs[x], kRootTolerance); });
          if (!w.empty()) return sink.add("doob.holder", ctx, false, "level " + std::to_string(k) + " " + w);
        }
        if (chain.fully_refining()) {
          RepResult r = rep(chain, prod), rf = rep_p(chain, P, af), rg = rep_p(chain, Q, ag);
          for (auto x : (r.leb_set & rf.leb_set & rg.leb_set).members())
            if (!leq(r.rep[x], rf.rep[x] * rg.rep[x], kRootTolerance))
              return sink.add("doob.holder", ctx, false, "Rep at '" + S.label(x) + "'");
        }
        sink.add("doob.holder", ctx, true);
      });
    }
  }
}

// module-axioms

void fiber_checks(Env& env, const FiberSpace& F, const std::string& ctx) {
  auto& sink = env.sink;
  sink.guard("fiber.norm-axioms", ctx, [&] {
    DualFiberSpace D = dual_fiber(F);
    FiberSpace bidual = dual_fiber(D.space()).space();
    for (int trial = 0; trial < 16; ++trial) {
      Vector v = random_section({F.dim()}, env.rng)[0];
      Vector u = random_section({F.dim()}, env.rng)[0];
      Vector w = random_section({F.dim()}, env.rng)[0];
      Real s(static_cast<long>(env.rng.uniform(-5, 5)));
      std::string tag = "trial " + std::to_string(trial);
      if (F.norm(v).sign() < 0 || (F.norm(v).is_zero() != is_zero(v)))
        return sink.add("fiber.norm-axioms", ctx, false, tag + ": definiteness");
      if (!near(F.norm(scale(s, v)), abs(s) * F.norm(v), kRootTolerance))
        return sink.add("fiber.norm-axioms", ctx, false, tag + ": homogeneity");
      if (!leq(F.norm(add(u, v)), F.norm(u) + F.norm(v), kRootTolerance))
        return sink.add("fiber.norm-axioms", ctx, false, tag + ": triangle inequality");
      if (!near(bidual.norm(v), F.norm(v), kRootTolerance))
        return sink.add("fiber.norm-axioms", ctx, false, tag + ": bidual norm differs");
      if (!leq(abs(pair(w, v)), D.norm(w) * F.norm(v), kRootTolerance))
        return sink.add("fiber.norm-axioms", ctx, false, tag + ": pairing bound");
      if (!is_zero(w)) {
        Vector a = attaining_vector(F, w);
        if (!near(F.norm(a), Real(1), kRootTolerance) || !near(pair(w, a), D.norm(w), kRootTolerance))
          return sink.add("fiber.norm-axioms", ctx, false, tag + ": dual norm not attained");
      }
    }
    sink.add("fiber.norm-axioms", ctx, true);
  });
}

void module_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  for (const auto& [bname, entry] : env.sc.bundles) {
    const auto& b = entry.bundle;
    const auto& S = b->base();
    auto elems = elements_of(env, bname, p, 3);
    auto funcs = functions_on(env, entry.space, 1);
    std::string ctx = "bundle " + bname;

    std::vector<std::string> seen;
    for (std::size_t x = 0; x < b->size(); ++x) {
      std::string d = b->fiber(x).describe();
      if (std::find(seen.begin(), seen.end(), d) != seen.end()) continue;
      seen.push_back(d);
      fiber_checks(env, b->fiber(x), ctx + ", fiber " + d);
    }

    sink.guard("module.norm-axioms", ctx, [&] {
      ModuleElement zero = ModuleElement::zero(b, p);
      for (std::size_t i = 0; i < elems.size(); ++i) {
        const auto& v = elems[i];
        const auto& w = elems[(i + 1) % elems.size()];
        std::string tag = "element " + std::to_string(i);
        Function nv = pointwise_norm(v), nw = pointwise_norm(w), nsum = pointwise_norm(v + w);
        bool vanishes = std::all_of(nv.begin(), nv.end(), [](const Real& r) { return r.is_zero(); });
        if (vanishes != v.equivalent(zero))
          return sink.add("module.norm-axioms", ctx, false, tag + ": |v| = 0 does not match v = 0");
        std::string w1 = first_failure(S, [&](std::size_t x) {
          return nv[x].sign() >= 0 && leq(nsum[x], nv[x] + nw[x], kRootTolerance);
        });
        if (!w1.empty()) return sink.add("module.norm-axioms", ctx, false, tag + ": triangle " + w1);
        for (const auto& [fname, f] : funcs) {
          Function lhs = pointwise_norm(v.times(f)), rhs = times(doob::abs(f), nv);
          std::string w2 = first_failure(S, [&](std::size_t x) { return near(lhs[x], rhs[x], kRootTolerance); });
          if (!w2.empty()) return sink.add("module.norm-axioms", ctx, false, tag + ", |f v| with f = " + fname + " " + w2);
        }
      }
      sink.add("module.norm-axioms", ctx, true);
    });

    std::vector<std::pair<std::string, std::vector<PointSet>>> partitions;
    std::vector<PointSet> singles;
    for (std::size_t x = 0; x < S.size(); ++x) singles.push_back(PointSet::singleton(x));
    partitions.emplace_back("singletons", singles);
    for (const auto& [cname, c] : env.sc.chains)
      if (c.space == entry.space)
        for (std::size_t k = 0; k < c.chain.level_count(); ++k)
          partitions.emplace_back("chain " + cname + " level " + std::to_string(k), c.chain.level(k));
    for (const auto& [pname, pieces] : partitions) {
      std::string pctx = ctx + ", " + pname;
      sink.guard("module.glue", pctx, [&] {
        std::vector<ModuleElement> parts;
        for (std::size_t i = 0; i < pieces.size(); ++i) parts.push_back(elems[i % elems.size()]);
        ModuleElement glued = glue(pieces, parts);
        for (std::size_t i = 0; i < pieces.size(); ++i)
          if (!glued.restricted(pieces[i]).equivalent(parts[i].restricted(pieces[i])))
            return sink.add("module.glue", pctx, false, "piece " + S.describe(pieces[i]));
        for (std::size_t i = 0; i < elems.size(); ++i)
          if (!glue(pieces, std::vector<ModuleElement>(pieces.size(), elems[i])).equivalent(elems[i]))
            return sink.add("module.glue", pctx, false, "restrict then glue changes element " + std::to_string(i));
        sink.add("module.glue", pctx, true);
      });
    }
    sink.expect_error("module.glue-rejects-overlap", ctx, Errc::NotAPartition, [&] {
      glue({S.carrier(), PointSet::singleton(0)}, {elems[0], elems[0]});
    });

    sink.guard("module.congruence", ctx, [&] {
      for (std::size_t i = 0; i < elems.size(); ++i) {
        const auto& v = elems[i];
        Section s = v.section();
        Function f = funcs[0].second, g = f;
        for (std::size_t x = 0; x < S.size(); ++x)
          if (S.is_null(x)) {
            for (auto& c : s[x]) c = Real(static_cast<long>(env.rng.uniform(-8, 8)));
            g[x] = Real(static_cast<long>(env.rng.uniform(-8, 8)));
          }
        ModuleElement swapped(b, s, p);
        const auto& w = elems[(i + 1) % elems.size()];
        bool ok = swapped.equivalent(v) && (swapped + w).equivalent(v + w) && swapped.times(f).equivalent(v.times(f)) &&
                  v.times(g).equivalent(v.times(f)) && S.ae_equal(pointwise_norm(swapped), pointwise_norm(v));
        if (!ok) return sink.add("module.congruence", ctx, false, "representative swap changes element " + std::to_string(i));
      }
      sink.add("module.congruence", ctx, true);
    });

    std::vector<std::pair<std::string, PartitionChain>> chains;
    for (const auto& [cname, c] : env.sc.chains)
      if (c.space == entry.space && c.chain.fully_refining()) chains.emplace_back(cname, c.chain);
    if (chains.empty()) chains.emplace_back("singletons", build_chain(S, singles));
    for (const auto& [cname, chain] : chains) {
      std::string fctx = ctx + ", chain " + cname;
      sink.guard("module.fiberize", fctx, [&] {
        FiberizationResult r = fiberize(b, chain, finite_p(p), elems, env.opt.seed);
        std::string w;
        if (!r.seminorm_consistent()) {
          for (const auto& pr : r.probes())
            if (pr.undercut || !near(pr.closed_form, pr.fiber_norm, kRootTolerance) ||
                !near(pr.decomposition_infimum, pr.closed_form, kRootTolerance)) {
              w = "element " + std::to_string(pr.element) + " at '" + S.label(pr.point) + "': Rep_p = " +
                  pr.closed_form.str() + ", infimum = " + pr.decomposition_infimum.str() + ", fiber norm = " +
                  pr.fiber_norm.str();
              break;
            }
        } else if (!r.representatives_linear()) {
          w = "Rep is not linear";
        } else if (!r.norms_preserved()) {
          w = "|[Rep(v)]| differs from |v|";
        } else if (!r.bijective()) {
          w = "v -> [Rep(v)] is not a bijection";
        }
        sink.add("module.fiberize", fctx, r.ok(), w);
      });
    }
  }
}

// pullback

struct PullbackCase {
  std::string map;
  std::string bundle;
  std::string ctx;
};

std::vector<PullbackCase> pullback_cases(Env& env, bool require_preserving) {
  std::vector<PullbackCase> out;
  for (const auto& [mname, m] : env.sc.maps)
    for (const auto& [bname, b] : env.sc.bundles)
      if (b.space == m.target && (!require_preserving || m.map.measure_preserving()))
        out.push_back({mname, bname, "map " + mname + ", bundle " + bname});
  return out;
}

std::vector<std::pair<std::string, Section>> dual_sections_for(Env& env, const std::string& map,
                                                               const std::string& bundle) {
  std::vector<std::pair<std::string, Section>> out;
  for (const auto& [name, d] : env.sc.dual_sections)
    if (d.bundle == bundle && d.map && *d.map == map) out.emplace_back(name, d.values);
  return out;
}

void pullback_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  for (const auto& [mname, m] : env.sc.maps)
    for (const auto& [bname, b] : env.sc.bundles)
      if (b.space == m.target && !m.map.measure_preserving())
        sink.expect_error("pullback.requires-measure-preserving", "map " + mname + ", bundle " + bname,
                          Errc::MapNotMeasurePreserving, [&] { pullback_module(m.map, b.bundle, p); });

  for (const auto& c : pullback_cases(env, true)) {
    const auto& phi = env.sc.map(c.map).map;
    const auto& Y = phi.source();
    const auto& M = env.sc.bundle(c.bundle).bundle;
    auto elems = elements_of(env, c.bundle, p, 3);
    auto funcs = functions_on(env, env.sc.map(c.map).target, 1);
    sink.guard("pullback.construct", c.ctx, [&] {
      PullbackModule pb = pullback_module(phi, M, p);
      sink.add("pullback.construct", c.ctx, true);

      sink.guard("pullback.norm-identity", c.ctx, [&] {
        for (std::size_t i = 0; i < elems.size(); ++i) {
          Function lhs = pointwise_norm(pb.pull(elems[i]));
          Function rhs = phi.compose(pointwise_norm(elems[i]));
          if (!pb.norm_identity_holds(elems[i]) || !Y.ae_equal(lhs, rhs))
            return sink.add("pullback.norm-identity", c.ctx, false,
                            "element " + std::to_string(i) + ": " + describe(lhs) + " vs " + describe(rhs));
        }
        sink.add("pullback.norm-identity", c.ctx, true);
      });

      sink.guard("pullback.module-map", c.ctx, [&] {
        for (std::size_t i = 0; i < elems.size(); ++i) {
          const auto& v = elems[i];
          const auto& w = elems[(i + 1) % elems.size()];
          Real s(static_cast<long>(env.rng.uniform(-5, 5)));
          if (!pb.pull(v + w.scaled(s)).equivalent(pb.pull(v) + pb.pull(w).scaled(s)))
            return sink.add("pullback.module-map", c.ctx, false, "not linear on element " + std::to_string(i));
          for (const auto& [fname, f] : funcs)
            if (!pb.pull(v.times(f)).equivalent(pb.pull(v).times(phi.compose(f))))
              return sink.add("pullback.module-map", c.ctx, false,
                              "phi^*(f v) != (f o phi) phi^*v for f = " + fname + ", element " + std::to_string(i));
        }
        sink.add("pullback.module-map", c.ctx, true);
      });

      sink.guard("pullback.generation", c.ctx, [&] {
        for (int trial = 0; trial < 3; ++trial) {
          ModuleElement V = random_element(pb.pulled(), p, env.rng);
          ModuleElement sum = ModuleElement::zero(pb.pulled(), p);
          for (const auto& [f, v] : pb.generation_witness(V)) sum = sum + pb.pull(v).times(f);
          if (!sum.equivalent(V))
            return sink.add("pullback.generation", c.ctx, false, "witness does not rebuild trial " + std::to_string(trial));
        }
        sink.add("pullback.generation", c.ctx, true);
      });

      sink.guard("pullback.uniqueness", c.ctx, [&] {
        FormalPullback formal(pb);
        std::vector<ModuleElement> realized;
        for (const auto& v : elems) realized.push_back(pb.pull(v));
        for (int k = 0; k < 3; ++k) realized.push_back(random_element(pb.pulled(), p, env.rng));
        std::vector<FormalPullback::Element> formal_probes;
        for (std::size_t i = 0; i < formal.generator_count(); ++i) formal_probes.push_back(formal.generator(i));
        for (std::size_t i = 0; i + 1 < formal.generator_count() && i < 4; ++i)
          formal_probes.push_back(formal.combine(formal.generator(i), Real(static_cast<long>(env.rng.uniform(-4, 4))),
                                                 formal.generator(i + 1)));
        sink.report("pullback.uniqueness", c.ctx, verify_uniqueness(pb, realized, formal_probes));
      });

      auto pulled_dual = WeakBundle::dual_of(*pb.pulled());
      auto omegas = dual_sections_for(env, c.map, c.bundle);
      if (omegas.empty()) omegas.emplace_back("random", random_section(dims_of(*pb.pulled()), env.rng));
      for (const auto& [oname, omega] : omegas) {
        std::string ctx = c.ctx + ", dual section " + oname;
        sink.guard("pullback.extension", ctx, [&] {
          LocalOperator T = [&, omega = omega](const ModuleElement& v) {
            Function out(Y.size());
            for (std::size_t y = 0; y < Y.size(); ++y)
              if (!Y.is_null(y)) out[y] = pair(omega[y], v.at(phi(y)));
            return out;
          };
          Function g(Y.size());
          for (std::size_t y = 0; y < Y.size(); ++y)
            if (!Y.is_null(y)) g[y] = pulled_dual->fiber(y).norm(omega[y]);
          ExtendedOperator ext = extend_local_operator(pb, T, g);
          ExtendedOperator loose = extend_local_operator(pb, T, scaled(Real(2), g));
          for (std::size_t i = 0; i < elems.size(); ++i)
            if (!Y.ae_equal(ext.apply(pb.pull(elems[i])), T(elems[i])))
              return sink.add("pullback.extension", ctx, false, "T^(phi^*v) != T(v) on element " + std::to_string(i));
          for (int trial = 0; trial < 3; ++trial)
            if (!ext.dominated(random_element(pb.pulled(), p, env.rng)))
              return sink.add("pullback.extension", ctx, false, "|T^(V)| > g |V| on trial " + std::to_string(trial));
          if (!agree_on_generators(ext, loose))
            return sink.add("pullback.extension", ctx, false, "two extensions differ on generators");
          sink.add("pullback.extension", ctx, true);
        });
      }
      sink.guard("pullback.extension-zero", c.ctx, [&] {
        ExtendedOperator zero = extend_local_operator(
            pb, [&](const ModuleElement&) { return Function(Y.size()); }, Function(Y.size()));
        ModuleElement V = random_element(pb.pulled(), p, env.rng);
        Function out = zero.apply(V);
        sink.add("pullback.extension-zero", c.ctx,
                 std::all_of(out.begin(), out.end(), [](const Real& r) { return r.is_zero(); }), describe(out));
      });
      sink.expect_error("pullback.domination-fails", c.ctx, Errc::DominationFails, [&] {
        extend_local_operator(
            pb, [&](const ModuleElement& v) { return scaled(Real(2), phi.compose(pointwise_norm(v))); },
            Function(Y.size(), Real(1)));
      });

      sink.guard("pullback.bochner", c.ctx, [&] {
        auto point = make_space({"*"}, {Y.total_mass()});
        auto to_point = MeasurableMap::make(Y, point, std::vector<std::size_t>(Y.size(), 0));
        const FiberSpace& B = M->fiber(0);
        std::vector<Section> basis;
        for (std::size_t j = 0; j < B.dim(); ++j) {
          Vector e = zero_vector(B.dim());
          e[j] = Real(1);
          basis.push_back({e});
        }
        PullbackModule bochner = pullback_module(to_point, StrongBundle::make(point, {B}, basis), p);
        for (int trial = 0; trial < 3; ++trial) {
          ModuleElement V = random_element(bochner.pulled(), p, env.rng);
          Real classical;
          for (std::size_t y = 0; y < Y.size(); ++y) {
            if (Y.is_null(y)) continue;
            Real n = B.norm(V.at(y));
            classical = p.is_infinite() ? max(classical, n) : classical + pow(n, p.value()) * Real(Y.weight(y));
          }
          Real module = p.is_infinite() ? lp_module_norm(V) : lp_module_norm_pow(V);
          if (!near(module, classical, kRootTolerance))
            return sink.add("pullback.bochner", c.ctx, false, "module norm " + module.str() + " vs " + classical.str());
        }
        sink.add("pullback.bochner", c.ctx, true);
      });
    });
  }
}

// dual

bool dual_exponent_ok(const Exponent& p) { return p.is_infinite() || p.value() > 1; }

std::vector<DualElement> dual_probes(const DualModule& dm, Rng& rng, std::size_t extra) {
  std::vector<DualElement> out = dm.generators();
  std::vector<std::size_t> dims;
  for (std::size_t x = 0; x < dm.dual()->size(); ++x) dims.push_back(dm.dual()->fiber(x).dim());
  for (std::size_t k = 0; k < extra; ++k) out.push_back(dm.element(random_section(dims, rng)));
  out.push_back(DualElement::zero(dm.dual(), dm.q()));
  return out;
}

void dual_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  for (const auto& [bname, entry] : env.sc.bundles) {
    std::string ctx = "bundle " + bname;
    const auto& M = entry.bundle;
    sink.expect_error("dual.rejects-p-1", ctx, Errc::BadExponents, [&] { dual_module(M, Exponent(1)); });
    if (!dual_exponent_ok(p)) continue;
    auto elems = elements_of(env, bname, p, 3);
    sink.guard("dual.chardual", ctx, [&] {
      DualModule dm = dual_module(M, p);
      sink.report("dual.chardual", ctx, verify_chardual(dm, dual_probes(dm, env.rng, 3), elems, env.opt.seed));
      sink.guard("dual.ess-sup-norm", ctx, [&] {
        for (const auto& w : dual_probes(dm, env.rng, 2)) {
          Function sampled = ess_sup_norm(w, env.opt.seed), exact = pointwise_norm(w);
          std::string fail = first_failure(M->base(), [&](std::size_t x) { return near(sampled[x], exact[x], kRootTolerance); });
          if (!fail.empty()) return sink.add("dual.ess-sup-norm", ctx, false, "ess sup below |w| " + fail);
        }
        sink.add("dual.ess-sup-norm", ctx, true);
      });
    });
    if (!p.is_infinite()) sink.guard("dual.consistency", ctx, [&] { sink.report("dual.consistency", ctx, verify_consist_dual(M, p)); });
  }
}

// dual-of-pullback

void dual_of_pullback_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  if (!dual_exponent_ok(p)) return;
  for (const auto& c : pullback_cases(env, true)) {
    const auto& m = env.sc.map(c.map);
    const auto& phi = m.map;
    const auto& M = env.sc.bundle(c.bundle).bundle;
    auto elems = elements_of(env, c.bundle, p, 3);
    sink.guard("dual-of-pullback.construct", c.ctx, [&] {
      PullbackModule pb = pullback_module(phi, M, p);
      DualOfPullback dop = dual_of_pullback(pb);
      std::vector<DualElement> sections = dual_probes(dop.dual(), env.rng, 2);
      for (const auto& [name, s] : dual_sections_for(env, c.map, c.bundle)) sections.push_back(dop.dual().element(s));
      sink.report("dual-of-pullback.iso", c.ctx, verify_dual_of_pullback(dop, sections, elems, env.opt.seed));

      sink.guard("dual-of-pullback.embedded-image", c.ctx, [&] {
        DualModule dm = dual_module(M, p);
        for (const auto& eta : dual_probes(dm, env.rng, 2)) {
          Functional L = dop.apply(dop.pull(eta));
          for (std::size_t i = 0; i < elems.size(); ++i)
            if (!phi.source().ae_equal(L(pb.pull(elems[i])), phi.compose(weak_pairing(eta, elems[i].section()))))
              return sink.add("dual-of-pullback.embedded-image", c.ctx, false, "element " + std::to_string(i));
        }
        sink.add("dual-of-pullback.embedded-image", c.ctx, true);
      });

      sink.guard("dual-of-pullback.lifting-route", c.ctx, [&] {
        Lifting lx = env.sc.lifting_on(m.target);
        Lifting ly = compatible_lifting(phi, lx);
        std::vector<Functional> fns{random_functional(*pb.pulled(), env.opt.seed)};
        for (const auto& w : sections) fns.push_back(dop.apply(w));
        sink.report("dual-of-pullback.lifting-route", c.ctx, verify_dpb2(dop, lx, ly, fns, elems));
      });
    });
  }
}

// lifting

void lifting_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  for (const auto& [sname, S] : env.sc.spaces) {
    std::string ctx = "space " + sname;
    sink.guard("lifting.construct", ctx, [&] {
      Lifting l = env.sc.lifting_on(sname);
      sink.add("lifting.construct", ctx, true);
      sink.guard("lifting.axioms", ctx, [&] {
        LiftingReport r = check_lifting(l, env.opt.seed);
        bool expect_exhaustive = S.size() <= kExhaustiveLatticePoints;
        sink.add("lifting.axioms", ctx, r.ok() && r.exhaustive == expect_exhaustive,
                 r.witness.empty() ? "lattice coverage" : r.witness);
      });
      sink.guard("lifting.atoms", ctx, [&] { sink.report("lifting.atoms", ctx, check_atoms(l, env.opt.seed)); });
      sink.guard("lifting.fibre-r", ctx,
                 [&] { sink.add("lifting.fibre-r", ctx, fibre_r_check(l, env.opt.seed), "lifted L^inf fibers"); });

      for (const auto& [bname, entry] : env.sc.bundles) {
        if (entry.space != sname) continue;
        std::string bctx = ctx + ", bundle " + bname;
        const auto& M = entry.bundle;
        auto elems = elements_of(env, bname, p, 3);
        LiftedModule lm = lift_module(l, M);
        sink.guard("lifting.module", bctx, [&] { sink.report("lifting.module", bctx, check_lifted_module(lm, elems, env.opt.seed)); });

        std::vector<std::pair<std::string, Morphism>> morphisms;
        for (const auto& [fname, f] : functions_on(env, sname, 1))
          morphisms.emplace_back("multiply by " + fname, [f = f](const ModuleElement& v) { return v.times(f); });
        morphisms.emplace_back("zero", [](const ModuleElement& v) { return ModuleElement::zero(v.bundle(), v.exponent()); });
        morphisms.emplace_back("identity", [](const ModuleElement& v) { return v; });
        std::vector<std::vector<Vector>> matrix;
        for (std::size_t x = 0; x < S.size(); ++x) {
          std::size_t d = M->fiber(x).dim();
          matrix.push_back(random_section(std::vector<std::size_t>(d, d), env.rng, 3));
        }
        morphisms.emplace_back("pointwise matrix", [M = M, matrix](const ModuleElement& v) {
          Section s = zero_section(*M);
          for (std::size_t x = 0; x < s.size(); ++x)
            for (std::size_t r = 0; r < s[x].size(); ++r) s[x][r] = pair(matrix[x][r], v.at(x));
          return ModuleElement(M, std::move(s), v.exponent());
        });
        for (const auto& [tname, T] : morphisms) {
          std::string tctx = bctx + ", morphism " + tname;
          sink.guard("lifting.morphism", tctx, [&] {
            LiftedMorphism lt = lift_morphism(lm, lm, T);
            sink.report("lifting.morphism", tctx, check_lifted_morphism(lt, T, elems));
          });
        }
        if (dual_exponent_ok(p))
          sink.guard("lifting.dual", bctx, [&] { sink.report("lifting.dual", bctx, verify_dual2(lm, p, elems, env.opt.seed)); });
      }
    });
  }
  for (const auto& [mname, m] : env.sc.maps) {
    std::string ctx = "map " + mname;
    if (!m.map.measure_preserving()) {
      sink.expect_error("lifting.compatible-requires-measure-preserving", ctx, Errc::MapNotMeasurePreserving,
                        [&] { compatible_lifting(m.map, env.sc.lifting_on(m.target)); });
      continue;
    }
    sink.guard("lifting.compatible", ctx, [&] {
      Lifting lx = env.sc.lifting_on(m.target);
      Lifting ly = compatible_lifting(m.map, lx);
      for (std::size_t y = 0; y < m.map.source().size(); ++y)
        if (m.map(ly.t(y)) != lx.t(m.map(y)))
          return sink.add("lifting.compatible", ctx, false, "phi o t_Y != t_X o phi at '" + m.map.source().label(y) + "'");
      sink.report("lifting.compatible", ctx, check_compatibility(m.map, lx, ly, env.opt.seed));
    });
  }
}

// diagram

inline constexpr std::size_t kDiagramProbes = 16;

void diagram_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  for (const auto& c : pullback_cases(env, true)) {
    const auto& m = env.sc.map(c.map);
    const auto& phi = m.map;
    const auto& Y = phi.source();
    sink.guard("diagram.commutes", c.ctx, [&] {
      PullbackModule pb = pullback_module(phi, env.sc.bundle(c.bundle).bundle, p);
      Lifting lx = env.sc.lifting_on(m.target);
      Lifting ly = compatible_lifting(phi, lx);
      auto probes = env.sc.elements(c.bundle, p);
      probes.push_back(ModuleElement::zero(pb.source(), p));
      while (probes.size() < kDiagramProbes) probes.push_back(random_element(pb.source(), p, env.rng));
      probes.resize(kDiagramProbes, ModuleElement::zero(pb.source(), p));
      DiagramReport r = pullback_commutes(pb, lx, ly, probes);
      sink.add("diagram.commutes", c.ctx, r.ok() && r.probes >= kDiagramProbes,
               r.witness.empty() ? std::to_string(r.probes) + " probes evaluated" : r.witness);

      std::vector<std::size_t> t = ly.retraction();
      for (std::size_t y = 0; y < Y.size(); ++y) {
        if (!Y.is_null(y)) continue;
        for (std::size_t z = 0; z < Y.size(); ++z)
          if (!Y.is_null(z) && phi(z) != lx.t(phi(y))) {
            t[y] = z;
            Lifting bad = make_lifting(Y, t);
            sink.expect_error("diagram.rejects-incompatible", c.ctx + ", t_Y('" + Y.label(y) + "') = '" + Y.label(z) + "'",
                              Errc::LiftingsNotCompatible, [&] { pullback_commutes(pb, lx, bad, probes); });
            return;
          }
      }
    });
  }
}

// homloc

void homloc_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  if (!dual_exponent_ok(p)) return;
  for (const auto& c : pullback_cases(env, true)) {
    const auto& phi = env.sc.map(c.map).map;
    sink.guard("homloc.iso", c.ctx, [&] {
      PullbackModule pb = pullback_module(phi, env.sc.bundle(c.bundle).bundle, p);
      DualOfPullback dop = dual_of_pullback(pb);
      std::vector<Functional> fns{random_functional(*pb.pulled(), env.opt.seed),
                                  random_functional(*pb.pulled(), env.opt.seed + 1),
                                  [&](const ModuleElement&) { return Function(phi.source().size()); }};
      for (const auto& [name, s] : dual_sections_for(env, c.map, c.bundle)) fns.push_back(dop.apply(dop.dual().element(s)));
      sink.report("homloc.iso", c.ctx, verify_homloc(pb, fns, elements_of(env, c.bundle, p, 3), env.opt.seed));
    });
  }
}

// weakstar

inline constexpr int kJensenPairs = 8;

void weakstar_suite(Env& env) {
  auto& sink = env.sink;
  Exponent p = env.opt.p;
  for (const auto& [mname, m] : env.sc.maps) {
    if (!m.map.absolutely_continuous()) continue;
    const auto& phi = m.map;
    const auto& Y = phi.source();
    std::string ctx = "map " + mname;
    auto fy = functions_on(env, m.source, 2);
    auto gx = functions_on(env, m.target, 1);
    sink.guard("weakstar.pr", ctx, [&] {
      for (const auto& [fname, f] : fy)
        for (const auto& [gname, g] : gx) {
          PrReport r = check_pr(phi, f, g);
          if (!r.ok()) return sink.add("weakstar.pr", ctx, false, fname + ", " + gname + ": " + r.witness);
          if (phi.measure_preserving() && !phi.target().ae_equal(pr(phi, phi.compose(g)), g))
            return sink.add("weakstar.pr", ctx, false, "Pr(g o phi) != g for " + gname);
        }
      sink.add("weakstar.pr", ctx, true);
    });
    sink.guard("weakstar.jensen", ctx, [&] {
      for (int k = 0; k < kJensenPairs; ++k) {
        PointSet E = random_set(Y.size(), env.rng);
        Function f = k < static_cast<int>(fy.size()) ? fy[static_cast<std::size_t>(k)].second : random_function(Y.size(), env.rng);
        for (int q = 1; q <= 3; ++q) {
          JensenVerdict v = jensen_check(phi, E, f, Rational(q));
          if (!v.holds) return sink.add("weakstar.jensen", ctx, false, "p = " + std::to_string(q) + ", " + v.witness);
        }
      }
      sink.add("weakstar.jensen", ctx, true);
    });
  }

  if (!dual_exponent_ok(p)) return;
  std::vector<Exponent> exponents;
  if (env.opt.exponent) {
    exponents.push_back(*env.opt.exponent);
  } else {
    exponents.push_back(p);
    Exponent q = p.conjugate();
    if (q.is_infinite() || q.value() > 1) exponents.push_back(q);
  }
  for (const auto& c : pullback_cases(env, true)) {
    const auto& m = env.sc.map(c.map);
    const auto& phi = m.map;
    const auto& Y = phi.source();
    const auto& M = env.sc.bundle(c.bundle).bundle;
    auto elems = elements_of(env, c.bundle, p, 2);
    sink.guard("weakstar.construct", c.ctx, [&] {
      PullbackModule pb = pullback_module(phi, M, p);
      DualOfPullback dop = dual_of_pullback(pb);
      std::vector<std::pair<std::string, Functional>> fns;
      for (const auto& [name, s] : dual_sections_for(env, c.map, c.bundle))
        fns.emplace_back("dual section " + name, dop.apply(dop.dual().element(s)));
      fns.emplace_back("random functional", random_functional(*pb.pulled(), env.opt.seed));

      for (const auto& [lname, L] : fns) {
        std::string lctx = c.ctx + ", " + lname;
        sink.guard("weakstar.localized", lctx, [&] {
          for (PointSet E : {Y.carrier(), PointSet(), random_set(Y.size(), env.rng)}) {
            LocalizedReport r = check_localized(pb, L, E, elems, env.opt.seed);
            if (!r.ok()) return sink.add("weakstar.localized", lctx, false, "E = " + Y.describe(E) + ": " + r.witness);
          }
          sink.add("weakstar.localized", lctx, true);
        });
        for (const auto& [cname, chain] : env.sc.chains) {
          if (chain.space != m.source) continue;
          for (const auto& e : exponents) {
            std::string rctx = lctx + ", chain " + cname + ", e = " + e.str();
            sink.guard("weakstar.approximation", rctx, [&] {
              ApproximationRun run = approximation_sequence(pb, L, chain.chain, elems, e);
              sink.add("weakstar.approximation", rctx, run.ok(), run.witness);
            });
          }
        }
      }

      DualModule dm = dual_module(M, p);
      for (const auto& [cname, chain] : env.sc.chains) {
        if (chain.space != m.source) continue;
        std::string ectx = c.ctx + ", chain " + cname;
        sink.guard("weakstar.embedded-image", ectx, [&] {
          std::vector<std::size_t> dims;
          for (std::size_t x = 0; x < dm.dual()->size(); ++x) dims.push_back(dm.dual()->fiber(x).dim());
          DualElement eta = dm.element(random_section(dims, env.rng));
          ApproximationRun run = approximation_sequence(pb, dop.apply(dop.pull(eta)), chain.chain, elems, exponents.front());
          for (const auto& level : run.levels)
            for (std::size_t i = 0; i < level.gaps.size(); ++i)
              if (!level.gaps[i].is_zero())
                return sink.add("weakstar.embedded-image", ectx, false,
                                "level " + std::to_string(level.level) + ", probe " + std::to_string(i) + ": gap " +
                                    level.gaps[i].str());
          sink.add("weakstar.embedded-image", ectx, run.uniform_bound, run.witness);
        });
      }
    });
  }
}

using SuiteFn = void (*)(Env&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r{
      {"doob", doob_suite},
      {"module-axioms", module_suite},
      {"pullback", pullback_suite},
      {"dual", dual_suite},
      {"dual-of-pullback", dual_of_pullback_suite},
      {"lifting", lifting_suite},
      {"diagram", diagram_suite},
      {"homloc", homloc_suite},
      {"weakstar", weakstar_suite},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    n.push_back("all");
    return n;
  }();
  return names;
}

std::vector<Check> run_checks(const std::string& suite, const Scenario& scenario, const SuiteOptions& options) {
  std::vector<SuiteFn> selected;
  for (const auto& [name, fn] : registry())
    if (suite == "all" || suite == name) selected.push_back(fn);
  if (selected.empty()) throw Error(Errc::UnknownSuite, "'" + suite + "'");
  std::vector<Check> out;
  Sink sink(out);
  Env env{scenario, options, sink, Rng(options.seed)};
  for (auto fn : selected) fn(env);
  return out;
}

Report run_suite(const std::string& suite, const Scenario& scenario, const std::string& label,
                 const SuiteOptions& options) {
  auto start = std::chrono::steady_clock::now();
  Report r{suite, {InstanceReport{label, run_checks(suite, scenario, options)}}, 0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Report run_suite(const std::string& suite, std::uint64_t first, std::uint64_t last, const SuiteOptions& options,
                 const SizeProfile& profile) {
  if (std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw Error(Errc::UnknownSuite, "'" + suite + "'");
  auto start = std::chrono::steady_clock::now();
  Report r{suite, {}, 0};
  for (std::uint64_t seed = first; seed <= last; ++seed) {
    InstanceReport inst{"seed " + std::to_string(seed), {}};
    try {
      Scenario sc = generate_instance(seed, profile);
      SuiteOptions opt = options;
      opt.seed = seed;
      inst.checks = run_checks(suite, sc, opt);
    } catch (const std::exception& e) {
      inst.checks.push_back(Check{"generate", "", false, e.what()});
    }
    r.instances.push_back(std::move(inst));
    if (seed == last) break;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string format_text(const Report& report, bool timing) {
  std::ostringstream out;
  for (const auto& inst : report.instances) {
    out << "== " << inst.instance << ": " << inst.checks.size() << " checks, " << inst.failures() << " failed\n";
    for (const auto& c : inst.checks)
      if (!c.pass) out << "FAIL " << c.name << " [" << c.context << "]: " << c.witness << "\n";
  }
  out << (report.ok() ? "PASS" : "FAIL") << " suite " << report.suite << ": " << report.instances.size()
      << " instances, " << report.checks() << " checks, " << report.failures() << " failed\n";
  if (timing) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "time %.3f s\n", report.seconds);
    out << buf;
  }
  return out.str();
}

std::string format_json(const Report& report, bool timing) {
  nlohmann::ordered_json j;
  j["suite"] = report.suite;
  j["pass"] = report.ok();
  j["checks"] = report.checks();
  j["failures"] = report.failures();
  j["instances"] = nlohmann::ordered_json::array();
  for (const auto& inst : report.instances) {
    nlohmann::ordered_json i;
    i["instance"] = inst.instance;
    i["failures"] = inst.failures();
    i["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : inst.checks)
      i["checks"].push_back({{"name", c.name}, {"context", c.context}, {"pass", c.pass}, {"witness", c.witness}});
    j["instances"].push_back(std::move(i));
  }
  if (timing) j["seconds"] = report.seconds;
  return j.dump(2) + "\n";
}

}  // namespace nmforge
