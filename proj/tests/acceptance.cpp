// Acceptance run: one PASS/FAIL line per criterion. Values produced by the
// library are compared with the reference computations in oracles.hpp.

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nmforge/doob.hpp"
#include "nmforge/duality.hpp"
#include "nmforge/error.hpp"
#include "nmforge/lifting.hpp"
#include "nmforge/pullback.hpp"
#include "nmforge/random.hpp"
#include "nmforge/scenario.hpp"
#include "nmforge/suites.hpp"
#include "nmforge/weakstar.hpp"
#include "oracles.hpp"

using namespace nmforge;

namespace {

constexpr std::uint64_t kInstances = 100;
constexpr int kJensenPairs = 200;
constexpr double kTolerance = kRootTolerance;

class Tally {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failed_;
    if (first_.empty()) first_ = what;
  }
  std::size_t checks() const { return checks_; }
  std::size_t failed() const { return failed_; }
  const std::string& first_failure() const { return first_; }

 private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::string first_;
};

std::string seed_label(std::uint64_t seed) { return "seed " + std::to_string(seed); }

oracle::Vec exact_values(const std::vector<Real>& f) {
  oracle::Vec out;
  for (const auto& r : f) {
    if (!r.exact()) throw Error(Errc::InvariantViolation, "expected an exact value, got " + r.str());
    out.push_back(r.rational());
  }
  return out;
}

Function as_function(const oracle::Vec& v) {
  Function f;
  for (const auto& q : v) f.emplace_back(q);
  return f;
}

oracle::Vec random_rationals(std::size_t n, Rng& rng, std::int64_t lo = -9) {
  oracle::Vec v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(rng.rational(lo, 9, 6));
  return v;
}

Section random_section(const StrongBundle& b, Rng& rng) {
  Section s;
  for (const auto& f : b.fibers()) {
    Vector v;
    for (std::size_t j = 0; j < f.dim(); ++j) v.emplace_back(static_cast<long>(rng.uniform(-8, 8)));
    s.push_back(std::move(v));
  }
  return s;
}

Section random_dual_section(const WeakBundle& b, Rng& rng) {
  Section s;
  for (std::size_t x = 0; x < b.size(); ++x) {
    Vector v;
    for (std::size_t j = 0; j < b.fiber(x).dim(); ++j) v.emplace_back(static_cast<long>(rng.uniform(-8, 8)));
    s.push_back(std::move(v));
  }
  return s;
}

std::vector<ModuleElement> probes_of(const Scenario& sc, const Exponent& p, Rng& rng) {
  auto out = sc.elements("M", p);
  const auto& M = sc.bundle("M").bundle;
  out.emplace_back(M, random_section(*M, rng), p);
  out.push_back(ModuleElement::zero(M, p));
  return out;
}

oracle::Vec weights_of(const FiniteMeasureSpace& S) { return oracle::Vec(S.weights().begin(), S.weights().end()); }

/// Fiber norm computed from the definition; nullopt for l2, whose value is a root.
std::optional<oracle::Q> reference_norm(const FiberSpace& fiber, const Vector& v) {
  auto values = exact_values(v);
  if (fiber.family() == FiberSpace::Family::Polyhedral) {
    std::vector<oracle::Vec> g;
    for (const auto& row : fiber.functionals()) g.emplace_back(row.begin(), row.end());
    return oracle::norm_poly(g, values);
  }
  oracle::Vec weighted(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) weighted[i] = fiber.weights()[i] * values[i];
  switch (fiber.index()) {
    case LpIndex::One: return oracle::norm_l1(weighted);
    case LpIndex::Inf: return oracle::norm_linf(weighted);
    case LpIndex::Two: return std::nullopt;
  }
  return std::nullopt;
}

bool same(const Real& a, const Real& b, bool exact) { return exact ? a == b : near(a, b, kTolerance); }

// 1. P_k against the oracle, L1 contraction, tower law and Rep.
void doob_criterion(const std::vector<Scenario>& instances, Tally& t) {
  auto suite = run_suite("doob", 1, kInstances);
  t.expect(suite.ok(), "doob suite: " + std::to_string(suite.failures()) + " failed checks");
  Rng rng(1001);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& [cname, entry] : instances[i].chains) {
      const auto& chain = entry.chain;
      const auto& S = chain.space();
      std::string ctx = seed_label(i + 1) + ", chain " + cname;
      auto w = weights_of(S);
      std::size_t n = S.size();
      std::vector<std::uint64_t> masks;
      for (auto g : chain.generators()) masks.push_back(g.bits());
      for (int trial = 0; trial < 3; ++trial) {
        auto f = random_rationals(n, rng), g = random_rationals(n, rng);
        oracle::Vec diff(n);
        for (std::size_t x = 0; x < n; ++x) diff[x] = f[x] - g[x];
        std::vector<oracle::Vec> pf;
        for (std::size_t k = 0; k < chain.level_count(); ++k) {
          auto cells = oracle::atoms(n, std::vector<std::uint64_t>(masks.begin(), masks.begin() + static_cast<long>(k)));
          auto got = exact_values(doob::cond_exp(chain, k, as_function(f)));
          t.expect(got == oracle::cond_exp(w, cells, f), ctx + ": P_" + std::to_string(k) + " differs from the oracle");
          auto gg = exact_values(doob::cond_exp(chain, k, as_function(g)));
          oracle::Vec gap(n);
          for (std::size_t x = 0; x < n; ++x) gap[x] = got[x] - gg[x];
          t.expect(oracle::l1(w, gap) <= oracle::l1(w, diff), ctx + ": P_" + std::to_string(k) + " expands L1");
          pf.push_back(got);
        }
        for (std::size_t j = 0; j < chain.level_count(); ++j)
          for (std::size_t k = 0; k < chain.level_count(); ++k) {
            auto tower = exact_values(doob::cond_exp(chain, j, as_function(pf[k])));
            bool equal = true;
            for (std::size_t x = 0; x < n; ++x) equal = equal && (S.is_null(x) || tower[x] == pf[std::min(j, k)][x]);
            t.expect(equal, ctx + ": tower law at (" + std::to_string(j) + ", " + std::to_string(k) + ")");
          }
        auto r = doob::rep(chain, as_function(f));
        t.expect(S.ae_equal(r.rep, as_function(f)), ctx + ": pi(Rep f) != f");
        t.expect(S.mass(S.carrier() - r.leb_set) == 0, ctx + ": Leb(f) misses mass");
      }
    }
  }
}

// 2. Subadditivity and Hoelder for the p = q = 2 proxies and for Rep_2.
void rep_p_criterion(const std::vector<Scenario>& instances, Tally& t) {
  Rng rng(1002);
  const Rational two(2);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& [cname, entry] : instances[i].chains) {
      const auto& chain = entry.chain;
      const auto& S = chain.space();
      std::string ctx = seed_label(i + 1) + ", chain " + cname;
      std::size_t n = S.size();
      auto w = weights_of(S);
      std::vector<std::uint64_t> masks;
      for (auto g : chain.generators()) masks.push_back(g.bits());
      auto fo = random_rationals(n, rng, 0), go = random_rationals(n, rng, 0);
      auto f = as_function(fo), g = as_function(go);
      auto fg = times(f, g);
      oracle::Vec f2(n), g2(n), fgo(n);
      for (std::size_t x = 0; x < n; ++x) {
        f2[x] = fo[x] * fo[x];
        g2[x] = go[x] * go[x];
        fgo[x] = fo[x] * go[x];
      }
      for (std::size_t k = 0; k < chain.level_count(); ++k) {
        std::string at = ctx + ", level " + std::to_string(k);
        auto sum = doob::cond_exp_p(chain, k, two, plus(f, g));
        auto a = doob::cond_exp_p(chain, k, two, f);
        auto b = doob::cond_exp_p(chain, k, two, g);
        auto cells = oracle::atoms(n, std::vector<std::uint64_t>(masks.begin(), masks.begin() + static_cast<long>(k)));
        auto ef2 = oracle::cond_exp(w, cells, f2), eg2 = oracle::cond_exp(w, cells, g2), efg = oracle::cond_exp(w, cells, fgo);
        for (std::size_t x = 0; x < n; ++x) {
          t.expect(leq(sum[x], a[x] + b[x], kTolerance), at + ": subadditivity");
          t.expect(near(a[x] * a[x], Real(ef2[x]), kTolerance), at + ": proxy differs from the oracle");
          t.expect(leq(Real(efg[x]), a[x] * b[x], kTolerance), at + ": Hoelder");
        }
      }
      auto rf = doob::rep_p(chain, two, f), rg = doob::rep_p(chain, two, g), rs = doob::rep_p(chain, two, plus(f, g));
      auto rfg = doob::rep(chain, fg);
      for (std::size_t x = 0; x < n; ++x) {
        if (S.is_null(x)) continue;
        t.expect(leq(rs.rep[x], rf.rep[x] + rg.rep[x], kTolerance), ctx + ": Rep_2 subadditivity");
        t.expect(leq(rfg.rep[x], rf.rep[x] * rg.rep[x], kTolerance), ctx + ": Rep Hoelder");
      }
    }
  }
}

// 3. Fiberization of L^p_str on the refining chain of X.
void module_criterion(const std::vector<Scenario>& instances, Tally& t) {
  Rng rng(1003);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sc = instances[i];
    const auto& M = sc.bundle("M").bundle;
    const auto& chain = sc.chain("cX").chain;
    std::string ctx = seed_label(i + 1);
    auto probes = probes_of(sc, Exponent(2), rng);
    auto r = fiberize(M, chain, Rational(2), probes, i + 1);
    t.expect(r.bijective(), ctx + ": v -> [Rep(v)] is not a bijection");
    t.expect(r.norms_preserved(), ctx + ": pointwise norm not preserved");
    t.expect(r.ok(), ctx + ": fiberization report failed");
    for (const auto& v : probes) {
      ModuleElement rep(M, r.representative(v), Exponent(2));
      auto a = pointwise_norm(rep), b = pointwise_norm(v);
      for (std::size_t x = 0; x < M->size(); ++x) t.expect(same(a[x], b[x], a[x].exact() && b[x].exact()), ctx + ": |Rep(v)| != |v|");
    }
    for (const auto& probe : r.probes()) {
      if (!probe.in_leb) continue;
      std::string at = ctx + ", point " + M->base().label(probe.point);
      t.expect(near(probe.decomposition_infimum, probe.closed_form, kTolerance), at + ": decomposition infimum");
      t.expect(near(probe.closed_form, probe.fiber_norm, kTolerance), at + ": seminorm != fiber norm");
      if (M->fiber(probe.point).polytope_ball())
        t.expect(probe.closed_form.exact() && probe.closed_form == probe.fiber_norm, at + ": seminorm not exact");
    }
  }
}

// 4. Pullback norm identity, uniqueness of phi^*M and the Bochner norm.
void pullback_criterion(const std::vector<Scenario>& instances, Tally& t) {
  Rng rng(1004);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sc = instances[i];
    const auto& phi = sc.map("phi").map;
    const auto& M = sc.bundle("M").bundle;
    const auto& Y = phi.source();
    std::string ctx = seed_label(i + 1);
    auto pb = pullback_module(phi, M);
    auto probes = probes_of(sc, Exponent(2), rng);
    std::vector<ModuleElement> pulled;
    for (const auto& v : probes) {
      auto V = pb.pull(v);
      pulled.push_back(V);
      auto lhs = pointwise_norm(V), base = pointwise_norm(v);
      for (std::size_t y = 0; y < Y.size(); ++y) {
        if (Y.is_null(y)) continue;
        t.expect(lhs[y] == base[phi(y)], ctx + ": |phi^* v| != |v| o phi at " + Y.label(y));
        if (auto ref = reference_norm(M->fiber(phi(y)), v.at(phi(y))))
          t.expect(lhs[y].exact() && lhs[y].rational() == *ref, ctx + ": pulled norm differs from the oracle");
      }
    }
    pulled.emplace_back(pb.pulled(), random_section(*pb.pulled(), rng));
    FormalPullback formal(pb);
    std::vector<FormalPullback::Element> formal_probes;
    for (std::size_t g = 0; g < formal.generator_count(); ++g) formal_probes.push_back(formal.generator(g));
    if (formal.generator_count() > 1)
      formal_probes.push_back(formal.combine(formal.generator(0), Real(-3), formal.generator(1)));
    auto u = verify_uniqueness(pb, pulled, formal_probes);
    t.expect(u.ok(), ctx + ": uniqueness " + u.witness);

    auto point = make_space({"*"}, {Y.total_mass()});
    auto to_point = MeasurableMap::make(Y, point, std::vector<std::size_t>(Y.size(), 0));
    std::size_t d = M->fiber(0).dim();
    for (auto index : {LpIndex::One, LpIndex::Inf}) {
      auto B = FiberSpace::lp(d, index);
      for (auto p : {Exponent(1), Exponent(2), Exponent(3), Exponent::infinity()}) {
        auto bochner = pullback_module(to_point, StrongBundle::uniform(point, B), p);
        ModuleElement V(bochner.pulled(), random_section(*bochner.pulled(), rng), p);
        oracle::Q classical = 0;
        for (std::size_t y = 0; y < Y.size(); ++y) {
          if (Y.is_null(y)) continue;
          auto values = exact_values(V.at(y));
          oracle::Q n = index == LpIndex::One ? oracle::norm_l1(values) : oracle::norm_linf(values);
          if (p.is_infinite())
            classical = std::max(classical, n);
          else
            classical += Y.weight(y) * oracle::power(n, static_cast<unsigned>(p.value().get_num().get_ui()));
        }
        Real got = p.is_infinite() ? lp_module_norm(V) : lp_module_norm_pow(V);
        t.expect(got.exact() && got.rational() == classical, ctx + ": Bochner norm, p = " + p.str());
      }
    }
  }
}

// 5. I for M*, the isomorphism for (phi^*M)* and the two routes to it.
void duality_criterion(const std::vector<Scenario>& instances, Tally& t) {
  Rng rng(1005);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sc = instances[i];
    const auto& phi = sc.map("phi").map;
    const auto& M = sc.bundle("M").bundle;
    const auto& Y = phi.source();
    std::string ctx = seed_label(i + 1);
    auto probes = probes_of(sc, Exponent(2), rng);

    auto dm = dual_module(M, Exponent(2));
    auto sections = dm.generators();
    sections.push_back(dm.element(random_dual_section(*dm.dual(), rng)));
    auto chardual = verify_chardual(dm, sections, probes, i + 1);
    t.expect(chardual.ok(), ctx + ": chardual " + chardual.witness);

    auto pb = pullback_module(phi, M);
    auto dop = dual_of_pullback(pb);
    std::vector<DualElement> dsections = dop.dual().generators();
    dsections.push_back(dop.dual().element(sc.dual_section("omega").values));
    dsections.push_back(dop.dual().element(random_dual_section(*dop.dual().dual(), rng)));
    auto iso = verify_dual_of_pullback(dop, dsections, probes, i + 1);
    t.expect(iso.ok(), ctx + ": dual of pullback " + iso.witness);

    auto lx = sc.lifting_on("X");
    auto ly = compatible_lifting(phi, lx);
    std::vector<Functional> fns{random_functional(*pb.pulled(), i + 1)};
    for (const auto& w : dsections) fns.push_back(dop.apply(w));
    for (std::size_t k = 0; k < fns.size(); ++k) {
      auto lifted = dual_of_pullback_lifted(dop, lx, ly, fns[k]);
      auto direct = dop.section(fns[k]);
      for (std::size_t y = 0; y < Y.size(); ++y) {
        if (Y.is_null(y)) continue;
        bool exact = M->fiber(phi(y)).polytope_ball();
        bool agree = lifted[y].size() == direct.at(y).size();
        for (std::size_t j = 0; agree && j < lifted[y].size(); ++j) agree = same(lifted[y][j], direct.at(y)[j], exact);
        t.expect(agree, ctx + ": routes differ for functional " + std::to_string(k) + " at " + Y.label(y));
      }
    }
    auto routes = verify_dpb2(dop, lx, ly, fns, probes);
    t.expect(routes.ok(), ctx + ": lifting route " + routes.witness);
  }
}

// 6. Lifting axioms, lifted modules and morphisms, atoms and the pullback square.
void lifting_criterion(const std::vector<Scenario>& instances, Tally& t) {
  for (const char* suite : {"lifting", "diagram"}) {
    auto r = run_suite(suite, 1, kInstances);
    t.expect(r.ok(), std::string(suite) + " suite: " + std::to_string(r.failures()) + " failed checks");
  }
  Rng rng(1006);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sc = instances[i];
    const auto& phi = sc.map("phi").map;
    const auto& M = sc.bundle("M").bundle;
    std::string ctx = seed_label(i + 1);
    auto lx = sc.lifting_on("X");
    auto ly = compatible_lifting(phi, lx);
    for (const auto* l : {&lx, &ly}) {
      auto r = check_lifting(*l, i + 1);
      t.expect(r.ok() && r.exhaustive, ctx + ": lifting axioms " + r.witness);
      auto a = check_atoms(*l, i + 1);
      t.expect(a.ok(), ctx + ": atoms " + a.witness);
      const auto& S = l->space();
      for (std::size_t x = 0; x < S.size(); ++x) {
        if (S.is_null(x)) continue;
        PointSet expected;
        for (std::size_t z = 0; z < S.size(); ++z)
          if (l->t(z) == x) expected.insert(z);
        t.expect(l->lift(PointSet::singleton(x)) == expected, ctx + ": lifted atom of " + S.label(x));
      }
    }
    auto c = check_compatibility(phi, lx, ly, i + 1);
    t.expect(c.ok(), ctx + ": compatibility " + c.witness);

    auto probes = probes_of(sc, Exponent::infinity(), rng);
    auto lm = lift_module(lx, M);
    auto report = check_lifted_module(lm, probes, i + 1);
    t.expect(report.ok(), ctx + ": lifted module " + report.witness);
    const auto& X = M->base();
    for (const auto& v : probes) {
      auto lv = lm.lift(v);
      t.expect(pointwise_norm(lv) == lx.lift(pointwise_norm(v)), ctx + ": |l v| != l(|v|)");
      t.expect(lm.quotient(lv).equivalent(v), ctx + ": pi(l v) != v");
      Function f;
      for (std::size_t x = 0; x < X.size(); ++x) f.emplace_back(static_cast<long>(rng.uniform(-5, 5)));
      t.expect(lm.lift(v.times(f)).section() == lm.lift(v).times(lx.lift(f)).section(), ctx + ": l(f v) != l(f) l(v)");
    }
    Function f;
    for (std::size_t x = 0; x < X.size(); ++x) f.emplace_back(static_cast<long>(rng.uniform(-5, 5)));
    Morphism T = [f](const ModuleElement& e) { return e.times(f); };
    auto lt = lift_morphism(lm, lm, T);
    auto mr = check_lifted_morphism(lt, T, probes);
    t.expect(mr.ok(), ctx + ": lifted morphism " + mr.witness);
    t.expect(lt.norm() == lx.lift(morphism_norm(M, M, T)), ctx + ": |l T| != l(|T|)");

    auto pb = pullback_module(phi, M, Exponent::infinity());
    auto d = pullback_commutes(pb, lx, ly, probes);
    t.expect(d.ok(), ctx + ": pullback square " + d.witness);
  }

  // A 12-point carrier gets the full 2^12 x 2^12 lattice check.
  std::vector<std::string> labels;
  std::vector<Rational> weights;
  for (std::size_t x = 0; x < kExhaustiveLatticePoints; ++x) {
    labels.push_back("p" + std::to_string(x));
    weights.push_back(x % 3 == 2 ? Rational(0) : Rational(1, static_cast<unsigned long>(x + 1)));
  }
  auto S = make_space(labels, weights);
  std::vector<std::size_t> retraction(S.size());
  for (std::size_t x = 0; x < S.size(); ++x) retraction[x] = S.is_null(x) ? (x * 7) % 12 / 3 * 3 : x;
  auto big = make_lifting(S, retraction);
  auto r = check_lifting(big);
  t.expect(r.ok() && r.exhaustive && r.pairs_checked == (std::size_t{1} << 24), "12-point carrier: " + r.witness);
  t.expect(check_atoms(big).ok(), "12-point carrier: atoms");
}

// 7. Hom_loc is isometrically isomorphic to (phi^*M)*.
void homloc_criterion(const std::vector<Scenario>& instances, Tally& t) {
  Rng rng(1007);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sc = instances[i];
    const auto& phi = sc.map("phi").map;
    const auto& M = sc.bundle("M").bundle;
    const auto& Y = phi.source();
    std::string ctx = seed_label(i + 1);
    auto probes = probes_of(sc, Exponent(2), rng);
    auto pb = pullback_module(phi, M);
    auto dop = dual_of_pullback(pb);
    std::vector<Functional> fns{dop.apply(dop.dual().element(sc.dual_section("omega").values)),
                                dop.apply(dop.dual().element(random_dual_section(*dop.dual().dual(), rng))),
                                random_functional(*pb.pulled(), i + 1)};
    auto r = verify_homloc(pb, fns, probes, i + 1);
    t.expect(r.ok(), ctx + ": homloc " + r.witness);
    for (std::size_t k = 0; k < fns.size(); ++k) {
      auto T = homloc_iso(pb, fns[k]);
      auto back = homloc_inverse(T);
      auto norm = pointwise_norm(dop.section(fns[k]));
      for (std::size_t y = 0; y < Y.size(); ++y)
        if (!Y.is_null(y)) t.expect(T.norm()[y] == norm[y], ctx + ": |T| != |L| at " + Y.label(y));
      for (const auto& v : probes) {
        auto V = pb.pull(v);
        t.expect(Y.ae_equal(T(v), fns[k](V)), ctx + ": T(v) != L(phi^* v)");
        t.expect(Y.ae_equal(back(V), fns[k](V)), ctx + ": inverse does not recover L");
      }
    }
  }
}

// 8. Pr, the Jensen step, the canonical L_k run and the uniform bound.
void weakstar_criterion(const std::vector<Scenario>& instances, const Scenario& canonical, Tally& t) {
  auto suite = run_suite("weakstar", 1, kInstances);
  t.expect(suite.ok(), "weakstar suite: " + std::to_string(suite.failures()) + " failed checks");

  Rng rng(1008);
  for (int k = 0; k < kJensenPairs; ++k) {
    const auto& sc = instances[static_cast<std::size_t>(k) % instances.size()];
    const auto& phi = sc.map("phi").map;
    const auto& Y = phi.source();
    const auto& X = phi.target();
    std::string ctx = "pair " + std::to_string(k);
    auto wy = weights_of(Y), wx = weights_of(X);
    std::size_t ny = Y.size();
    auto f = random_rationals(ny, rng), g = random_rationals(X.size(), rng);
    PointSet E = PointSet(rng.next()) & Y.carrier();

    auto prf = oracle::pr(phi.assignment(), wy, wx, f);
    t.expect(exact_values(pr(phi, as_function(f))) == prf, ctx + ": Pr differs from the oracle");
    oracle::Vec fg(ny), af(ny);
    for (std::size_t y = 0; y < ny; ++y) {
      fg[y] = f[y] * g[phi(y)];
      af[y] = oracle::qabs(f[y]);
    }
    auto law = oracle::pr(phi.assignment(), wy, wx, fg), modulus = oracle::pr(phi.assignment(), wy, wx, af);
    auto got = exact_values(pr(phi, as_function(fg)));
    for (std::size_t x = 0; x < X.size(); ++x) {
      t.expect(got[x] == g[x] * prf[x], ctx + ": Pr(f (g o phi)) != g Pr(f)");
      t.expect(oracle::qabs(prf[x]) <= modulus[x], ctx + ": |Pr f| > Pr |f|");
    }
    t.expect(check_pr(phi, as_function(f), as_function(g)).ok(), ctx + ": Pr report");

    for (unsigned p : {1u, 2u, 3u}) {
      oracle::Vec ef(ny), efp(ny), ones(ny);
      for (std::size_t y = 0; y < ny; ++y) {
        bool in = E.contains(y);
        ef[y] = in ? f[y] : oracle::Q(0);
        efp[y] = in ? oracle::power(oracle::qabs(f[y]), p) : oracle::Q(0);
        ones[y] = in ? 1 : 0;
      }
      auto a = oracle::pr(phi.assignment(), wy, wx, ef);
      auto b = oracle::pr(phi.assignment(), wy, wx, efp);
      auto c = oracle::pr(phi.assignment(), wy, wx, ones);
      auto verdict = jensen_check(phi, E, as_function(f), Rational(p));
      t.expect(verdict.holds, ctx + ": Jensen step, p = " + std::to_string(p));
      auto lhs = exact_values(verdict.lhs), rhs = exact_values(verdict.rhs);
      for (std::size_t x = 0; x < X.size(); ++x) {
        oracle::Q ol = oracle::power(oracle::qabs(a[x]), p), orr = b[x] * oracle::power(c[x], p - 1);
        t.expect(ol <= orr && lhs[x] == ol && rhs[x] == orr, ctx + ": Jensen sides differ from the oracle");
      }
    }
  }

  {
    const auto& phi = canonical.map("phi").map;
    auto pb = pullback_module(phi, canonical.bundle("M").bundle);
    auto dop = dual_of_pullback(pb);
    auto L = dop.apply(dop.dual().element(canonical.dual_section("omega").values));
    auto v = canonical.elements("M").front();
    auto run = approximation_sequence(pb, L, canonical.chain("cY").chain, {v}, Exponent(2));
    bool shape = run.levels.size() == 2 && run.separating_level == std::optional<std::size_t>(1);
    t.expect(shape, "canonical: expected two levels, separating at 1");
    if (shape) {
      const auto& g0 = run.levels[0].gaps[0];
      const auto& g1 = run.levels[1].gaps[0];
      t.expect(g0.exact() && g0.rational() == Rational(1, 4), "canonical: level 0 gap " + g0.str() + ", expected 1/4");
      t.expect(g1.exact() && g1.is_zero(), "canonical: refining level gap " + g1.str() + ", expected 0");
    }
  }

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& sc = instances[i];
    const auto& phi = sc.map("phi").map;
    std::string ctx = seed_label(i + 1);
    for (auto p : {Exponent(2), Exponent(3)}) {
      auto probes = probes_of(sc, p, rng);
      auto pb = pullback_module(phi, sc.bundle("M").bundle, p);
      auto dop = dual_of_pullback(pb);
      std::vector<Functional> fns{dop.apply(dop.dual().element(sc.dual_section("omega").values)),
                                  random_functional(*pb.pulled(), i + 1)};
      for (const auto& L : fns)
        for (const auto& e : {p, p.conjugate()}) {
          auto run = approximation_sequence(pb, L, sc.chain("cY").chain, probes, e);
          std::string at = ctx + ", p = " + p.str() + ", e = " + e.str();
          t.expect(run.ok(), at + ": " + run.witness);
          for (const auto& level : run.levels)
            t.expect(leq(level.integral, run.integral, kTolerance),
                     at + ": level " + std::to_string(level.level) + " exceeds the bound");
        }
    }
  }
}

struct Criterion {
  int id;
  const char* title;
  std::optional<double> limit;
  std::function<void(Tally&)> run;
};

}  // namespace

int main() {
  std::vector<Scenario> instances;
  for (std::uint64_t seed = 1; seed <= kInstances; ++seed) instances.push_back(generate_instance(seed));
  Scenario canonical = load_scenario(std::string(NMFORGE_SCENARIO_DIR) + "/canonical.json");

  std::vector<Criterion> criteria = {
      {1, "doob operators and Rep", 10.0, [&](Tally& t) { doob_criterion(instances, t); }},
      {2, "Rep_p subadditivity and Hoelder", 10.0, [&](Tally& t) { rep_p_criterion(instances, t); }},
      {3, "module realization", std::nullopt, [&](Tally& t) { module_criterion(instances, t); }},
      {4, "pullback", std::nullopt, [&](Tally& t) { pullback_criterion(instances, t); }},
      {5, "duality", std::nullopt, [&](Tally& t) { duality_criterion(instances, t); }},
      {6, "liftings", 30.0, [&](Tally& t) { lifting_criterion(instances, t); }},
      {7, "Hom_loc", std::nullopt, [&](Tally& t) { homloc_criterion(instances, t); }},
      {8, "weak* approximation", 20.0, [&](Tally& t) { weakstar_criterion(instances, canonical, t); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Tally tally;
    std::string error;
    auto start = std::chrono::steady_clock::now();
    try {
      c.run(tally);
    } catch (const std::exception& e) {
      error = e.what();
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = !c.limit || seconds < *c.limit;
    bool pass = error.empty() && tally.failed() == 0 && in_time;
    if (!pass) ++failed;
    std::string detail = std::to_string(tally.checks()) + " checks, " + std::to_string(tally.failed()) + " failed";
    char timing[64];
    if (c.limit)
      std::snprintf(timing, sizeof timing, "%.2f s (limit %.0f s)", seconds, *c.limit);
    else
      std::snprintf(timing, sizeof timing, "%.2f s", seconds);
    std::printf("%s criterion %d, %s: %s, tol %.0e, %s", pass ? "PASS" : "FAIL", c.id, c.title, detail.c_str(),
                kTolerance, timing);
    if (!error.empty()) std::printf("; error: %s", error.c_str());
    if (!tally.first_failure().empty()) std::printf("; first failure: %s", tally.first_failure().c_str());
    if (!in_time) std::printf("; over the time limit");
    std::printf("\n");
  }
  return failed == 0 ? 0 : 1;
}
