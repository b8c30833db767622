#include "nmforge/lifting.hpp"

#include <map>
#include <utility>

#include "nmforge/error.hpp"
#include "nmforge/random.hpp"

namespace nmforge {

namespace {

Function random_function(std::size_t n, Rng& rng, std::int64_t bound = 5) {
  Function f;
  for (std::size_t i = 0; i < n; ++i) f.emplace_back(static_cast<long>(rng.uniform(-bound, bound)));
  return f;
}

PointSet random_set(std::size_t n, Rng& rng) { return PointSet(rng.next()) & PointSet::full(n); }

Section random_section(const StrongBundle& bundle, Rng& rng) {
  Section s;
  for (std::size_t x = 0; x < bundle.size(); ++x) {
    Vector v;
    for (std::size_t j = 0; j < bundle.fiber(x).dim(); ++j) v.emplace_back(static_cast<long>(rng.uniform(-8, 8)));
    s.push_back(std::move(v));
  }
  return s;
}

ModuleElement localized(const BundlePtr& bundle, std::size_t x, std::size_t j, const Exponent& p) {
  Section s = zero_section(*bundle);
  s[x][j] = Real(1);
  return ModuleElement(bundle, std::move(s), p);
}

std::vector<ModuleElement> domain_of(const BundlePtr& bundle, const std::vector<ModuleElement>& probes,
                                     const Exponent& p) {
  std::vector<ModuleElement> out;
  for (const auto& s : bundle->localized_basis()) out.emplace_back(bundle, s, p);
  for (const auto& s : bundle->test_sections()) out.emplace_back(bundle, s, p);
  for (const auto& v : probes) out.push_back(v.with_exponent(p));
  return out;
}

bool same_values(const Function& f, const Function& g) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!near(f[i], g.at(i), kRootTolerance)) return false;
  return true;
}

bool same_on_support(const FiniteMeasureSpace& space, const Function& f, const Function& g) {
  for (std::size_t i = 0; i < space.size(); ++i)
    if (!space.is_null(i) && !near(f.at(i), g.at(i), kRootTolerance)) return false;
  return true;
}

bool same_vectors(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!near(a[i], b[i], kRootTolerance)) return false;
  return true;
}

template <class Report>
void note(Report& r, bool Report::*flag, const std::string& what) {
  r.*flag = false;
  if (r.witness.empty()) r.witness = what;
}

// Every subset of a small carrier, or a deterministic random sample.
template <class Visit>
void for_each_set(std::size_t n, Rng& rng, Visit visit) {
  if (n <= kExhaustiveLatticePoints) {
    for (std::uint64_t e = 0; e < (std::uint64_t{1} << n); ++e) visit(PointSet(e));
  } else {
    for (std::size_t k = 0; k < kRandomSetPairs; ++k) visit(random_set(n, rng));
  }
}

}  // namespace

// Lifting

Lifting make_lifting(const FiniteMeasureSpace& space, std::vector<std::size_t> retraction) {
  if (retraction.size() != space.size())
    throw Error(Errc::BadRetraction, "retraction must assign every point of the carrier");
  for (std::size_t x = 0; x < space.size(); ++x) {
    std::size_t tx = retraction[x];
    if (tx >= space.size()) throw Error(Errc::BadRetraction, "retraction of '" + space.label(x) + "' leaves the carrier");
    if (!space.is_null(x) && tx != x)
      throw Error(Errc::BadRetraction, "retraction moves the positive-mass point '" + space.label(x) + "'");
    if (space.is_null(tx))
      throw Error(Errc::BadRetraction, "retraction sends '" + space.label(x) + "' to the null point '" + space.label(tx) + "'");
  }
  Lifting l;
  l.space_ = space;
  l.retraction_ = std::move(retraction);
  l.fibers_.assign(space.size(), PointSet());
  for (std::size_t x = 0; x < space.size(); ++x) l.fibers_[l.retraction_[x]].insert(x);
  return l;
}

Lifting default_lifting(const FiniteMeasureSpace& space) {
  std::size_t first = space.support().first();
  std::vector<std::size_t> t(space.size());
  for (std::size_t x = 0; x < space.size(); ++x) t[x] = space.is_null(x) ? first : x;
  return make_lifting(space, std::move(t));
}

PointSet Lifting::lift(PointSet set) const {
  PointSet out;
  for (auto x : (set & space_.support()).members()) out = out | fibers_[x];
  return out;
}

Function Lifting::lift(const Function& f) const {
  if (f.size() != space_.size()) throw Error(Errc::DimensionMismatch, "function has the wrong length");
  Function out;
  for (std::size_t x = 0; x < space_.size(); ++x) out.push_back(f[retraction_[x]]);
  return out;
}

LiftingReport check_lifting(const Lifting& lifting, std::uint64_t seed) {
  LiftingReport r;
  const auto& X = lifting.space();
  const std::size_t n = X.size();
  const PointSet supp = X.support();
  const PointSet full = X.carrier();
  Rng rng(seed);

  if (!lifting.lift(PointSet()).empty()) note(r, &LiftingReport::empty_set, "l(empty) is not empty");
  if (!(lifting.lift(full) == full)) note(r, &LiftingReport::full_set, "l(X) = " + X.describe(lifting.lift(full)));

  auto check_pair = [&](PointSet e, PointSet f, PointSet le, PointSet lf, PointSet lu, PointSet li) {
    ++r.pairs_checked;
    if (!(lu == (le | lf)))
      note(r, &LiftingReport::unions, "E = " + X.describe(e) + ", F = " + X.describe(f));
    if (!(li == (le & lf)))
      note(r, &LiftingReport::intersections, "E = " + X.describe(e) + ", F = " + X.describe(f));
    if (((e ^ f) & supp).empty() && !(le == lf))
      note(r, &LiftingReport::null_invariant, "E = " + X.describe(e) + ", F = " + X.describe(f));
  };
  auto check_class = [&](PointSet e, PointSet le) {
    if (!((e ^ le) & supp).empty()) note(r, &LiftingReport::same_class, "E = " + X.describe(e));
  };

  if (n <= kExhaustiveLatticePoints) {
    r.exhaustive = true;
    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<PointSet> table(count);
    for (std::uint64_t e = 0; e < count; ++e) table[e] = lifting.lift(PointSet(e));
    for (std::uint64_t e = 0; e < count; ++e) {
      check_class(PointSet(e), table[e]);
      for (std::uint64_t f = 0; f < count; ++f)
        check_pair(PointSet(e), PointSet(f), table[e], table[f], table[e | f], table[e & f]);
    }
  } else {
    for (std::size_t k = 0; k < kRandomSetPairs; ++k) {
      PointSet e = random_set(n, rng);
      PointSet f = rng.coin() ? random_set(n, rng) : (e ^ (random_set(n, rng) - supp));
      check_class(e, lifting.lift(e));
      check_pair(e, f, lifting.lift(e), lifting.lift(f), lifting.lift(e | f), lifting.lift(e & f));
    }
  }

  for (int k = 0; k < 64; ++k) {
    Function f = random_function(n, rng);
    Function g = random_function(n, rng);
    Function lf = lifting.lift(f);
    if (!same_values(lifting.lift(times(f, g)), times(lf, lifting.lift(g))))
      note(r, &LiftingReport::function_laws, "l(fg) != l(f) l(g)");
    Function af = f;
    for (auto& v : af) v = abs(v);
    Function alf = lf;
    for (auto& v : alf) v = abs(v);
    if (!same_values(lifting.lift(af), alf)) note(r, &LiftingReport::function_laws, "|l(f)| != l(|f|)");
    Function h = f;
    for (std::size_t x = 0; x < n; ++x) h[x] = X.is_null(x) ? Real(static_cast<long>(rng.uniform(-9, 9))) : f[x] + Real(static_cast<long>(rng.uniform(0, 3)));
    Function lh = lifting.lift(h);
    for (std::size_t x = 0; x < n; ++x)
      if (lf[x] > lh[x]) note(r, &LiftingReport::function_laws, "l is not monotone");
    Real sup_lifted, sup_class;
    for (std::size_t x = 0; x < n; ++x) {
      sup_lifted = max(sup_lifted, abs(lf[x]));
      if (!X.is_null(x)) sup_class = max(sup_class, abs(f[x]));
    }
    if (sup_lifted != sup_class) note(r, &LiftingReport::function_laws, "sup |l(f)| != ess sup |f|");
    if (!X.ae_equal(lf, f)) note(r, &LiftingReport::function_laws, "pi(l(f)) != f");
  }
  return r;
}

std::vector<PointSet> lifted_atoms(const Lifting& lifting) {
  std::vector<PointSet> atoms;
  for (auto a : lifting.space().support().members()) atoms.push_back(lifting.lift(PointSet::singleton(a)));
  return atoms;
}

AtomReport check_atoms(const Lifting& lifting, std::uint64_t seed) {
  AtomReport r;
  const auto& X = lifting.space();
  auto atoms = lifted_atoms(lifting);
  if (!is_partition(atoms, X.size())) note(r, &AtomReport::partition, "lifted atoms do not partition the carrier");
  Rng rng(seed);
  for_each_set(X.size(), rng, [&](PointSet e) {
    PointSet le = lifting.lift(e);
    for (const auto& a : atoms)
      if (!(le & a).empty() && !a.subset_of(le))
        note(r, &AtomReport::dichotomy, "E = " + X.describe(e) + " splits the atom " + X.describe(a));
  });
  for (int k = 0; k < 32; ++k) {
    Function lf = lifting.lift(random_function(X.size(), rng));
    for (const auto& a : atoms)
      for (auto x : a.members())
        if (lf[x] != lf[a.first()]) note(r, &AtomReport::constant, "l(f) not constant on " + X.describe(a));
  }
  return r;
}

Lifting compatible_lifting(const MeasurableMap& phi, const Lifting& lx) {
  if (!phi.measure_preserving())
    throw Error(Errc::MapNotMeasurePreserving, "compatible liftings need a measure-preserving map");
  if (!(lx.space() == phi.target())) throw Error(Errc::DimensionMismatch, "lifting lives on a different space");
  const auto& Y = phi.source();
  std::vector<std::size_t> t(Y.size());
  for (std::size_t y = 0; y < Y.size(); ++y) {
    if (!Y.is_null(y)) {
      t[y] = y;
      continue;
    }
    PointSet candidates = phi.preimage(PointSet::singleton(lx.t(phi(y)))) & Y.support();
    if (candidates.empty())
      throw Error(Errc::InvariantViolation, "no positive-mass point over '" + phi.target().label(lx.t(phi(y))) + "'");
    t[y] = candidates.first();
  }
  return make_lifting(Y, std::move(t));
}

CompatibilityReport check_compatibility(const MeasurableMap& phi, const Lifting& lx, const Lifting& ly,
                                        std::uint64_t seed) {
  CompatibilityReport r;
  const auto& X = phi.target();
  Rng rng(seed);
  for_each_set(X.size(), rng, [&](PointSet e) {
    if (!(ly.lift(phi.preimage(e)) == phi.preimage(lx.lift(e))))
      note(r, &CompatibilityReport::sets, "E = " + X.describe(e));
  });
  for (int k = 0; k < 32; ++k) {
    Function f = random_function(X.size(), rng);
    if (!same_values(ly.lift(phi.compose(f)), phi.compose(lx.lift(f))))
      note(r, &CompatibilityReport::functions, "l_Y(f o phi) != l_X(f) o phi");
  }
  return r;
}

// Lifted modules

LiftedModule lift_module(const Lifting& lifting, const BundlePtr& module) {
  if (!(module->base() == lifting.space())) throw Error(Errc::FiberMismatch, "module does not live on the lifting's space");
  LiftedModule lm;
  lm.lifting_ = lifting;
  lm.source_ = module;
  std::vector<FiberSpace> fibers;
  for (std::size_t x = 0; x < module->size(); ++x) fibers.push_back(module->fiber(lifting.t(x)));
  std::vector<Section> tests;
  for (const auto& t : module->test_sections()) {
    Section s;
    for (std::size_t x = 0; x < module->size(); ++x) s.push_back(t[lifting.t(x)]);
    tests.push_back(std::move(s));
  }
  lm.lifted_ = StrongBundle::make(module->base(), std::move(fibers), std::move(tests), NullIdeal::Trivial);
  return lm;
}

ModuleElement LiftedModule::lift(const ModuleElement& v) const {
  Section s;
  for (std::size_t x = 0; x < source_->size(); ++x) s.push_back(v.at(lifting_.t(x)));
  return ModuleElement(lifted_, std::move(s), v.exponent());
}

ModuleElement LiftedModule::quotient(const ModuleElement& lv) const {
  const auto& X = source_->base();
  Section s = zero_section(*source_);
  for (std::size_t x = 0; x < X.size(); ++x)
    if (!X.is_null(x)) s[x] = lv.at(x);
  return ModuleElement(source_, std::move(s), lv.exponent());
}

LiftModuleReport check_lifted_module(const LiftedModule& lm, const std::vector<ModuleElement>& probes,
                                     std::uint64_t seed) {
  LiftModuleReport r;
  const auto& l = lm.lifting();
  const auto& M = lm.source();
  const auto& LM = lm.lifted();
  const auto& X = M->base();
  Rng rng(seed);

  for (std::size_t x = 0; x < X.size(); ++x)
    if (!(LM->fiber(x) == M->fiber(l.t(x)))) note(r, &LiftModuleReport::fibers, "fiber at '" + X.label(x) + "'");

  auto domain = domain_of(M, probes, Exponent::infinity());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto& v = domain[i];
    std::string tag = "element " + std::to_string(i);
    ModuleElement lv = lm.lift(v);
    if (!same_values(pointwise_norm(lv), l.lift(pointwise_norm(v))))
      note(r, &LiftModuleReport::norm_identity, tag + ": |l v| != l(|v|)");
    Function f = random_function(X.size(), rng);
    if (!lm.lift(v.times(f)).equivalent(lv.times(l.lift(f))))
      note(r, &LiftModuleReport::products, tag + ": l(f v) != l(f) l(v)");
    ModuleElement back = lm.quotient(lv);
    if (!back.equivalent(v) || !X.ae_equal(pointwise_norm(back), pointwise_norm(v)))
      note(r, &LiftModuleReport::round_trip, tag + ": pi(l(v)) != v");
  }

  for (int k = 0; k < 16; ++k) {
    ModuleElement V(LM, random_section(*LM, rng), Exponent::infinity());
    ModuleElement sum = ModuleElement::zero(LM, Exponent::infinity());
    for (auto x : X.support().members()) {
      for (std::size_t j = 0; j < M->fiber(x).dim(); ++j) {
        Function c(X.size());
        for (std::size_t z = 0; z < X.size(); ++z)
          if (l.t(z) == x) c[z] = V.at(z)[j];
        sum = sum + lm.lift(localized(M, x, j, Exponent::infinity())).times(c);
      }
    }
    if (!sum.equivalent(V)) note(r, &LiftModuleReport::generates, "random lifted section " + std::to_string(k));
    ModuleElement again = lm.lift(lm.quotient(V));
    for (auto x : X.support().members())
      if (again.at(x) != V.at(x)) note(r, &LiftModuleReport::round_trip, "l(pi(V)) differs from V at '" + X.label(x) + "'");
  }
  return r;
}

// Morphisms

Function morphism_norm(const BundlePtr& from, const BundlePtr& to, const Morphism& T) {
  Function out(from->size());
  for (std::size_t x = 0; x < from->size(); ++x) {
    if (from->negligible(x)) continue;
    std::vector<Vector> rows(to->fiber(x).dim(), Vector(from->fiber(x).dim()));
    for (std::size_t j = 0; j < from->fiber(x).dim(); ++j) {
      Vector column = T(localized(from, x, j, Exponent::infinity())).at(x);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i][j] = column.at(i);
    }
    out[x] = operator_norm(rows, from->fiber(x), to->fiber(x));
  }
  return out;
}

LiftedMorphism::LiftedMorphism(LiftedModule from, LiftedModule to, std::vector<std::vector<Vector>> columns)
    : from_(std::move(from)), to_(std::move(to)), columns_(std::move(columns)) {
  const auto& A = from_.lifted();
  const auto& B = to_.lifted();
  norm_.assign(A->size(), Real());
  for (std::size_t z = 0; z < A->size(); ++z) {
    std::vector<Vector> rows(B->fiber(z).dim(), Vector(A->fiber(z).dim()));
    for (std::size_t j = 0; j < A->fiber(z).dim(); ++j)
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i][j] = columns_[z][j].at(i);
    norm_[z] = operator_norm(rows, A->fiber(z), B->fiber(z));
  }
}

ModuleElement LiftedMorphism::operator()(const ModuleElement& V) const {
  const auto& B = to_.lifted();
  Section s = zero_section(*B);
  for (std::size_t z = 0; z < B->size(); ++z)
    for (std::size_t j = 0; j < columns_[z].size(); ++j) s[z] = add(s[z], scale(V.at(z).at(j), columns_[z][j]));
  return ModuleElement(B, std::move(s), V.exponent());
}

LiftedMorphism lift_morphism(const LiftedModule& from, const LiftedModule& to, const Morphism& T) {
  const auto& M = from.source();
  const auto& l = from.lifting();
  std::map<std::pair<std::size_t, std::size_t>, ModuleElement> images;
  std::vector<std::vector<Vector>> columns(M->size());
  for (std::size_t z = 0; z < M->size(); ++z) {
    std::size_t x = l.t(z);
    for (std::size_t j = 0; j < M->fiber(x).dim(); ++j) {
      auto it = images.find({x, j});
      if (it == images.end())
        it = images.emplace(std::make_pair(x, j), to.lift(T(localized(M, x, j, Exponent::infinity())))).first;
      columns[z].push_back(it->second.at(z));
    }
  }
  return LiftedMorphism(from, to, std::move(columns));
}

MorphismReport check_lifted_morphism(const LiftedMorphism& lt, const Morphism& T,
                                     const std::vector<ModuleElement>& probes) {
  MorphismReport r;
  const auto& from = lt.from();
  const auto& to = lt.to();
  auto domain = domain_of(from.source(), probes, Exponent::infinity());
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (!lt(from.lift(domain[i])).equivalent(to.lift(T(domain[i]))))
      note(r, &MorphismReport::square, "l T(l v) != l(T v) on element " + std::to_string(i));
  Function expected = from.lifting().lift(morphism_norm(from.source(), to.source(), T));
  const auto& X = from.source()->base();
  for (std::size_t z = 0; z < X.size(); ++z)
    if (!near(lt.norm()[z], expected[z], kRootTolerance))
      note(r, &MorphismReport::norm_identity, "|l T| = " + lt.norm()[z].str() + " but l(|T|) = " + expected[z].str() +
                                                  " at '" + X.label(z) + "'");
  return r;
}

// Pullback square

DiagramReport pullback_commutes(const PullbackModule& pb, const Lifting& lx, const Lifting& ly,
                                const std::vector<ModuleElement>& probes) {
  const auto& phi = pb.map();
  const auto& Y = phi.source();
  for (std::size_t y = 0; y < Y.size(); ++y)
    if (phi(ly.t(y)) != lx.t(phi(y)))
      throw Error(Errc::LiftingsNotCompatible, "phi(t_Y('" + Y.label(y) + "')) != t_X(phi('" + Y.label(y) + "'))");

  DiagramReport r;
  LiftedModule lifted_pullback = lift_module(ly, pb.pulled());
  LiftedModule lifted_source = lift_module(lx, pb.source());
  PullbackModule pulled_lift = pullback_module(phi, lifted_source.lifted(), pb.exponent());
  if (!lifted_pullback.lifted()->same_shape(*pulled_lift.pulled())) {
    r.fibers = false;
    r.witness = "l_Y(phi^*M) and phi^*(l_X M) have different fibers";
    return r;
  }
  auto domain = domain_of(pb.source(), probes, pb.exponent());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    ++r.probes;
    const auto& v = domain[i];
    Section a = lifted_pullback.lift(pb.pull(v)).section();
    Section b = pulled_lift.pull(lifted_source.lift(v)).section();
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (a[y] != b[y]) {
        note(r, &DiagramReport::commutes, "element " + std::to_string(i) + " at '" + Y.label(y) + "'");
        break;
      }
  }
  return r;
}

bool fibre_r_check(const Lifting& lifting, std::uint64_t seed) {
  const auto& X = lifting.space();
  Section ones(X.size(), Vector{Real(1)});
  auto scalars = StrongBundle::uniform(X, FiberSpace::lp(1, LpIndex::One), {ones});
  LiftedModule lm = lift_module(lifting, scalars);
  Rng rng(seed);
  for (std::size_t x = 0; x < X.size(); ++x)
    if (lm.lifted()->fiber(x).dim() != 1) return false;
  for (int k = 0; k < 16; ++k) {
    Function f = random_function(X.size(), rng);
    Section s;
    for (const auto& v : f) s.push_back(Vector{v});
    ModuleElement lf = lm.lift(ModuleElement(scalars, s, Exponent::infinity()));
    Function expected = lifting.lift(X.canonical(f));
    Function norms = pointwise_norm(lf);
    for (std::size_t x = 0; x < X.size(); ++x)
      if (lf.at(x)[0] != expected[x] || norms[x] != abs(expected[x])) return false;
  }
  return true;
}

// Duals through liftings

Functional dual2_apply(const LiftedModule& lm, const Section& w, const Exponent&) {
  return [lm, w](const ModuleElement& v) {
    ModuleElement lv = lm.lift(v);
    const auto& X = lm.source()->base();
    Function out(X.size());
    for (std::size_t x = 0; x < X.size(); ++x)
      if (!X.is_null(x)) out[x] = pair(w.at(x), lv.at(x));
    return out;
  };
}

Section dual2_section(const LiftedModule& lm, const Functional& L, const Exponent& p) {
  const auto& M = lm.source();
  const auto& l = lm.lifting();
  std::map<std::pair<std::size_t, std::size_t>, Real> cache;
  Section out;
  for (std::size_t x = 0; x < M->size(); ++x) {
    std::size_t a = l.t(x);
    Vector w;
    for (std::size_t j = 0; j < M->fiber(a).dim(); ++j) {
      auto it = cache.find({a, j});
      if (it == cache.end()) it = cache.emplace(std::make_pair(a, j), L(localized(M, a, j, p)).at(a)).first;
      w.push_back(it->second);
    }
    out.push_back(std::move(w));
  }
  return out;
}

IsoReport verify_dual2(const LiftedModule& lm, const Exponent& p, const std::vector<ModuleElement>& probes,
                       std::uint64_t seed) {
  IsoReport r;
  const auto& M = lm.source();
  const auto& X = M->base();
  const auto& l = lm.lifting();
  DualModule direct = dual_module(M, p);
  auto lifted_dual = WeakBundle::dual_of(*lm.lifted());
  auto domain = domain_of(M, probes, p);

  std::vector<DualElement> sections = direct.generators();
  Rng rng(seed);
  for (int k = 0; k < 4; ++k) sections.push_back(direct.element(random_section(*M, rng)));

  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& w = sections[k];
    std::string tag = "dual section " + std::to_string(k);
    Section lw;
    for (std::size_t x = 0; x < X.size(); ++x) lw.push_back(w.at(l.t(x)));
    Functional I = dual2_apply(lm, lw, p);
    Functional direct_I = iso_sections_to_dual(w, M);
    for (std::size_t i = 0; i < domain.size(); ++i)
      if (!same_on_support(X, I(domain[i]), direct_I(domain[i])))
        note(r, &IsoReport::routes_agree, tag + ": lifted and direct duals differ on element " + std::to_string(i));
    Section back = dual2_section(lm, I, p);
    for (std::size_t x = 0; x < X.size(); ++x)
      if (!same_vectors(back[x], lw[x])) note(r, &IsoReport::injective, tag + ": section not recovered at '" + X.label(x) + "'");
    Function norms = pointwise_norm(section_of_functional(direct, I));
    for (std::size_t x = 0; x < X.size(); ++x) {
      Real lifted_norm = lifted_dual->fiber(x).norm(lw[x]);
      if (!near(lifted_norm, norms[l.t(x)], kRootTolerance))
        note(r, &IsoReport::norm_preserving, tag + ": |w| != l(|I(w)|) at '" + X.label(x) + "'");
    }
  }

  for (std::uint64_t k = 0; k < 4; ++k) {
    Functional L = random_functional(*M, seed * 17 + k);
    Functional I = dual2_apply(lm, dual2_section(lm, L, p), p);
    for (std::size_t i = 0; i < domain.size(); ++i)
      if (!same_on_support(X, I(domain[i]), L(domain[i])))
        note(r, &IsoReport::surjective, "black-box functional " + std::to_string(k) + " on element " + std::to_string(i));
  }
  return r;
}

Section dual_of_pullback_lifted(const DualOfPullback& dop, const Lifting& lx, const Lifting& ly, const Functional& L) {
  const auto& pb = dop.pullback();
  const auto& phi = pb.map();
  const auto& Y = phi.source();
  const auto& M = pb.source();
  LiftedModule lxm = lift_module(lx, M);
  std::map<std::pair<std::size_t, std::size_t>, Function> cache;
  auto value = [&](std::size_t a, std::size_t j) -> const Function& {
    auto it = cache.find({a, j});
    if (it != cache.end()) return it->second;
    // phi^*(l_X(1_{a} e_j)), as a class in phi^*M.
    ModuleElement lifted = lxm.lift(localized(M, a, j, pb.exponent()));
    Section s = zero_section(*pb.pulled());
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (!Y.is_null(y)) s[y] = lifted.at(phi(y));
    return cache.emplace(std::make_pair(a, j), L(ModuleElement(pb.pulled(), std::move(s), pb.exponent()))).first->second;
  };
  Section out;
  for (std::size_t y = 0; y < Y.size(); ++y) {
    std::size_t a = lx.t(phi(y));
    Vector w;
    for (std::size_t j = 0; j < M->fiber(a).dim(); ++j) w.push_back(value(a, j).at(ly.t(y)));
    out.push_back(std::move(w));
  }
  return out;
}

IsoReport verify_dpb2(const DualOfPullback& dop, const Lifting& lx, const Lifting& ly,
                      const std::vector<Functional>& functionals, const std::vector<ModuleElement>& probes) {
  IsoReport r;
  const auto& pb = dop.pullback();
  const auto& phi = pb.map();
  const auto& Y = phi.source();
  const auto& M = pb.source();
  const auto& pulled = pb.pulled();

  std::vector<ModuleElement> domain;
  for (const auto& s : pulled->localized_basis()) domain.emplace_back(pulled, s, pb.exponent());
  for (const auto& v : probes) domain.push_back(pb.pull(v));

  auto apply_lifted = [&](const Section& w) {
    return [&, w](const ModuleElement& V) {
      Function out(Y.size());
      for (std::size_t y = 0; y < Y.size(); ++y)
        if (!Y.is_null(y)) out[y] = pair(w[y], V.at(ly.t(y)));
      return out;
    };
  };
  auto quotient = [&](const Section& w) {
    Section s;
    for (std::size_t y = 0; y < Y.size(); ++y)
      s.push_back(Y.is_null(y) ? zero_vector(pulled->fiber(y).dim()) : w[y]);
    return dop.dual().element(std::move(s));
  };

  std::vector<Functional> all = functionals;
  for (const auto& w : dop.dual().generators()) all.push_back(dop.apply(w));

  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto& L = all[k];
    std::string tag = "functional " + std::to_string(k);
    Section lifted = dual_of_pullback_lifted(dop, lx, ly, L);
    DualElement direct = dop.section(L);
    if (!quotient(lifted).equivalent(direct)) note(r, &IsoReport::routes_agree, tag + ": lifting and separable routes differ");
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (!same_vectors(lifted[y], direct.at(ly.t(y))))
        note(r, &IsoReport::injective, tag + ": lifted section is not l_Y of the direct one at '" + Y.label(y) + "'");
    auto I = apply_lifted(lifted);
    for (std::size_t i = 0; i < domain.size(); ++i)
      if (!same_on_support(Y, I(domain[i]), L(domain[i])))
        note(r, &IsoReport::surjective, tag + ": lifted section does not reproduce L on element " + std::to_string(i));
    Function norms = pointwise_norm(direct);
    for (std::size_t y = 0; y < Y.size(); ++y) {
      Real n = dual_fiber(M->fiber(lx.t(phi(y)))).norm(lifted[y]);
      if (!near(n, norms[ly.t(y)], kRootTolerance))
        note(r, &IsoReport::norm_preserving, tag + ": |w| != l_Y(|L|) at '" + Y.label(y) + "'");
    }
  }
  return r;
}

}  // namespace nmforge
