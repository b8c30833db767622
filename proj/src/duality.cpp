#include "nmforge/duality.hpp"

#include "nmforge/error.hpp"
#include "nmforge/random.hpp"

namespace nmforge {

namespace {

bool agree(const StrongBundle& bundle, const Function& f, const Function& g) {
  for (std::size_t x = 0; x < bundle.size(); ++x)
    if (!bundle.negligible(x) && !near(f.at(x), g.at(x), kRootTolerance)) return false;
  return true;
}

Vector random_vector(std::size_t dim, Rng& rng, std::int64_t bound) {
  Vector v;
  for (std::size_t i = 0; i < dim; ++i) v.emplace_back(static_cast<long>(rng.uniform(-bound, bound)));
  return v;
}

Function random_function(std::size_t n, Rng& rng) {
  Function f;
  for (std::size_t i = 0; i < n; ++i) f.emplace_back(static_cast<long>(rng.uniform(-3, 3)));
  return f;
}

Vector unit(const FiberSpace& fiber, const Vector& v) {
  Real n = fiber.norm(v);
  return n.is_zero() ? v : scale(Real(1) / n, v);
}

}  // namespace

// WeakBundle

std::shared_ptr<const WeakBundle> WeakBundle::make(FiniteMeasureSpace base, std::vector<FiberSpace> preduals,
                                                   std::vector<Section> test_vectors, NullIdeal ideal) {
  if (preduals.size() != base.size()) throw Error(Errc::DimensionMismatch, "one fiber per base point expected");
  auto b = std::make_shared<WeakBundle>();
  b->base_ = std::move(base);
  for (const auto& f : preduals) b->fibers_.push_back(dual_fiber(f));
  for (const auto& t : test_vectors) {
    if (t.size() != preduals.size()) throw Error(Errc::DimensionMismatch, "test vector has the wrong length");
    for (std::size_t x = 0; x < t.size(); ++x)
      if (t[x].size() != preduals[x].dim()) throw Error(Errc::DimensionMismatch, "test vector does not fit a fiber");
  }
  b->test_vectors_ = std::move(test_vectors);
  b->ideal_ = ideal;
  return b;
}

std::shared_ptr<const WeakBundle> WeakBundle::dual_of(const StrongBundle& bundle) {
  return make(bundle.base(), bundle.fibers(), bundle.test_sections(), bundle.ideal());
}

bool WeakBundle::same_shape(const WeakBundle& other) const {
  if (!(base_ == other.base_) || ideal_ != other.ideal_ || size() != other.size()) return false;
  for (std::size_t x = 0; x < size(); ++x)
    if (!(predual(x) == other.predual(x))) return false;
  return true;
}

bool WeakBundle::predual_of(const StrongBundle& bundle) const {
  if (!(base_ == bundle.base()) || size() != bundle.size()) return false;
  for (std::size_t x = 0; x < size(); ++x)
    if (!(predual(x) == bundle.fiber(x))) return false;
  return true;
}

// DualElement

DualElement::DualElement(WeakBundlePtr bundle, Section section, Exponent q)
    : bundle_(std::move(bundle)), section_(std::move(section)), exponent_(std::move(q)) {
  if (section_.size() != bundle_->size()) throw Error(Errc::DimensionMismatch, "dual section has the wrong length");
  for (std::size_t x = 0; x < section_.size(); ++x) {
    if (section_[x].size() != bundle_->fiber(x).dim())
      throw Error(Errc::DimensionMismatch, "dual section value does not fit the fiber at '" + bundle_->base().label(x) + "'");
    if (bundle_->negligible(x)) section_[x] = zero_vector(section_[x].size());
  }
}

DualElement DualElement::zero(WeakBundlePtr bundle, Exponent q) {
  Section s;
  for (std::size_t x = 0; x < bundle->size(); ++x) s.push_back(zero_vector(bundle->fiber(x).dim()));
  return DualElement(std::move(bundle), std::move(s), std::move(q));
}

DualElement DualElement::operator+(const DualElement& other) const {
  if (!bundle_->same_shape(*other.bundle_)) throw Error(Errc::FiberMismatch, "dual elements over different bundles");
  Section s = section_;
  for (std::size_t x = 0; x < s.size(); ++x) s[x] = add(s[x], other.section_[x]);
  return DualElement(bundle_, std::move(s), exponent_);
}

DualElement DualElement::operator-(const DualElement& other) const { return *this + other.scaled(Real(-1)); }

DualElement DualElement::scaled(const Real& s) const {
  Section out = section_;
  for (auto& v : out) v = scale(s, v);
  return DualElement(bundle_, std::move(out), exponent_);
}

DualElement DualElement::times(const Function& f) const {
  if (f.size() != section_.size()) throw Error(Errc::DimensionMismatch, "multiplier has the wrong length");
  Section out = section_;
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = scale(f[x], out[x]);
  return DualElement(bundle_, std::move(out), exponent_);
}

bool DualElement::equivalent(const DualElement& other) const {
  if (!bundle_->same_shape(*other.bundle_)) return false;
  for (std::size_t x = 0; x < section_.size(); ++x) {
    if (bundle_->negligible(x)) continue;
    for (std::size_t j = 0; j < section_[x].size(); ++j)
      if (!near(section_[x][j], other.section_[x][j], kRootTolerance)) return false;
  }
  return true;
}

Function pointwise_norm(const DualElement& w) {
  const auto& b = *w.bundle();
  Function out(b.size());
  for (std::size_t x = 0; x < b.size(); ++x)
    if (!b.negligible(x)) out[x] = b.fiber(x).norm(w.at(x));
  return out;
}

Real lp_module_norm(const DualElement& w) {
  const auto& b = *w.bundle();
  Function n = pointwise_norm(w);
  if (w.exponent().is_infinite()) {
    Real best;
    for (std::size_t x = 0; x < b.size(); ++x)
      if (!b.base().is_null(x)) best = max(best, n[x]);
    return best;
  }
  const Rational& q = w.exponent().value();
  Real sum;
  for (std::size_t x = 0; x < b.size(); ++x)
    if (!b.base().is_null(x)) sum = sum + pow(n[x], q) * Real(b.base().weight(x));
  return pow(sum, Rational(1) / q);
}

Function weak_pairing(const DualElement& w, const Section& v) {
  const auto& b = *w.bundle();
  if (v.size() != b.size()) throw Error(Errc::DimensionMismatch, "section has the wrong length");
  Function out(b.size());
  for (std::size_t x = 0; x < b.size(); ++x)
    if (!b.negligible(x)) out[x] = pair(w.at(x), v[x]);
  return out;
}

bool dualnorm_bound_holds(const DualElement& w, const Section& v) {
  const auto& b = *w.bundle();
  Function lhs = weak_pairing(w, v);
  Function norms = pointwise_norm(w);
  for (std::size_t x = 0; x < b.size(); ++x) {
    if (b.negligible(x)) continue;
    if (!leq(abs(lhs[x]), norms[x] * b.predual(x).norm(v[x]), kRootTolerance)) return false;
  }
  return true;
}

std::vector<Section> unit_pool(const WeakBundle& bundle, const Section& w, std::uint64_t seed) {
  std::vector<Section> pool;
  auto zero = [&] {
    Section s;
    for (std::size_t x = 0; x < bundle.size(); ++x) s.push_back(zero_vector(bundle.predual(x).dim()));
    return s;
  };
  if (!w.empty()) {
    for (std::size_t x = 0; x < bundle.size(); ++x) {
      if (bundle.negligible(x)) continue;
      Section s = zero();
      s[x] = attaining_vector(bundle.predual(x), w.at(x));
      pool.push_back(std::move(s));
    }
  }
  Rng rng(seed);
  for (std::size_t k = 0; k < kRandomUnitSections; ++k) {
    Section s;
    for (std::size_t x = 0; x < bundle.size(); ++x)
      s.push_back(unit(bundle.predual(x), random_vector(bundle.predual(x).dim(), rng, 8)));
    pool.push_back(std::move(s));
  }
  return pool;
}

Function ess_sup_norm(const DualElement& w, std::uint64_t seed) {
  const auto& b = *w.bundle();
  Function best(b.size());
  for (const auto& v : unit_pool(b, w.section(), seed)) {
    Function value = weak_pairing(w, v);
    for (std::size_t x = 0; x < b.size(); ++x) best[x] = max(best[x], value[x]);
  }
  return best;
}

// DualModule

std::vector<DualElement> DualModule::generators() const {
  std::vector<DualElement> out;
  for (std::size_t x = 0; x < dual_->size(); ++x) {
    if (dual_->negligible(x)) continue;
    for (std::size_t j = 0; j < dual_->fiber(x).dim(); ++j) {
      Section s;
      for (std::size_t z = 0; z < dual_->size(); ++z) s.push_back(zero_vector(dual_->fiber(z).dim()));
      s[x][j] = Real(1);
      out.push_back(element(std::move(s)));
    }
  }
  return out;
}

DualModule dual_module(const BundlePtr& module, const Exponent& p) {
  if (!p.is_infinite() && p.value() <= 1)
    throw Error(Errc::BadExponents, "the dual module needs p > 1, got p = " + p.str());
  DualModule d;
  d.primal_ = module;
  d.dual_ = WeakBundle::dual_of(*module);
  d.p_ = p;
  d.q_ = p.is_infinite() ? Exponent::infinity() : p.conjugate();
  return d;
}

Functional iso_sections_to_dual(const DualElement& w, const BundlePtr& module) {
  if (!w.bundle()->predual_of(*module)) throw Error(Errc::FiberMismatch, "dual section does not match the module's fibers");
  return [w](const ModuleElement& v) { return weak_pairing(w, v.section()); };
}

DualElement section_of_functional(const DualModule& dual, const Functional& L) {
  const auto& M = dual.primal();
  Section s = zero_section(*M);
  for (std::size_t x = 0; x < M->size(); ++x) {
    if (M->negligible(x)) continue;
    for (std::size_t j = 0; j < M->fiber(x).dim(); ++j) {
      Section basis = zero_section(*M);
      basis[x][j] = Real(1);
      s[x][j] = L(ModuleElement(M, std::move(basis), dual.p())).at(x);
    }
  }
  return dual.element(std::move(s));
}

// Instance checks

void IsoReport::fail(bool IsoReport::*flag, std::string what) {
  this->*flag = false;
  if (witness.empty()) witness = std::move(what);
}

void IsoReport::merge(const IsoReport& other) {
  injective = injective && other.injective;
  surjective = surjective && other.surjective;
  linear = linear && other.linear;
  norm_preserving = norm_preserving && other.norm_preserving;
  bound = bound && other.bound;
  routes_agree = routes_agree && other.routes_agree;
  if (witness.empty()) witness = other.witness;
}

Functional random_functional(const StrongBundle& bundle, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> covectors;
  std::vector<std::vector<Vector>> matrices;
  std::vector<bool> negligible;
  for (std::size_t x = 0; x < bundle.size(); ++x) {
    std::size_t d = bundle.fiber(x).dim();
    covectors.push_back(random_vector(d, rng, 4));
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < d; ++i) rows.push_back(random_vector(d, rng, 4));
    matrices.push_back(std::move(rows));
    negligible.push_back(bundle.negligible(x));
  }
  return [covectors, matrices, negligible](const ModuleElement& v) {
    Function out(covectors.size());
    for (std::size_t x = 0; x < covectors.size(); ++x) {
      if (negligible[x]) continue;
      Vector image;
      for (const auto& row : matrices[x]) image.push_back(pair(row, v.at(x)));
      out[x] = pair(covectors[x], image);
    }
    return out;
  };
}

IsoReport verify_chardual(const DualModule& dual, const std::vector<DualElement>& sections,
                          const std::vector<ModuleElement>& probes, std::uint64_t seed) {
  IsoReport report;
  const auto& M = dual.primal();
  const auto& base = M->base();
  Rng rng(seed);

  std::vector<ModuleElement> domain;
  for (const auto& s : M->localized_basis()) domain.emplace_back(M, s, dual.p());
  for (const auto& v : probes) domain.push_back(v.with_exponent(dual.p()));

  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& w = sections[k];
    std::string tag = "dual section " + std::to_string(k);
    Functional L = iso_sections_to_dual(w, M);
    if (!section_of_functional(dual, L).equivalent(w)) report.fail(&IsoReport::injective, tag + ": J(I(w)) != w");

    Function sampled = ess_sup_norm(w, seed);
    Function exact = pointwise_norm(w);
    for (std::size_t x = 0; x < base.size(); ++x)
      if (!M->negligible(x) && !near(sampled[x], exact[x], kRootTolerance))
        report.fail(&IsoReport::norm_preserving, tag + " at '" + base.label(x) + "': sampled |I(w)| = " +
                                                     sampled[x].str() + ", |w| = " + exact[x].str());

    for (std::size_t i = 0; i < domain.size(); ++i) {
      const auto& v = domain[i];
      Function f = random_function(base.size(), rng);
      if (!agree(*M, L(v.times(f)), times(f, L(v))))
        report.fail(&IsoReport::linear, tag + ": I(w)(f v) != f I(w)(v) on element " + std::to_string(i));
      const auto& u = domain[(i + 1) % domain.size()];
      if (!agree(*M, L(v + u), plus(L(v), L(u))))
        report.fail(&IsoReport::linear, tag + ": I(w) not additive on element " + std::to_string(i));
      if (!dualnorm_bound_holds(w, v.times(f).section()))
        report.fail(&IsoReport::bound, tag + ": |<w, f v>| exceeds |w| |f v| on element " + std::to_string(i));
    }
  }

  for (std::uint64_t r = 0; r < 4; ++r) {
    Functional L = random_functional(*M, seed * 31 + r);
    Functional back = iso_sections_to_dual(section_of_functional(dual, L), M);
    for (std::size_t i = 0; i < domain.size(); ++i)
      if (!agree(*M, back(domain[i]), L(domain[i])))
        report.fail(&IsoReport::surjective, "black-box functional " + std::to_string(r) + ": I(J(L)) != L on element " +
                                                std::to_string(i));
  }
  return report;
}

// Hom_loc

HomLocElement::HomLocElement(PullbackModule pb, LocalOperator op, Section kernel)
    : pb_(std::move(pb)), op_(std::move(op)), kernel_(std::move(kernel)) {
  const auto& Y = pb_.map().source();
  auto dual = WeakBundle::dual_of(*pb_.pulled());
  norm_.assign(Y.size(), Real());
  for (std::size_t y = 0; y < Y.size(); ++y)
    if (!pb_.pulled()->negligible(y)) norm_[y] = dual->fiber(y).norm(kernel_.at(y));
}

Function HomLocElement::sampled_norm(std::uint64_t seed) const {
  const auto& Y = pb_.map().source();
  const auto& M = pb_.source();
  auto dualM = WeakBundle::dual_of(*M);
  std::vector<Section> pool = unit_pool(*dualM, {}, seed);
  for (std::size_t y = 0; y < Y.size(); ++y) {
    if (pb_.pulled()->negligible(y)) continue;
    std::size_t x = pb_.map()(y);
    Section s = zero_section(*M);
    s[x] = attaining_vector(M->fiber(x), kernel_[y]);
    pool.push_back(std::move(s));
  }
  Function best(Y.size());
  for (const auto& s : pool) {
    Function value = op_(ModuleElement(M, s, pb_.exponent()));
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (!pb_.pulled()->negligible(y)) best[y] = max(best[y], value[y]);
  }
  return best;
}

HomLocElement homloc_iso(const PullbackModule& pb, const Functional& L) {
  LocalOperator op = [pb, L](const ModuleElement& v) { return L(pb.pull(v)); };
  const auto& M = pb.source();
  Section kernel = zero_section(*pb.pulled());
  for (std::size_t x = 0; x < M->size(); ++x) {
    if (M->negligible(x)) continue;
    PointSet fiber = pb.map().preimage(PointSet::singleton(x));
    for (std::size_t j = 0; j < M->fiber(x).dim(); ++j) {
      Section basis = zero_section(*M);
      basis[x][j] = Real(1);
      Function value = op(ModuleElement(M, std::move(basis), pb.exponent()));
      for (auto y : fiber.members())
        if (!pb.pulled()->negligible(y)) kernel[y][j] = value.at(y);
    }
  }
  return HomLocElement(pb, std::move(op), std::move(kernel));
}

Functional homloc_inverse(const HomLocElement& T) {
  ExtendedOperator extended = extend_local_operator(T.pullback(), T.op(), T.norm());
  return [extended](const ModuleElement& V) { return extended.apply(V); };
}

IsoReport verify_homloc(const PullbackModule& pb, const std::vector<Functional>& functionals,
                        const std::vector<ModuleElement>& probes, std::uint64_t seed) {
  IsoReport report;
  const auto& Y = pb.map().source();
  const auto& M = pb.source();
  const auto& pulled = pb.pulled();
  DualModule dual = dual_module(pulled, pb.exponent());
  Rng rng(seed);

  std::vector<ModuleElement> source_domain;
  for (const auto& s : M->localized_basis()) source_domain.emplace_back(M, s, pb.exponent());
  for (const auto& v : probes) source_domain.push_back(v.with_exponent(pb.exponent()));
  std::vector<ModuleElement> pulled_domain;
  for (const auto& s : pulled->localized_basis()) pulled_domain.emplace_back(pulled, s, pb.exponent());
  for (const auto& v : probes) pulled_domain.push_back(pb.pull(v).times(random_function(Y.size(), rng)));

  for (std::size_t k = 0; k < functionals.size(); ++k) {
    const auto& L = functionals[k];
    std::string tag = "functional " + std::to_string(k);
    HomLocElement T = homloc_iso(pb, L);

    Function expected = pointwise_norm(section_of_functional(dual, L));
    Function sampled = T.sampled_norm(seed);
    for (std::size_t y = 0; y < Y.size(); ++y) {
      if (pulled->negligible(y)) continue;
      if (!near(T.norm()[y], expected[y], kRootTolerance))
        report.fail(&IsoReport::norm_preserving, tag + " at '" + Y.label(y) + "': |I(L)| = " + T.norm()[y].str() +
                                                     ", |L| = " + expected[y].str());
      if (!near(sampled[y], T.norm()[y], kRootTolerance))
        report.fail(&IsoReport::norm_preserving, tag + " at '" + Y.label(y) + "': sampled |T| = " + sampled[y].str() +
                                                     ", kernel norm = " + T.norm()[y].str());
    }

    for (std::size_t i = 0; i < source_domain.size(); ++i) {
      const auto& v = source_domain[i];
      const auto& u = source_domain[(i + 1) % source_domain.size()];
      Function f = random_function(M->size(), rng);
      if (!agree(*pulled, T(v.times(f)), times(pb.pull(f), T(v))))
        report.fail(&IsoReport::linear, tag + ": T(f v) != (f o phi) T(v) on element " + std::to_string(i));
      if (!agree(*pulled, T(v + u), plus(T(v), T(u))))
        report.fail(&IsoReport::linear, tag + ": T not additive on element " + std::to_string(i));
      Function bound = times(T.norm(), pb.pull(pointwise_norm(v)));
      Function value = T(v);
      for (std::size_t y = 0; y < Y.size(); ++y)
        if (!pulled->negligible(y) && !leq(abs(value[y]), bound[y], kRootTolerance))
          report.fail(&IsoReport::bound, tag + ": |T(v)| > |T| |v| o phi at '" + Y.label(y) + "'");
    }

    Functional back;
    try {
      back = homloc_inverse(T);
    } catch (const Error& e) {
      report.fail(&IsoReport::surjective, tag + ": " + e.what());
      continue;
    }
    for (std::size_t i = 0; i < pulled_domain.size(); ++i)
      if (!agree(*pulled, back(pulled_domain[i]), L(pulled_domain[i])))
        report.fail(&IsoReport::injective, tag + ": extension of I(L) differs from L on element " + std::to_string(i));
    HomLocElement again = homloc_iso(pb, back);
    for (std::size_t i = 0; i < source_domain.size(); ++i)
      if (!agree(*pulled, again(source_domain[i]), T(source_domain[i])))
        report.fail(&IsoReport::surjective, tag + ": I(extension of T) != T on element " + std::to_string(i));
  }
  return report;
}

// Dual of a pullback

DualElement DualOfPullback::pull(const DualElement& eta) const {
  const auto& Y = pb_.map().source();
  Section s;
  for (std::size_t y = 0; y < Y.size(); ++y) s.push_back(eta.at(pb_.map()(y)));
  return dual_.element(std::move(s));
}

DualOfPullback dual_of_pullback(const PullbackModule& pb) {
  if (!pb.map().measure_preserving())
    throw Error(Errc::MapNotMeasurePreserving, "pushforward of the source measure differs from the target measure");
  DualOfPullback d;
  d.pb_ = pb;
  d.dual_ = dual_module(pb.pulled(), pb.exponent());
  return d;
}

IsoReport verify_dual_of_pullback(const DualOfPullback& dop, const std::vector<DualElement>& sections,
                                  const std::vector<ModuleElement>& probes, std::uint64_t seed) {
  const auto& pb = dop.pullback();
  const auto& Y = pb.map().source();
  const auto& pulled = pb.pulled();
  std::vector<ModuleElement> pulled_probes;
  Rng rng(seed);
  for (const auto& v : probes) {
    pulled_probes.push_back(pb.pull(v));
    pulled_probes.push_back(pb.pull(v).times(random_function(Y.size(), rng)));
  }
  IsoReport report = verify_chardual(dop.dual(), sections, pulled_probes, seed);

  for (std::size_t k = 0; k < sections.size(); ++k) {
    const auto& w = sections[k];
    Functional I = dop.apply(w);
    Function norms = pointwise_norm(w);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto& v = probes[i];
      Function value = I(pb.pull(v));
      Function vn = pb.pull(pointwise_norm(v));
      for (std::size_t y = 0; y < Y.size(); ++y) {
        if (pulled->negligible(y)) continue;
        if (!near(value[y], pair(w.at(y), v.at(pb.map()(y))), kRootTolerance))
          report.fail(&IsoReport::linear, "dual section " + std::to_string(k) + ": I(w)(phi^* v) != <w, v o phi> at '" +
                                              Y.label(y) + "'");
        if (!leq(abs(value[y]), norms[y] * vn[y], kRootTolerance))
          report.fail(&IsoReport::bound, "dual section " + std::to_string(k) + ": |I(w)(phi^* v)| > |w| |v| o phi at '" +
                                             Y.label(y) + "'");
      }
    }
  }
  return report;
}

// C_p and R

ModuleElement cp(const ModuleElement& v, const Exponent& p) { return v.with_exponent(p); }

ModuleElement restrict_bounded(const ModuleElement& v) { return v.with_exponent(Exponent::infinity()); }

ConsistencyReport verify_consist_dual(const BundlePtr& module, const Exponent& p) {
  ConsistencyReport report;
  DualModule d_inf = dual_module(module, Exponent::infinity());
  DualModule d_p = dual_module(module, p);

  std::vector<Section> primal = module->localized_basis();
  for (const auto& t : module->test_sections()) primal.push_back(t);
  for (std::size_t i = 0; i < primal.size(); ++i) {
    ModuleElement v(module, primal[i], Exponent::infinity());
    ModuleElement round = restrict_bounded(cp(v, p));
    if (!round.equivalent(v) || !round.exponent().is_infinite() || !(cp(v, p).exponent() == p)) {
      report.sections_preserved = false;
      if (report.witness.empty()) report.witness = "section " + std::to_string(i) + " changed under R o C_p";
    }
  }
  if (!d_inf.dual()->same_shape(*d_p.dual())) {
    report.duals_agree = false;
    report.witness = "dual fibers differ";
    return report;
  }

  auto compare = [&](const DualElement& w, const DualModule& from, const DualModule& to, const char* what) {
    Functional L = iso_sections_to_dual(w, from.primal());
    Functional transported = [L](const ModuleElement& v) { return L(v.with_exponent(Exponent::infinity())); };
    DualElement image = section_of_functional(to, transported);
    DualElement back(from.dual(), image.section(), from.q());
    if (!back.equivalent(w) || !(image.exponent() == to.q())) {
      report.duals_agree = false;
      if (report.witness.empty()) report.witness = std::string(what) + " generator differs after transport";
    }
  };
  for (const auto& w : d_inf.generators()) compare(w, d_inf, d_p, "L^inf dual");
  for (const auto& w : d_p.generators()) compare(w, d_p, d_inf, "L^q dual");
  return report;
}

}  // namespace nmforge
