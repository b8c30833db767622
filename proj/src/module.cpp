#include "nmforge/module.hpp"

#include <algorithm>

#include "nmforge/doob.hpp"
#include "nmforge/error.hpp"
#include "nmforge/random.hpp"

namespace nmforge {

Exponent::Exponent(Rational p) : value_(std::move(p)) {
  value_->canonicalize();
  if (*value_ < 1) throw Error(Errc::BadExponents, "exponent " + to_string(*value_) + " below 1");
}

const Rational& Exponent::value() const {
  if (!value_) throw Error(Errc::BadExponents, "infinite exponent has no finite value");
  return *value_;
}

Exponent Exponent::conjugate() const {
  if (!value_) return Exponent(1);
  if (*value_ == 1) return infinity();
  return Exponent(Rational(*value_ / (*value_ - 1)));
}

void check_section(const StrongBundle& bundle, const Section& s) {
  if (s.size() != bundle.size())
    throw Error(Errc::DimensionMismatch, "section defined on " + std::to_string(s.size()) + " of " +
                                             std::to_string(bundle.size()) + " points");
  for (std::size_t x = 0; x < s.size(); ++x)
    if (s[x].size() != bundle.fiber(x).dim())
      throw Error(Errc::DimensionMismatch, "value at '" + bundle.base().label(x) + "' has length " +
                                               std::to_string(s[x].size()) + ", fiber dimension is " +
                                               std::to_string(bundle.fiber(x).dim()));
}

Section zero_section(const StrongBundle& bundle) {
  Section s;
  s.reserve(bundle.size());
  for (const auto& f : bundle.fibers()) s.push_back(zero_vector(f.dim()));
  return s;
}

BundlePtr StrongBundle::make(FiniteMeasureSpace base, std::vector<FiberSpace> fibers,
                             std::vector<Section> test_sections, NullIdeal ideal) {
  if (fibers.size() != base.size())
    throw Error(Errc::DimensionMismatch, "one fiber per base point required");
  auto b = std::make_shared<StrongBundle>();
  b->base_ = std::move(base);
  b->fibers_ = std::move(fibers);
  b->ideal_ = ideal;
  for (const auto& s : test_sections) check_section(*b, s);
  b->test_sections_ = std::move(test_sections);
  return b;
}

BundlePtr StrongBundle::uniform(FiniteMeasureSpace base, const FiberSpace& fiber,
                                std::vector<Section> test_sections, NullIdeal ideal) {
  std::vector<FiberSpace> fibers(base.size(), fiber);
  return make(std::move(base), std::move(fibers), std::move(test_sections), ideal);
}

bool StrongBundle::is_test_section(const Section& s) const {
  check_section(*this, s);
  // Unknowns: one coefficient per test section; equations: every coordinate
  // at every non-negligible point.
  std::vector<RationalVector> rows;
  RationalVector rhs;
  for (std::size_t x = 0; x < size(); ++x) {
    if (negligible(x)) continue;
    for (std::size_t j = 0; j < fibers_[x].dim(); ++j) {
      RationalVector row;
      for (const auto& t : test_sections_) row.push_back(t[x][j].rational());
      rows.push_back(std::move(row));
      rhs.push_back(s[x][j].rational());
    }
  }
  if (test_sections_.empty())
    return std::all_of(rhs.begin(), rhs.end(), [](const Rational& q) { return sgn(q) == 0; });
  return solve(RationalMatrix::from_rows(rows), rhs).has_value();
}

std::size_t StrongBundle::realized_rank(std::size_t x) const {
  if (test_sections_.empty()) return 0;
  std::vector<RationalVector> values;
  for (const auto& t : test_sections_) values.push_back(to_rational(t[x]));
  return rank(RationalMatrix::from_rows(values));
}

bool StrongBundle::same_shape(const StrongBundle& other) const {
  return base_ == other.base_ && fibers_ == other.fibers_ && ideal_ == other.ideal_;
}

std::vector<Section> StrongBundle::localized_basis() const {
  std::vector<Section> out;
  for (std::size_t x = 0; x < size(); ++x) {
    if (negligible(x)) continue;
    for (std::size_t j = 0; j < fibers_[x].dim(); ++j) {
      Section s = zero_section(*this);
      s[x][j] = Real(1);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Section> StrongBundle::generators() const {
  std::vector<Section> out = test_sections_;
  for (std::size_t x = 0; x < size(); ++x)
    if (!negligible(x) && realized_rank(x) < fibers_[x].dim()) {
      auto basis = localized_basis();
      out.insert(out.end(), basis.begin(), basis.end());
      break;
    }
  return out;
}

ModuleElement::ModuleElement(BundlePtr bundle, Section section, Exponent p)
    : bundle_(std::move(bundle)), section_(std::move(section)), exponent_(std::move(p)) {
  check_section(*bundle_, section_);
  for (std::size_t x = 0; x < section_.size(); ++x)
    if (bundle_->negligible(x)) section_[x] = zero_vector(bundle_->fiber(x).dim());
}

ModuleElement ModuleElement::zero(BundlePtr bundle, Exponent p) {
  Section s = zero_section(*bundle);
  return ModuleElement(std::move(bundle), std::move(s), std::move(p));
}

void ModuleElement::check_compatible(const ModuleElement& other) const {
  if (bundle_ != other.bundle_ && !bundle_->same_shape(*other.bundle_))
    throw Error(Errc::FiberMismatch, "elements of different bundles");
}

ModuleElement ModuleElement::operator+(const ModuleElement& other) const {
  check_compatible(other);
  Section s(section_.size());
  for (std::size_t x = 0; x < s.size(); ++x) s[x] = add(section_[x], other.section_[x]);
  return ModuleElement(bundle_, std::move(s), exponent_);
}

ModuleElement ModuleElement::operator-(const ModuleElement& other) const { return *this + other.scaled(Real(-1)); }

ModuleElement ModuleElement::scaled(const Real& s) const {
  Section out(section_.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = scale(s, section_[x]);
  return ModuleElement(bundle_, std::move(out), exponent_);
}

ModuleElement ModuleElement::times(const Function& f) const {
  if (f.size() != section_.size()) throw Error(Errc::DimensionMismatch, "function is not defined on the base");
  Section out(section_.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = scale(f[x], section_[x]);
  return ModuleElement(bundle_, std::move(out), exponent_);
}

ModuleElement ModuleElement::restricted(PointSet set) const { return times(indicator(set, section_.size())); }

bool ModuleElement::equivalent(const ModuleElement& other) const {
  check_compatible(other);
  for (std::size_t x = 0; x < section_.size(); ++x)
    if (!bundle_->negligible(x) && section_[x] != other.section_[x]) return false;
  return true;
}

Function pointwise_norm(const ModuleElement& v) {
  const auto& bundle = *v.bundle();
  Function out(bundle.size());
  for (std::size_t x = 0; x < out.size(); ++x)
    if (!bundle.negligible(x)) out[x] = bundle.fiber(x).norm(v.at(x));
  return out;
}

Real lp_module_norm_pow(const ModuleElement& v) {
  const Rational& p = v.exponent().value();
  const auto& base = v.bundle()->base();
  Function norms = pointwise_norm(v);
  Real acc;
  for (std::size_t x = 0; x < base.size(); ++x)
    if (!base.is_null(x)) acc += pow(norms[x], p) * Real(base.weight(x));
  return acc;
}

Real lp_module_norm(const ModuleElement& v) {
  const auto& base = v.bundle()->base();
  if (v.exponent().is_infinite()) {
    Function norms = pointwise_norm(v);
    Real best;
    for (std::size_t x = 0; x < base.size(); ++x)
      if (!base.is_null(x)) best = max(best, norms[x]);
    return best;
  }
  return pow(lp_module_norm_pow(v), Rational(1 / v.exponent().value()));
}

ModuleElement glue(const std::vector<PointSet>& pieces, const std::vector<ModuleElement>& elements) {
  if (elements.empty() || pieces.size() != elements.size())
    throw Error(Errc::NotAPartition, "one element per piece required");
  const auto& bundle = elements.front().bundle();
  if (!is_partition(pieces, bundle->size()))
    throw Error(Errc::NotAPartition, "pieces overlap or do not cover the base");
  Section s = zero_section(*bundle);
  for (std::size_t n = 0; n < pieces.size(); ++n) {
    if (elements[n].bundle() != bundle && !elements[n].bundle()->same_shape(*bundle))
      throw Error(Errc::FiberMismatch, "glued elements live in different bundles");
    for (auto x : pieces[n].members()) s[x] = elements[n].at(x);
  }
  return ModuleElement(bundle, std::move(s), elements.front().exponent());
}

// Fiberization

Real FiberizationResult::seminorm(std::size_t x, const ModuleElement& v) const {
  return doob::rep_p(*chain_, p_, pointwise_norm(v)).rep.at(x);
}

Vector FiberizationResult::embed(std::size_t x, const ModuleElement& v) const { return v.at(x); }

Section FiberizationResult::representative(const ModuleElement& v) const {
  auto leb = doob::rep_p(*chain_, p_, pointwise_norm(v)).leb_set;
  Section s = zero_section(*bundle_);
  for (std::size_t x = 0; x < s.size(); ++x)
    if (leb.contains(x)) s[x] = embed(x, v);
  return s;
}

namespace {

ModuleElement random_module_element(const BundlePtr& bundle, const std::vector<Section>& generators, Rng& rng) {
  ModuleElement acc = ModuleElement::zero(bundle);
  for (const auto& g : generators) {
    Function coefficient(bundle->size());
    for (auto& c : coefficient) c = Real(static_cast<long>(rng.uniform(-3, 3)));
    acc = acc + ModuleElement(bundle, g).times(coefficient);
  }
  return acc;
}

}  // namespace

FiberizationResult fiberize(const BundlePtr& bundle, const PartitionChain& chain, const Rational& p,
                            const std::vector<ModuleElement>& probes, std::uint64_t seed) {
  if (!(chain.space() == bundle->base())) throw Error(Errc::FiberMismatch, "chain and bundle over different bases");
  if (!chain.fully_refining())
    throw Error(Errc::ChainNotRefining, "final level does not isolate every positive-mass point");

  FiberizationResult result;
  result.bundle_ = bundle;
  result.chain_ = std::make_shared<const PartitionChain>(chain);
  result.p_ = p;

  const auto& base = bundle->base();
  const auto generators = bundle->generators();

  bool surjective = true;
  for (std::size_t x = 0; x < base.size(); ++x) {
    if (base.is_null(x)) continue;
    PointFiber pf{x, bundle->fiber(x).dim(), 0};
    std::vector<RationalVector> values;
    for (const auto& g : generators) values.push_back(to_rational(g[x]));
    pf.realized_rank = rank(RationalMatrix::from_rows(values));
    surjective = surjective && pf.realized_rank == pf.fiber_dim;
    result.fibers_.push_back(pf);
  }

  Rng rng(seed);
  std::vector<ModuleElement> pool;
  std::vector<Function> pool_rep;
  for (std::size_t i = 0; i < kDecompositionPool; ++i) {
    pool.push_back(random_module_element(bundle, generators, rng));
    pool_rep.push_back(doob::rep_p(chain, p, pointwise_norm(pool.back())).rep);
  }

  bool consistent = true;
  bool preserved = true;
  bool injective = true;
  for (std::size_t e = 0; e < probes.size(); ++e) {
    const auto& v = probes[e];
    Function norms = pointwise_norm(v);
    auto closed = doob::rep_p(chain, p, norms);

    // Decomposition sums, evaluated at every point at once.
    std::vector<Function> sums;
    for (std::size_t i = 0; i < kDecompositionPool; ++i) {
      auto rest = doob::rep_p(chain, p, pointwise_norm(v - pool[i])).rep;
      sums.push_back(plus(pool_rep[i], rest));
    }
    for (std::size_t i = 0; i < kDecompositionPool; ++i) {
      std::size_t j = static_cast<std::size_t>(rng.uniform(0, kDecompositionPool - 1));
      auto rest = doob::rep_p(chain, p, pointwise_norm(v - pool[i] - pool[j])).rep;
      sums.push_back(plus(plus(pool_rep[i], pool_rep[j]), rest));
    }

    Section rep = result.representative(v);
    bool all_zero = true;
    for (std::size_t x = 0; x < base.size(); ++x) {
      if (base.is_null(x)) continue;
      SeminormProbe probe;
      probe.element = e;
      probe.point = x;
      probe.in_leb = closed.leb_set.contains(x);
      probe.closed_form = closed.rep[x];
      probe.fiber_norm = norms[x];
      probe.decomposition_infimum = closed.rep[x];
      probe.decompositions = sums.size() + 1;
      for (const auto& s : sums) {
        if (!leq(closed.rep[x], s[x], kRootTolerance)) probe.undercut = true;
        probe.decomposition_infimum = min(probe.decomposition_infimum, s[x]);
      }
      consistent = consistent && probe.in_leb && !probe.undercut &&
                   near(probe.closed_form, probe.fiber_norm, kRootTolerance) &&
                   near(probe.decomposition_infimum, probe.closed_form, kRootTolerance);
      Real rep_norm = bundle->fiber(x).norm(rep[x]);
      preserved = preserved && near(rep_norm, norms[x], kRootTolerance);
      all_zero = all_zero && is_zero(rep[x]);
      result.probes_.push_back(std::move(probe));
    }
    if (all_zero && !v.equivalent(ModuleElement::zero(bundle))) injective = false;
  }

  bool linear = true;
  for (std::size_t e = 0; e + 1 < probes.size(); ++e) {
    Real a(static_cast<long>(rng.uniform(-4, 4)));
    Real b(static_cast<long>(rng.uniform(-4, 4)));
    const auto& v = probes[e];
    const auto& w = probes[e + 1];
    ModuleElement combo = v.scaled(a) + w.scaled(b);
    auto leb_v = doob::rep_p(chain, p, pointwise_norm(v)).leb_set;
    auto leb_w = doob::rep_p(chain, p, pointwise_norm(w)).leb_set;
    auto leb_c = doob::rep_p(chain, p, pointwise_norm(combo)).leb_set;
    Section rv = result.representative(v);
    Section rw = result.representative(w);
    Section rc = result.representative(combo);
    for (auto x : (leb_v & leb_w & leb_c).members())
      if (rc[x] != add(scale(a, rv[x]), scale(b, rw[x]))) linear = false;
  }

  result.seminorm_consistent_ = consistent;
  result.norms_preserved_ = preserved;
  result.bijective_ = surjective && injective;
  result.linear_ = linear;
  return result;
}

}  // namespace nmforge
