#include "nmforge/pullback.hpp"

#include "nmforge/error.hpp"

namespace nmforge {

PullbackModule pullback_module(const MeasurableMap& phi, const BundlePtr& module, Exponent p) {
  if (!phi.measure_preserving())
    throw Error(Errc::MapNotMeasurePreserving, "pushforward of the source measure differs from the target measure");
  if (!(module->base() == phi.target())) throw Error(Errc::FiberMismatch, "module does not live on the map's target");
  PullbackModule pb;
  pb.map_ = phi;
  pb.source_ = module;
  pb.exponent_ = std::move(p);
  std::vector<FiberSpace> fibers;
  for (std::size_t y = 0; y < phi.source().size(); ++y) fibers.push_back(module->fiber(phi(y)));
  std::vector<Section> tests;
  for (const auto& t : module->test_sections()) {
    Section s;
    for (std::size_t y = 0; y < phi.source().size(); ++y) s.push_back(t[phi(y)]);
    tests.push_back(std::move(s));
  }
  pb.pulled_ = StrongBundle::make(phi.source(), std::move(fibers), std::move(tests), module->ideal());
  for (const auto& t : module->test_sections()) {
    if (!pb.norm_identity_holds(ModuleElement(module, t)))
      throw Error(Errc::InvariantViolation, "|phi^* v| differs from |v| o phi on a test section");
  }
  return pb;
}

ModuleElement PullbackModule::pull(const ModuleElement& v) const {
  if (v.bundle() != source_ && !v.bundle()->same_shape(*source_))
    throw Error(Errc::FiberMismatch, "element is not in the pulled-back module");
  Section s;
  s.reserve(map_.source().size());
  for (std::size_t y = 0; y < map_.source().size(); ++y) s.push_back(v.at(map_(y)));
  return ModuleElement(pulled_, std::move(s), exponent_);
}

bool PullbackModule::norm_identity_holds(const ModuleElement& v) const {
  Function lhs = pointwise_norm(pull(v));
  Function rhs = map_.compose(pointwise_norm(v));
  return map_.source().ae_equal(lhs, rhs);
}

std::vector<std::pair<Function, ModuleElement>> PullbackModule::generation_witness(const ModuleElement& V) const {
  std::vector<std::pair<Function, ModuleElement>> terms;
  const auto& Y = map_.source();
  const auto& X = map_.target();
  for (std::size_t x = 0; x < X.size(); ++x) {
    if (source_->negligible(x)) continue;
    PointSet fiber = map_.preimage(PointSet::singleton(x));
    for (std::size_t j = 0; j < source_->fiber(x).dim(); ++j) {
      Section basis = zero_section(*source_);
      basis[x][j] = Real(1);
      Function coefficient(Y.size());
      for (auto y : fiber.members()) coefficient[y] = V.at(y)[j];
      terms.emplace_back(std::move(coefficient), ModuleElement(source_, std::move(basis), exponent_));
    }
  }
  return terms;
}

// FormalPullback

FormalPullback::FormalPullback(const PullbackModule& pb) : pb_(pb) {
  generators_ = pb.source()->generators();
}

FormalPullback::Element FormalPullback::generator(std::size_t i) const {
  Element e;
  e.coefficients.assign(generators_.size(), Function(pb_.map().source().size()));
  e.coefficients.at(i) = Function(pb_.map().source().size(), Real(1));
  return e;
}

FormalPullback::Element FormalPullback::combine(const Element& a, const Real& s, const Element& b) const {
  Element out;
  for (std::size_t i = 0; i < generators_.size(); ++i)
    out.coefficients.push_back(plus(a.coefficients.at(i), scaled(s, b.coefficients.at(i))));
  return out;
}

ModuleElement FormalPullback::to_realized(const Element& e) const {
  const auto& Y = pb_.map().source();
  Section s = zero_section(*pb_.pulled());
  for (std::size_t y = 0; y < Y.size(); ++y)
    for (std::size_t i = 0; i < generators_.size(); ++i)
      s[y] = add(s[y], scale(e.coefficients.at(i).at(y), generators_[i][pb_.map()(y)]));
  return ModuleElement(pb_.pulled(), std::move(s), pb_.exponent());
}

Function FormalPullback::pointwise_norm(const Element& e) const {
  // Evaluated directly from the generators, without building the realized section.
  const auto& Y = pb_.map().source();
  Function out(Y.size());
  for (std::size_t y = 0; y < Y.size(); ++y) {
    if (Y.is_null(y)) continue;
    std::size_t x = pb_.map()(y);
    Vector value = zero_vector(pb_.source()->fiber(x).dim());
    for (std::size_t i = 0; i < generators_.size(); ++i) value = add(value, scale(e.coefficients.at(i).at(y), generators_[i][x]));
    out[y] = pb_.source()->fiber(x).norm(value);
  }
  return out;
}

bool FormalPullback::equivalent(const Element& a, const Element& b) const {
  Function d = pointwise_norm(combine(a, Real(-1), b));
  for (const auto& v : d)
    if (!v.is_zero()) return false;
  return true;
}

FormalPullback::Element FormalPullback::from_realized(const ModuleElement& V) const {
  const auto& Y = pb_.map().source();
  Element e;
  e.coefficients.assign(generators_.size(), Function(Y.size()));
  for (std::size_t y = 0; y < Y.size(); ++y) {
    if (Y.is_null(y)) continue;
    std::size_t x = pb_.map()(y);
    std::vector<RationalVector> columns;
    for (const auto& g : generators_) columns.push_back(to_rational(g[x]));
    auto coeffs = solve(RationalMatrix::from_columns(columns), to_rational(V.at(y)));
    if (!coeffs)
      throw Error(Errc::InvariantViolation, "value at '" + Y.label(y) + "' is outside the span of the generators");
    for (std::size_t i = 0; i < generators_.size(); ++i) e.coefficients[i][y] = Real((*coeffs)[i]);
  }
  return e;
}

UniquenessReport verify_uniqueness(const PullbackModule& pb, const std::vector<ModuleElement>& realized_probes,
                                   const std::vector<FormalPullback::Element>& formal_probes) {
  UniquenessReport report;
  FormalPullback formal(pb);
  const auto& Y = pb.map().source();
  const auto& gens = pb.source()->test_sections().empty() ? pb.source()->localized_basis() : pb.source()->test_sections();
  for (std::size_t i = 0; i < gens.size(); ++i) {
    auto image = formal.from_realized(pb.pull(ModuleElement(pb.source(), gens[i], pb.exponent())));
    if (!formal.equivalent(image, formal.generator(i))) {
      report.generators_matched = false;
      report.witness = "generator " + std::to_string(i);
    }
  }
  for (std::size_t k = 0; k < realized_probes.size(); ++k) {
    const auto& V = realized_probes[k];
    FormalPullback::Element image;
    try {
      image = formal.from_realized(V);
    } catch (const Error& e) {
      report.round_trip_realized = false;
      report.witness = "realized probe " + std::to_string(k) + ": " + e.what();
      continue;
    }
    if (!Y.ae_equal(formal.pointwise_norm(image), pointwise_norm(V))) {
      report.norm_preserving = false;
      report.witness = "realized probe " + std::to_string(k);
    }
    if (!formal.to_realized(image).equivalent(V)) {
      report.round_trip_realized = false;
      report.witness = "realized probe " + std::to_string(k);
    }
  }
  for (std::size_t k = 0; k < formal_probes.size(); ++k) {
    const auto& e = formal_probes[k];
    ModuleElement V = formal.to_realized(e);
    if (!Y.ae_equal(pointwise_norm(V), formal.pointwise_norm(e))) {
      report.norm_preserving = false;
      report.witness = "formal probe " + std::to_string(k);
    }
    if (!formal.equivalent(formal.from_realized(V), e)) {
      report.round_trip_formal = false;
      report.witness = "formal probe " + std::to_string(k);
    }
  }
  return report;
}

// Local operators

Function ExtendedOperator::apply(const ModuleElement& V) const {
  const auto& Y = pb_.map().source();
  Function out(Y.size());
  for (std::size_t y = 0; y < Y.size(); ++y)
    if (!Y.is_null(y)) out[y] = pair(kernel_[y], V.at(y));
  return out;
}

bool ExtendedOperator::dominated(const ModuleElement& V) const {
  const auto& Y = pb_.map().source();
  Function value = apply(V);
  Function norms = pointwise_norm(V);
  for (std::size_t y = 0; y < Y.size(); ++y)
    if (!Y.is_null(y) && !leq(abs(value[y]), bound_[y] * norms[y], kRootTolerance)) return false;
  return true;
}

ExtendedOperator extend_local_operator(const PullbackModule& pb, const LocalOperator& op, const Function& bound) {
  const auto& Y = pb.map().source();
  const auto& source = pb.source();
  if (bound.size() != Y.size()) throw Error(Errc::DimensionMismatch, "bound is not a function on the source space");

  auto check = [&](const ModuleElement& v, const std::string& what) {
    Function value = op(v);
    Function rhs = times(bound, pb.map().compose(pointwise_norm(v)));
    for (std::size_t y = 0; y < Y.size(); ++y)
      if (!Y.is_null(y) && !leq(abs(value.at(y)), rhs[y], kRootTolerance))
        throw Error(Errc::DominationFails, what + " at '" + Y.label(y) + "': |T(v)| = " + abs(value[y]).str() +
                                               " > " + rhs[y].str());
  };

  Section kernel = zero_section(*pb.pulled());
  for (std::size_t x = 0; x < source->size(); ++x) {
    if (source->negligible(x)) continue;
    for (std::size_t j = 0; j < source->fiber(x).dim(); ++j) {
      Section basis = zero_section(*source);
      basis[x][j] = Real(1);
      ModuleElement e(source, std::move(basis), pb.exponent());
      check(e, "basis section e_" + std::to_string(j) + " at '" + source->base().label(x) + "'");
      Function value = op(e);
      for (auto y : pb.map().preimage(PointSet::singleton(x)).members())
        if (!Y.is_null(y)) kernel[y][j] = value[y];
    }
  }
  ExtendedOperator extended(pb, std::move(kernel), bound);
  for (std::size_t i = 0; i < source->test_sections().size(); ++i) {
    ModuleElement t(source, source->test_sections()[i], pb.exponent());
    check(t, "test section " + std::to_string(i));
    if (!Y.ae_equal(extended.apply(pb.pull(t)), op(t)))
      throw Error(Errc::InvariantViolation, "operator is not local on test section " + std::to_string(i));
  }
  return extended;
}

bool agree_on_generators(const ExtendedOperator& a, const ExtendedOperator& b) {
  const auto& pb = a.pullback();
  const auto& Y = pb.map().source();
  for (const auto& basis : pb.source()->localized_basis()) {
    ModuleElement v(pb.source(), basis, pb.exponent());
    if (!Y.ae_equal(a.apply(pb.pull(v)), b.apply(pb.pull(v)))) return false;
  }
  return true;
}

}  // namespace nmforge
