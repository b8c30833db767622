#include "nmforge/measure.hpp"

#include <algorithm>
#include <set>

#include "nmforge/error.hpp"

namespace nmforge {

std::vector<std::size_t> PointSet::members() const {
  std::vector<std::size_t> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
  return out;
}

std::optional<std::size_t> FiniteMeasureSpace::find(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t FiniteMeasureSpace::index_of(std::string_view label) const {
  auto i = find(label);
  if (!i) throw Error(Errc::UnknownPoint, "no point labelled '" + std::string(label) + "'");
  return *i;
}

PointSet FiniteMeasureSpace::support() const {
  PointSet s;
  for (std::size_t i = 0; i < size(); ++i)
    if (!is_null(i)) s.insert(i);
  return s;
}

Rational FiniteMeasureSpace::mass(PointSet set) const {
  Rational m = 0;
  for (auto i : set.members()) m += weights_.at(i);
  return m;
}

Real FiniteMeasureSpace::integrate(const Function& f) const {
  if (f.size() != size()) throw Error(Errc::DimensionMismatch, "function length differs from carrier size");
  Real acc;
  for (std::size_t i = 0; i < size(); ++i)
    if (!is_null(i)) acc += f[i] * Real(weights_[i]);
  return acc;
}

Real FiniteMeasureSpace::l1_norm(const Function& f) const {
  if (f.size() != size()) throw Error(Errc::DimensionMismatch, "function length differs from carrier size");
  Real acc;
  for (std::size_t i = 0; i < size(); ++i)
    if (!is_null(i)) acc += abs(f[i]) * Real(weights_[i]);
  return acc;
}

bool FiniteMeasureSpace::ae_equal(const Function& f, const Function& g) const {
  for (std::size_t i = 0; i < size(); ++i)
    if (!is_null(i) && f.at(i) != g.at(i)) return false;
  return true;
}

Function FiniteMeasureSpace::canonical(Function f) const {
  for (std::size_t i = 0; i < size(); ++i)
    if (is_null(i)) f.at(i) = Real();
  return f;
}

std::string FiniteMeasureSpace::describe(PointSet set) const {
  std::string out = "{";
  bool first = true;
  for (auto i : set.members()) {
    if (!first) out += ",";
    out += label(i);
    first = false;
  }
  return out + "}";
}

FiniteMeasureSpace make_space(std::vector<std::string> labels, std::vector<Rational> weights) {
  if (labels.size() != weights.size()) throw Error(Errc::DimensionMismatch, "labels and weights differ in length");
  if (labels.size() > kMaxPoints) throw Error(Errc::InvalidScenario, "carrier exceeds 64 points");
  std::set<std::string> seen;
  bool any_positive = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    weights[i].canonicalize();
    if (!seen.insert(labels[i]).second) throw Error(Errc::DuplicateLabel, "label '" + labels[i] + "' repeated");
    if (sgn(weights[i]) < 0) throw Error(Errc::NegativeWeight, "point '" + labels[i] + "' has weight " + to_string(weights[i]));
    if (sgn(weights[i]) > 0) any_positive = true;
  }
  if (!any_positive) throw Error(Errc::AllNull, "no point of positive mass");
  FiniteMeasureSpace s;
  s.labels_ = std::move(labels);
  s.weights_ = std::move(weights);
  return s;
}

MeasurableMap MeasurableMap::make(FiniteMeasureSpace source, FiniteMeasureSpace target,
                                  std::vector<std::size_t> assign) {
  if (assign.size() != source.size()) throw Error(Errc::DimensionMismatch, "map is not defined on every source point");
  for (std::size_t y = 0; y < assign.size(); ++y)
    if (assign[y] >= target.size())
      throw Error(Errc::UnknownPoint, "image of '" + source.label(y) + "' is outside the target");
  MeasurableMap m;
  m.source_ = std::move(source);
  m.target_ = std::move(target);
  m.assign_ = std::move(assign);
  Function one(m.source_.size(), Real(1));
  Function pushed = pushforward(m, one);
  m.measure_preserving_ = true;
  m.absolutely_continuous_ = true;
  for (std::size_t x = 0; x < m.target_.size(); ++x) {
    if (pushed[x] != Real(m.target_.weight(x))) m.measure_preserving_ = false;
    if (m.target_.is_null(x) && !pushed[x].is_zero()) m.absolutely_continuous_ = false;
  }
  return m;
}

MeasurableMap MeasurableMap::identity(const FiniteMeasureSpace& space) {
  std::vector<std::size_t> assign(space.size());
  for (std::size_t i = 0; i < assign.size(); ++i) assign[i] = i;
  return make(space, space, std::move(assign));
}

PointSet MeasurableMap::preimage(PointSet target_set) const {
  PointSet out;
  for (std::size_t y = 0; y < assign_.size(); ++y)
    if (target_set.contains(assign_[y])) out.insert(y);
  return out;
}

Function MeasurableMap::compose(const Function& f) const {
  if (f.size() != target_.size()) throw Error(Errc::DimensionMismatch, "function is not defined on the target");
  Function out(source_.size());
  for (std::size_t y = 0; y < source_.size(); ++y) out[y] = f[assign_[y]];
  return out;
}

Function pushforward(const MeasurableMap& map, const Function& f) {
  const auto& src = map.source();
  if (f.size() != src.size()) throw Error(Errc::DimensionMismatch, "function is not defined on the source");
  Function out(map.target().size());
  for (std::size_t y = 0; y < src.size(); ++y)
    if (!src.is_null(y)) out[map(y)] += f[y] * Real(src.weight(y));
  return out;
}

Function radon_nikodym(const Function& nu, const FiniteMeasureSpace& mu) {
  if (nu.size() != mu.size()) throw Error(Errc::DimensionMismatch, "measure length differs from carrier size");
  Function g(mu.size());
  for (std::size_t x = 0; x < mu.size(); ++x) {
    if (mu.is_null(x)) {
      if (!nu[x].is_zero())
        throw Error(Errc::NotAbsolutelyContinuous, "mass " + nu[x].str() + " on null point '" + mu.label(x) + "'");
      continue;
    }
    g[x] = nu[x] / Real(mu.weight(x));
  }
  return g;
}

const std::vector<PointSet>& PartitionChain::level(std::size_t k) const {
  if (k >= levels_.size())
    throw Error(Errc::LevelOutOfRange, "level " + std::to_string(k) + " of a chain with " +
                                           std::to_string(levels_.size()) + " levels");
  return levels_[k];
}

std::size_t PartitionChain::cell_of(std::size_t k, std::size_t x) const {
  const auto& cells = level(k);
  for (std::size_t c = 0; c < cells.size(); ++c)
    if (cells[c].contains(x)) return c;
  throw Error(Errc::UnknownPoint, "point index " + std::to_string(x) + " not covered");
}

PartitionChain build_chain(const FiniteMeasureSpace& space, const std::vector<PointSet>& generators) {
  PointSet carrier = space.carrier();
  for (const auto& g : generators)
    if (!g.subset_of(carrier)) throw Error(Errc::UnknownPoint, "generator leaves the carrier");
  PartitionChain chain;
  chain.space_ = space;
  chain.generators_ = generators;
  chain.levels_.push_back({carrier});
  for (const auto& g : generators) {
    std::vector<PointSet> next;
    for (const auto& cell : chain.levels_.back()) {
      PointSet inside = cell & g;
      PointSet outside = cell - g;
      if (!inside.empty()) next.push_back(inside);
      if (!outside.empty()) next.push_back(outside);
    }
    std::sort(next.begin(), next.end(), [](PointSet a, PointSet b) { return a.first() < b.first(); });
    chain.levels_.push_back(std::move(next));
  }
  PointSet support = space.support();
  chain.fully_refining_ = std::all_of(chain.levels_.back().begin(), chain.levels_.back().end(),
                                      [&](PointSet cell) { return (cell & support).size() <= 1; });
  return chain;
}

PartitionChain build_chain(const FiniteMeasureSpace& space,
                           const std::vector<std::vector<std::string>>& generators) {
  std::vector<PointSet> sets;
  for (const auto& g : generators) {
    PointSet s;
    for (const auto& label : g) s.insert(space.index_of(label));
    sets.push_back(s);
  }
  return build_chain(space, sets);
}

Function indicator(PointSet set, std::size_t n) {
  Function out(n);
  for (auto i : set.members())
    if (i < n) out[i] = Real(1);
  return out;
}

namespace {

template <typename Op>
Function zip(const Function& f, const Function& g, Op op) {
  if (f.size() != g.size()) throw Error(Errc::DimensionMismatch, "functions on different carriers");
  Function out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = op(f[i], g[i]);
  return out;
}

}  // namespace

Function plus(const Function& f, const Function& g) {
  return zip(f, g, [](const Real& a, const Real& b) { return a + b; });
}

Function minus(const Function& f, const Function& g) {
  return zip(f, g, [](const Real& a, const Real& b) { return a - b; });
}

Function times(const Function& f, const Function& g) {
  return zip(f, g, [](const Real& a, const Real& b) { return a * b; });
}

Function scaled(const Real& s, const Function& f) {
  Function out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = s * f[i];
  return out;
}

bool refines(const std::vector<PointSet>& fine, const std::vector<PointSet>& coarse) {
  for (const auto& cell : fine) {
    int containing = 0;
    for (const auto& big : coarse)
      if (cell.subset_of(big)) ++containing;
    if (containing != 1) return false;
  }
  return true;
}

bool is_partition(const std::vector<PointSet>& cells, std::size_t n) {
  PointSet seen;
  for (const auto& c : cells) {
    if (!(seen & c).empty()) return false;
    seen = seen | c;
  }
  return seen == PointSet::full(n);
}

}  // namespace nmforge
