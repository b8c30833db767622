#include "nmforge/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nmforge/error.hpp"
#include "nmforge/random.hpp"

namespace nmforge {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(Errc::InvalidScenario, path + ": " + what);
}

const Json& object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed,
                   std::initializer_list<const char*> required = {}) {
  if (!j.is_object()) invalid(path, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) invalid(path, "unknown field '" + key + "'");
  for (const char* key : required)
    if (!j.contains(key)) invalid(path, std::string("missing field '") + key + "'");
  return j;
}

std::string string_of(const Json& j, const std::string& path) {
  if (!j.is_string()) invalid(path, "expected a string");
  return j.get<std::string>();
}

Rational rational_of(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (!j.is_string()) invalid(path, "expected a rational as a string \"p/q\" or an integer");
  try {
    return parse_rational(j.get<std::string>());
  } catch (const Error& e) {
    invalid(path, e.detail());
  }
}

const Json& named(const Json& j, const std::string& path) {
  if (!j.is_object()) invalid(path, "expected an object of named entries");
  return j;
}

const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected an array");
  return j;
}

RationalVector rationals_of(const Json& j, const std::string& path) {
  RationalVector out;
  std::size_t i = 0;
  for (const auto& v : array(j, path)) out.push_back(rational_of(v, path + "[" + std::to_string(i++) + "]"));
  return out;
}

template <class F>
auto wrap(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.detail());
  }
}

FiberSpace fiber_of(const Json& j, const std::string& path) {
  object(j, path, {"kind", "p", "dim", "weights", "functionals"}, {"kind"});
  std::string kind = string_of(j["kind"], path + ".kind");
  if (kind == "lp") {
    if (!j.contains("p")) invalid(path, "missing field 'p'");
    const Json& pj = j["p"];
    std::string p = pj.is_number_integer() ? std::to_string(pj.get<long>()) : string_of(pj, path + ".p");
    LpIndex index;
    if (p == "1")
      index = LpIndex::One;
    else if (p == "2")
      index = LpIndex::Two;
    else if (p == "inf")
      index = LpIndex::Inf;
    else
      invalid(path + ".p", "expected \"1\", \"2\" or \"inf\"");
    if (j.contains("functionals")) invalid(path, "'functionals' belongs to kind \"poly\"");
    if (j.contains("weights")) {
      RationalVector w = rationals_of(j["weights"], path + ".weights");
      if (j.contains("dim") && j["dim"] != Json(w.size())) invalid(path + ".dim", "does not match the weights");
      return wrap(path, [&] { return FiberSpace::weighted_lp(index, w); });
    }
    if (!j.contains("dim") || !j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0)
      invalid(path + ".dim", "expected a positive integer");
    return wrap(path, [&] { return FiberSpace::lp(j["dim"].get<std::size_t>(), index); });
  }
  if (kind == "poly") {
    if (j.contains("p") || j.contains("weights")) invalid(path, "kind \"poly\" takes only 'functionals'");
    if (!j.contains("functionals")) invalid(path, "missing field 'functionals'");
    std::vector<RationalVector> g;
    std::size_t i = 0;
    for (const auto& row : array(j["functionals"], path + ".functionals"))
      g.push_back(rationals_of(row, path + ".functionals[" + std::to_string(i++) + "]"));
    FiberSpace f = wrap(path, [&] { return FiberSpace::polyhedral(g); });
    if (j.contains("dim") && j["dim"] != Json(f.dim())) invalid(path + ".dim", "does not match the functionals");
    return f;
  }
  invalid(path + ".kind", "expected \"lp\" or \"poly\"");
}

Section section_of(const Json& j, const std::string& path, const std::vector<std::size_t>& dims) {
  array(j, path);
  if (j.size() != dims.size())
    invalid(path, "expected " + std::to_string(dims.size()) + " point values, got " + std::to_string(j.size()));
  Section s;
  for (std::size_t x = 0; x < dims.size(); ++x) {
    std::string p = path + "[" + std::to_string(x) + "]";
    RationalVector v = rationals_of(j[x], p);
    if (v.size() != dims[x]) invalid(p, "expected a vector of length " + std::to_string(dims[x]));
    s.push_back(to_real(v));
  }
  return s;
}

std::size_t point_of(const FiniteMeasureSpace& space, const Json& j, const std::string& path) {
  std::string label = string_of(j, path);
  auto i = space.find(label);
  if (!i) throw Error(Errc::UnknownPoint, path + ": no point '" + label + "'");
  return *i;
}

template <class Map>
const typename Map::mapped_type& lookup(const Map& m, const std::string& name, const char* kind) {
  auto it = m.find(name);
  if (it == m.end()) throw Error(Errc::InvalidScenario, std::string("no ") + kind + " named '" + name + "'");
  return it->second;
}

}  // namespace

const FiniteMeasureSpace& Scenario::space(const std::string& name) const { return lookup(spaces, name, "space"); }
const Scenario::MapEntry& Scenario::map(const std::string& name) const { return lookup(maps, name, "map"); }
const Scenario::ChainEntry& Scenario::chain(const std::string& name) const { return lookup(chains, name, "chain"); }
const Scenario::BundleEntry& Scenario::bundle(const std::string& name) const { return lookup(bundles, name, "bundle"); }
const Scenario::FunctionEntry& Scenario::function(const std::string& name) const {
  return lookup(functions, name, "function");
}
const Scenario::DualSectionEntry& Scenario::dual_section(const std::string& name) const {
  return lookup(dual_sections, name, "dual section");
}

std::vector<ModuleElement> Scenario::elements(const std::string& name, const Exponent& p) const {
  const auto& b = bundle(name);
  std::vector<ModuleElement> out;
  for (const auto& [label, s] : b.sections) out.emplace_back(b.bundle, s, p);
  return out;
}

Lifting Scenario::lifting_on(const std::string& space_name) const {
  for (const auto& [name, entry] : liftings)
    if (entry.space == space_name) return entry.lifting;
  return default_lifting(space(space_name));
}

Scenario parse_scenario(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    invalid("document", e.what());
  }
  object(doc, "document", {"spaces", "maps", "chains", "bundles", "functions", "liftings", "dual_sections"},
         {"spaces"});
  Scenario sc;

  for (const auto& [name, j] : named(doc["spaces"], "spaces").items()) {
    std::string path = "spaces." + name;
    object(j, path, {"points", "weights"}, {"points", "weights"});
    std::vector<std::string> labels;
    std::size_t i = 0;
    for (const auto& l : array(j["points"], path + ".points"))
      labels.push_back(string_of(l, path + ".points[" + std::to_string(i++) + "]"));
    RationalVector weights = rationals_of(j["weights"], path + ".weights");
    if (weights.size() != labels.size()) invalid(path, "points and weights differ in length");
    sc.spaces.emplace(name, wrap(path, [&] { return make_space(labels, weights); }));
  }

  if (doc.contains("maps")) {
    for (const auto& [name, j] : named(doc["maps"], "maps").items()) {
      std::string path = "maps." + name;
      object(j, path, {"source", "target", "assign"}, {"source", "target", "assign"});
      Scenario::MapEntry e;
      e.source = string_of(j["source"], path + ".source");
      e.target = string_of(j["target"], path + ".target");
      const auto& Y = wrap(path, [&]() -> const FiniteMeasureSpace& { return sc.space(e.source); });
      const auto& X = wrap(path, [&]() -> const FiniteMeasureSpace& { return sc.space(e.target); });
      if (!j["assign"].is_object()) invalid(path + ".assign", "expected an object from source to target labels");
      std::vector<std::optional<std::size_t>> assign(Y.size());
      for (const auto& [from, to] : j["assign"].items()) {
        std::size_t y = point_of(Y, Json(from), path + ".assign");
        assign[y] = point_of(X, to, path + ".assign." + from);
      }
      std::vector<std::size_t> full;
      for (std::size_t y = 0; y < Y.size(); ++y) {
        if (!assign[y]) invalid(path + ".assign", "no image for '" + Y.label(y) + "'");
        full.push_back(*assign[y]);
      }
      e.map = MeasurableMap::make(Y, X, std::move(full));
      sc.maps.emplace(name, std::move(e));
    }
  }

  if (doc.contains("chains")) {
    for (const auto& [name, j] : named(doc["chains"], "chains").items()) {
      std::string path = "chains." + name;
      object(j, path, {"space", "generators"}, {"space", "generators"});
      Scenario::ChainEntry e{string_of(j["space"], path + ".space"), {}};
      const auto& S = wrap(path, [&]() -> const FiniteMeasureSpace& { return sc.space(e.space); });
      std::vector<std::vector<std::string>> gens;
      std::size_t i = 0;
      for (const auto& g : array(j["generators"], path + ".generators")) {
        std::string gp = path + ".generators[" + std::to_string(i++) + "]";
        std::vector<std::string> labels;
        std::size_t k = 0;
        for (const auto& l : array(g, gp)) labels.push_back(string_of(l, gp + "[" + std::to_string(k++) + "]"));
        gens.push_back(std::move(labels));
      }
      e.chain = wrap(path, [&] { return build_chain(S, gens); });
      sc.chains.emplace(name, std::move(e));
    }
  }

  if (doc.contains("bundles")) {
    for (const auto& [name, j] : named(doc["bundles"], "bundles").items()) {
      std::string path = "bundles." + name;
      object(j, path, {"space", "fibers", "sections"}, {"space", "fibers"});
      Scenario::BundleEntry e;
      e.space = string_of(j["space"], path + ".space");
      const auto& S = wrap(path, [&]() -> const FiniteMeasureSpace& { return sc.space(e.space); });
      std::vector<FiberSpace> fibers;
      if (j["fibers"].is_array()) {
        if (j["fibers"].size() != S.size()) invalid(path + ".fibers", "expected one fiber per point");
        for (std::size_t x = 0; x < S.size(); ++x)
          fibers.push_back(fiber_of(j["fibers"][x], path + ".fibers[" + std::to_string(x) + "]"));
      } else {
        fibers.assign(S.size(), fiber_of(j["fibers"], path + ".fibers"));
      }
      std::vector<std::size_t> dims;
      for (const auto& f : fibers) dims.push_back(f.dim());
      std::vector<Section> tests;
      if (j.contains("sections")) {
        if (!j["sections"].is_object()) invalid(path + ".sections", "expected an object of named sections");
        for (const auto& [sname, sj] : j["sections"].items()) {
          Section s = section_of(sj, path + ".sections." + sname, dims);
          e.sections.emplace_back(sname, s);
          tests.push_back(std::move(s));
        }
      }
      e.bundle = StrongBundle::make(S, std::move(fibers), std::move(tests));
      sc.bundles.emplace(name, std::move(e));
    }
  }

  if (doc.contains("functions")) {
    for (const auto& [name, j] : named(doc["functions"], "functions").items()) {
      std::string path = "functions." + name;
      object(j, path, {"space", "values"}, {"space", "values"});
      Scenario::FunctionEntry e;
      e.space = string_of(j["space"], path + ".space");
      const auto& S = wrap(path, [&]() -> const FiniteMeasureSpace& { return sc.space(e.space); });
      RationalVector v = rationals_of(j["values"], path + ".values");
      if (v.size() != S.size()) invalid(path + ".values", "expected one value per point");
      e.values = to_real(v);
      sc.functions.emplace(name, std::move(e));
    }
  }

  if (doc.contains("liftings")) {
    for (const auto& [name, j] : named(doc["liftings"], "liftings").items()) {
      std::string path = "liftings." + name;
      object(j, path, {"space", "retraction"}, {"space"});
      std::string space_name = string_of(j["space"], path + ".space");
      const auto& S = wrap(path, [&]() -> const FiniteMeasureSpace& { return sc.space(space_name); });
      std::vector<std::size_t> t(S.size());
      for (std::size_t x = 0; x < S.size(); ++x) t[x] = x;
      if (j.contains("retraction")) {
        if (!j["retraction"].is_object()) invalid(path + ".retraction", "expected an object from null to positive points");
        for (const auto& [from, to] : j["retraction"].items())
          t[point_of(S, Json(from), path + ".retraction")] = point_of(S, to, path + ".retraction." + from);
      }
      sc.liftings.emplace(name, Scenario::LiftingEntry{space_name, wrap(path, [&] { return make_lifting(S, t); })});
    }
  }

  if (doc.contains("dual_sections")) {
    for (const auto& [name, j] : named(doc["dual_sections"], "dual_sections").items()) {
      std::string path = "dual_sections." + name;
      object(j, path, {"bundle", "map", "values"}, {"bundle", "values"});
      Scenario::DualSectionEntry e;
      e.bundle = string_of(j["bundle"], path + ".bundle");
      const auto& b = wrap(path, [&]() -> const Scenario::BundleEntry& { return sc.bundle(e.bundle); });
      std::vector<std::size_t> dims;
      if (j.contains("map")) {
        e.map = string_of(j["map"], path + ".map");
        const auto& m = wrap(path, [&]() -> const Scenario::MapEntry& { return sc.map(*e.map); });
        if (m.target != b.space) invalid(path + ".map", "map target is not the bundle's space");
        for (std::size_t y = 0; y < m.map.source().size(); ++y) dims.push_back(b.bundle->fiber(m.map(y)).dim());
      } else {
        for (const auto& f : b.bundle->fibers()) dims.push_back(f.dim());
      }
      e.values = section_of(j["values"], path + ".values", dims);
      sc.dual_sections.emplace(name, std::move(e));
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidScenario, "cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

// Random instances

namespace {

Json random_fiber(Rng& rng, const SizeProfile& profile) {
  std::size_t dim = static_cast<std::size_t>(rng.uniform(1, static_cast<std::int64_t>(profile.max_dim)));
  switch (rng.uniform(0, 6)) {
    case 0:
    case 1:
      return {{"kind", "lp"}, {"p", "1"}, {"dim", dim}};
    case 2:
    case 3:
      return {{"kind", "lp"}, {"p", "inf"}, {"dim", dim}};
    case 4:
      return {{"kind", "lp"}, {"p", "2"}, {"dim", dim}};
    case 5: {
      Json w = Json::array();
      for (std::size_t i = 0; i < dim; ++i) w.push_back(to_string(rng.rational(1, 4, 4)));
      return {{"kind", "lp"}, {"p", rng.coin() ? "1" : "inf"}, {"weights", w}};
    }
    default: {
      std::size_t d = std::min<std::size_t>(dim, 3);
      Json g = Json::array();
      for (std::size_t i = 0; i < d; ++i) {
        Json row = Json::array();
        for (std::size_t k = 0; k < d; ++k) row.push_back(i == k ? 1 : 0);
        g.push_back(row);
      }
      for (std::int64_t extra = rng.uniform(1, 2); extra > 0; --extra) {
        Json row = Json::array();
        bool nonzero = false;
        for (std::size_t k = 0; k < d; ++k) {
          std::int64_t c = rng.uniform(-2, 2);
          nonzero = nonzero || c != 0;
          row.push_back(c);
        }
        if (nonzero) g.push_back(row);
      }
      return {{"kind", "poly"}, {"functionals", g}};
    }
  }
}

std::size_t fiber_dim(const Json& spec) {
  if (spec.contains("dim")) return spec["dim"].get<std::size_t>();
  if (spec.contains("weights")) return spec["weights"].size();
  return spec["functionals"][0].size();
}

Json random_values(Rng& rng, const std::vector<std::size_t>& dims, std::int64_t bound) {
  Json s = Json::array();
  for (auto d : dims) {
    Json v = Json::array();
    for (std::size_t i = 0; i < d; ++i) v.push_back(rng.uniform(-bound, bound));
    s.push_back(v);
  }
  return s;
}

Json random_chain(Rng& rng, const std::string& space, const std::vector<std::string>& labels) {
  Json gens = Json::array();
  for (std::int64_t k = rng.uniform(0, 2); k > 0; --k) {
    Json g = Json::array();
    for (const auto& l : labels)
      if (rng.coin()) g.push_back(l);
    gens.push_back(g);
  }
  for (const auto& l : labels) gens.push_back(Json::array({l}));
  return {{"space", space}, {"generators", gens}};
}

}  // namespace

std::string generate_scenario_text(std::uint64_t seed, const SizeProfile& profile) {
  if (profile.max_points < 1 || profile.max_dim < 1 || profile.max_den < 1 || profile.coordinate_bound < 0)
    throw Error(Errc::InvalidScenario, "size profile needs at least one point, dimension one and denominator one");
  if (profile.max_points > kMaxPoints) throw Error(Errc::InvalidScenario, "size profile exceeds the carrier limit");
  Rng rng(seed);
  auto np = static_cast<std::int64_t>(profile.max_points);
  std::size_t ny = static_cast<std::size_t>(rng.uniform(1, np));
  std::size_t nx = static_cast<std::size_t>(rng.uniform(1, static_cast<std::int64_t>(ny)));

  std::vector<std::size_t> assign(ny);
  for (auto& a : assign) a = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(nx) - 1));

  std::vector<Rational> wy(ny);
  for (auto& w : wy) w = rng.chance(1, 4) ? Rational(0) : rng.rational(1, 8, profile.max_den);
  if (std::all_of(wy.begin(), wy.end(), [](const Rational& w) { return sgn(w) == 0; }))
    wy[0] = rng.rational(1, 8, profile.max_den);

  auto masses = [&] {
    std::vector<Rational> wx(nx, Rational(0));
    for (std::size_t y = 0; y < ny; ++y) wx[assign[y]] += wy[y];
    return wx;
  };
  auto null_count = [&] {
    auto wx = masses();
    std::size_t n = 0;
    for (const auto& w : wy) n += sgn(w) == 0;
    for (const auto& w : wx) n += sgn(w) == 0;
    return n;
  };
  // Empty fibers of phi become null points of X; keep the total within the profile.
  while (null_count() > profile.max_null) {
    auto wx = masses();
    bool changed = false;
    for (std::size_t y = 0; y < ny && !changed; ++y)
      if (sgn(wy[y]) == 0) {
        wy[y] = rng.rational(1, 8, profile.max_den);
        changed = true;
      }
    if (changed) continue;
    std::vector<std::size_t> count(nx, 0);
    for (auto a : assign) ++count[a];
    std::size_t empty = 0, donor = 0;
    while (count[empty] != 0) ++empty;
    for (std::size_t y = 0; y < ny; ++y)
      if (count[assign[y]] > 1) donor = y;
    assign[donor] = empty;
  }
  auto wx = masses();

  std::vector<std::string> xl, yl;
  for (std::size_t i = 0; i < nx; ++i) xl.push_back("x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < ny; ++i) yl.push_back("y" + std::to_string(i + 1));

  Json doc;
  Json X{{"points", xl}, {"weights", Json::array()}};
  for (const auto& w : wx) X["weights"].push_back(to_string(w));
  Json Y{{"points", yl}, {"weights", Json::array()}};
  for (const auto& w : wy) Y["weights"].push_back(to_string(w));
  doc["spaces"] = {{"X", X}, {"Y", Y}};

  Json a = Json::object();
  for (std::size_t y = 0; y < ny; ++y) a[yl[y]] = xl[assign[y]];
  doc["maps"] = {{"phi", {{"source", "Y"}, {"target", "X"}, {"assign", a}}}};

  doc["chains"] = {{"cX", random_chain(rng, "X", xl)}, {"cY", random_chain(rng, "Y", yl)}};

  Json fibers;
  std::vector<std::size_t> dims;
  if (rng.coin()) {
    fibers = random_fiber(rng, profile);
    dims.assign(nx, fiber_dim(fibers));
  } else {
    fibers = Json::array();
    for (std::size_t x = 0; x < nx; ++x) {
      fibers.push_back(random_fiber(rng, profile));
      dims.push_back(fiber_dim(fibers.back()));
    }
  }
  Json sections = Json::object();
  for (std::int64_t k = 1, n = rng.uniform(1, 3); k <= n; ++k)
    sections["v" + std::to_string(k)] = random_values(rng, dims, profile.coordinate_bound);
  doc["bundles"] = {{"M", {{"space", "X"}, {"fibers", fibers}, {"sections", sections}}}};

  auto values = [&](std::size_t n) {
    Json v = Json::array();
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(-profile.coordinate_bound, profile.coordinate_bound));
    return v;
  };
  doc["functions"] = {{"fX", {{"space", "X"}, {"values", values(nx)}}},
                      {"gX", {{"space", "X"}, {"values", values(nx)}}},
                      {"fY", {{"space", "Y"}, {"values", values(ny)}}},
                      {"gY", {{"space", "Y"}, {"values", values(ny)}}}};

  std::vector<std::size_t> positive;
  for (std::size_t x = 0; x < nx; ++x)
    if (sgn(wx[x]) > 0) positive.push_back(x);
  Json retraction = Json::object();
  for (std::size_t x = 0; x < nx; ++x)
    if (sgn(wx[x]) == 0)
      retraction[xl[x]] = xl[positive[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(positive.size()) - 1))]];
  doc["liftings"] = {{"lX", {{"space", "X"}, {"retraction", retraction}}}};

  std::vector<std::size_t> pulled_dims;
  for (std::size_t y = 0; y < ny; ++y) pulled_dims.push_back(dims[assign[y]]);
  doc["dual_sections"] = {
      {"omega", {{"bundle", "M"}, {"map", "phi"}, {"values", random_values(rng, pulled_dims, profile.coordinate_bound)}}}};
  return doc.dump(2) + "\n";
}

Scenario generate_instance(std::uint64_t seed, const SizeProfile& profile) {
  return parse_scenario(generate_scenario_text(seed, profile));
}

}  // namespace nmforge
