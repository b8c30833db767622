#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmforge/doob.hpp"
#include "nmforge/duality.hpp"
#include "nmforge/error.hpp"
#include "nmforge/lifting.hpp"
#include "nmforge/pullback.hpp"
#include "nmforge/scenario.hpp"
#include "nmforge/suites.hpp"
#include "nmforge/weakstar.hpp"

using namespace nmforge;

namespace {

// Left-aligned columns, two spaces apart.
class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void row(std::vector<std::string> r) { rows_.push_back(std::move(r)); }
  void print(std::ostream& out) const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], r[i].size());
      }
    for (const auto& r : rows_) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line += r[i];
        if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
      }
      out << line << "\n";
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string vec(const Vector& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].str();
  return s + ")";
}

std::string verdict(bool ok) { return ok ? "ok" : "FAIL"; }

Exponent parse_exponent(const std::string& text) {
  if (text == "inf") return Exponent::infinity();
  return Exponent(parse_rational(text));
}

/// The named entry, or the only entry satisfying `fits` when no name is given.
template <class Map, class Fits>
std::string pick(const Map& entries, const std::string& given, const char* kind, Fits fits) {
  if (!given.empty()) {
    if (!entries.count(given)) throw Error(Errc::InvalidScenario, std::string("no ") + kind + " named '" + given + "'");
    return given;
  }
  std::vector<std::string> found;
  for (const auto& [name, e] : entries)
    if (fits(e)) found.push_back(name);
  if (found.size() != 1)
    throw Error(Errc::InvalidScenario, std::string(found.empty() ? "no suitable " : "several candidate ") + kind +
                                           "s; name one with --" + kind);
  return found.front();
}

auto any = [](const auto&) { return true; };

void print_report(std::ostream& out, const std::string& title, bool ok, const std::string& witness) {
  out << title << ": " << verdict(ok);
  if (!ok && !witness.empty()) out << " (" << witness << ")";
  out << "\n";
}

template <class R>
bool emit(std::ostream& out, const std::string& title, const R& r) {
  print_report(out, title, r.ok(), r.witness);
  return r.ok();
}

// rep

int cmd_rep(const Scenario& sc, const std::string& fname, std::string cname, const std::string& p_text) {
  const auto& fe = sc.function(fname);
  cname = pick(sc.chains, cname, "chain", [&](const Scenario::ChainEntry& c) { return c.space == fe.space; });
  const auto& chain = sc.chain(cname).chain;
  if (sc.chain(cname).space != fe.space) throw Error(Errc::InvalidScenario, "chain and function live on different spaces");
  const auto& S = chain.space();
  doob::RepResult r = p_text.empty() ? doob::rep(chain, fe.values) : doob::rep_p(chain, parse_rational(p_text), fe.values);
  std::cout << "function " << fname << " on " << fe.space << ", chain " << cname;
  if (!p_text.empty()) std::cout << ", p = " << p_text;
  std::cout << "\n";
  Table t({"point", "weight", "f", "leb", p_text.empty() ? "rep" : "rep_p"});
  for (std::size_t x = 0; x < S.size(); ++x)
    t.row({S.label(x), to_string(S.weight(x)), fe.values[x].str(), r.leb_set.contains(x) ? "yes" : "no", r.rep[x].str()});
  t.print(std::cout);
  std::cout << "leb_set: " << S.describe(r.leb_set) << "\n";
  std::cout << "stabilization_level: " << r.stabilization_level << "\n";
  return 0;
}

// pullback

int cmd_pullback(const Scenario& sc, const std::string& bname, std::string mname, const Exponent& p) {
  const auto& b = sc.bundle(bname);
  mname = pick(sc.maps, mname, "map", [&](const Scenario::MapEntry& m) { return m.target == b.space; });
  const auto& phi = sc.map(mname).map;
  PullbackModule pb = pullback_module(phi, b.bundle, p);
  const auto& Y = phi.source();
  std::cout << "pullback of " << bname << " along " << mname << ", p = " << p.str() << "\n";
  Table t({"point", "weight", "image", "fiber"});
  for (std::size_t y = 0; y < Y.size(); ++y)
    t.row({Y.label(y), to_string(Y.weight(y)), phi.target().label(phi(y)), pb.pulled()->fiber(y).describe()});
  t.print(std::cout);
  bool ok = true;
  for (const auto& [sname, s] : b.sections) {
    ModuleElement v(b.bundle, s, p);
    Function lhs = pointwise_norm(pb.pull(v));
    Function rhs = phi.compose(pointwise_norm(v));
    std::cout << "\nsection " << sname << "\n";
    Table n({"point", "|phi^*v|", "|v| o phi"});
    for (std::size_t y = 0; y < Y.size(); ++y) n.row({Y.label(y), lhs[y].str(), rhs[y].str()});
    n.print(std::cout);
    bool holds = pb.norm_identity_holds(v);
    ok = ok && holds;
    std::cout << "norm identity: " << verdict(holds) << "\n";
  }
  return ok ? 0 : 1;
}

// dual

int cmd_dual(const Scenario& sc, const std::string& bname, const Exponent& p) {
  const auto& b = sc.bundle(bname);
  DualModule dm = dual_module(b.bundle, p);
  const auto& S = b.bundle->base();
  std::cout << "dual of " << bname << ", p = " << p.str() << ", q = " << dm.q().str() << "\n";
  Table f({"point", "fiber", "dual fiber"});
  for (std::size_t x = 0; x < S.size(); ++x)
    f.row({S.label(x), b.bundle->fiber(x).describe(), dm.dual()->fiber(x).space().describe()});
  f.print(std::cout);
  std::vector<DualElement> sections = dm.generators();
  for (const auto& [name, d] : sc.dual_sections) {
    if (d.bundle != bname || d.map) continue;
    DualElement w = dm.element(d.values);
    sections.push_back(w);
    Function norm = pointwise_norm(w);
    std::cout << "\ndual section " << name << "\n";
    std::vector<std::string> header{"point", "functional", "|w|"};
    for (const auto& [sname, s] : b.sections) header.push_back("<w, " + sname + ">");
    Table t(header);
    std::vector<Function> pairings;
    for (const auto& [sname, s] : b.sections) pairings.push_back(weak_pairing(w, s));
    for (std::size_t x = 0; x < S.size(); ++x) {
      std::vector<std::string> row{S.label(x), vec(w.at(x)), norm[x].str()};
      for (const auto& pv : pairings) row.push_back(pv[x].str());
      t.row(row);
    }
    t.print(std::cout);
  }
  std::cout << "\n";
  bool ok = emit(std::cout, "isomorphism", verify_chardual(dm, sections, sc.elements(bname, p)));
  if (!p.is_infinite()) ok = emit(std::cout, "L^inf consistency", verify_consist_dual(b.bundle, p)) && ok;
  return ok ? 0 : 1;
}

// dual-of-pullback

int cmd_dual_of_pullback(const Scenario& sc, std::string dname, const Exponent& p) {
  dname = pick(sc.dual_sections, dname, "dual-section", [](const Scenario::DualSectionEntry& d) { return d.map.has_value(); });
  const auto& d = sc.dual_section(dname);
  if (!d.map) throw Error(Errc::InvalidScenario, "dual section '" + dname + "' has no map");
  const auto& m = sc.map(*d.map);
  const auto& b = sc.bundle(d.bundle);
  const auto& phi = m.map;
  const auto& Y = phi.source();
  PullbackModule pb = pullback_module(phi, b.bundle, p);
  DualOfPullback dop = dual_of_pullback(pb);
  DualElement w = dop.dual().element(d.values);
  Function norm = pointwise_norm(w);
  Functional L = dop.apply(w);
  std::cout << "dual of the pullback of " << d.bundle << " along " << *d.map << ", p = " << p.str()
            << ", dual section " << dname << "\n";
  std::vector<std::string> header{"point", "image", "functional", "|w|"};
  std::vector<Function> values;
  for (const auto& [sname, s] : b.sections) {
    header.push_back("I(w)(phi^*" + sname + ")");
    values.push_back(L(pb.pull(ModuleElement(b.bundle, s, p))));
  }
  Table t(header);
  for (std::size_t y = 0; y < Y.size(); ++y) {
    std::vector<std::string> row{Y.label(y), phi.target().label(phi(y)), vec(w.at(y)), norm[y].str()};
    for (const auto& v : values) row.push_back(v[y].str());
    t.row(row);
  }
  t.print(std::cout);
  std::cout << "\n";
  auto probes = sc.elements(d.bundle, p);
  std::vector<DualElement> sections = dop.dual().generators();
  sections.push_back(w);
  bool ok = emit(std::cout, "isomorphism", verify_dual_of_pullback(dop, sections, probes));
  Lifting lx = sc.lifting_on(m.target);
  Lifting ly = compatible_lifting(phi, lx);
  ok = emit(std::cout, "lifting route", verify_dpb2(dop, lx, ly, {L}, probes)) && ok;
  return ok ? 0 : 1;
}

// lift

std::string set_of(const FiniteMeasureSpace& S, PointSet E) { return S.describe(E); }

int cmd_lift(const Scenario& sc, const std::string& what, std::string space, std::string bname, std::string mname,
             const Exponent& p) {
  if (what == "diagram") {
    mname = pick(sc.maps, mname, "map", any);
    const auto& m = sc.map(mname);
    bname = pick(sc.bundles, bname, "module", [&](const Scenario::BundleEntry& b) { return b.space == m.target; });
    PullbackModule pb = pullback_module(m.map, sc.bundle(bname).bundle, p);
    Lifting lx = sc.lifting_on(m.target);
    Lifting ly = compatible_lifting(m.map, lx);
    const auto& Y = m.map.source();
    std::cout << "lifting diagram for " << bname << " along " << mname << "\n";
    Table t({"point", "t_Y", "phi", "t_X o phi"});
    for (std::size_t y = 0; y < Y.size(); ++y)
      t.row({Y.label(y), Y.label(ly.t(y)), m.map.target().label(m.map(y)), m.map.target().label(lx.t(m.map(y)))});
    t.print(std::cout);
    DiagramReport r = pullback_commutes(pb, lx, ly, sc.elements(bname, p));
    std::cout << "probes: " << r.probes << "\n";
    return emit(std::cout, "diagram", r) ? 0 : 1;
  }

  if (what == "atoms") {
    space = pick(sc.spaces, space, "space", any);
    Lifting l = sc.lifting_on(space);
    const auto& S = l.space();
    std::cout << "lifting on " << space << "\n";
    Table t({"point", "weight", "t"});
    for (std::size_t x = 0; x < S.size(); ++x) t.row({S.label(x), to_string(S.weight(x)), S.label(l.t(x))});
    t.print(std::cout);
    std::cout << "atoms:";
    for (auto A : lifted_atoms(l)) std::cout << " " << set_of(S, A);
    std::cout << "\n";
    LiftingReport r = check_lifting(l);
    std::cout << "lattice: " << (r.exhaustive ? "exhaustive" : "sampled") << ", " << r.pairs_checked << " pairs\n";
    bool ok = emit(std::cout, "axioms", r);
    ok = emit(std::cout, "atoms", check_atoms(l)) && ok;
    bool fr = fibre_r_check(l);
    print_report(std::cout, "lifted L^inf fibers", fr, {});
    return ok && fr ? 0 : 1;
  }

  if (what != "module" && what != "morphism")
    throw Error(Errc::InvalidScenario, "--what must be atoms, module, morphism or diagram");
  bname = pick(sc.bundles, bname, "module", any);
  const auto& b = sc.bundle(bname);
  Lifting l = sc.lifting_on(b.space);
  LiftedModule lm = lift_module(l, b.bundle);
  const auto& S = l.space();
  auto probes = sc.elements(bname, p);

  if (what == "module") {
    std::cout << "lifted module of " << bname << "\n";
    for (const auto& v : probes) {
      ModuleElement lv = lm.lift(v);
      Function lhs = pointwise_norm(lv), rhs = l.lift(pointwise_norm(v));
      Table t({"point", "t", "l(v)", "|l(v)|", "l(|v|)"});
      for (std::size_t x = 0; x < S.size(); ++x)
        t.row({S.label(x), S.label(l.t(x)), vec(lv.at(x)), lhs[x].str(), rhs[x].str()});
      t.print(std::cout);
      std::cout << "\n";
    }
    return emit(std::cout, "lifted module", check_lifted_module(lm, probes)) ? 0 : 1;
  }

  bool ok = true;
  std::cout << "lifted morphisms on " << bname << "\n";
  for (const auto& [fname, fe] : sc.functions) {
    if (fe.space != b.space) continue;
    Function f = fe.values;
    Morphism T = [f](const ModuleElement& v) { return v.times(f); };
    LiftedMorphism lt = lift_morphism(lm, lm, T);
    Function expect = l.lift(morphism_norm(b.bundle, b.bundle, T));
    std::cout << "\nmultiply by " << fname << "\n";
    Table t({"point", "|lT|", "l(|T|)"});
    for (std::size_t x = 0; x < S.size(); ++x) t.row({S.label(x), lt.norm()[x].str(), expect[x].str()});
    t.print(std::cout);
    ok = emit(std::cout, "morphism", check_lifted_morphism(lt, T, probes)) && ok;
  }
  return ok ? 0 : 1;
}

// weakstar

std::vector<std::string> split(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_weakstar(const Scenario& sc, std::optional<std::size_t> levels, const std::string& probe_list,
                 const std::string& e_text, std::string dname, std::string cname, const Exponent& p) {
  dname = pick(sc.dual_sections, dname, "dual-section", [](const Scenario::DualSectionEntry& d) { return d.map.has_value(); });
  const auto& d = sc.dual_section(dname);
  if (!d.map) throw Error(Errc::InvalidScenario, "dual section '" + dname + "' has no map");
  const auto& m = sc.map(*d.map);
  const auto& b = sc.bundle(d.bundle);
  cname = pick(sc.chains, cname, "chain", [&](const Scenario::ChainEntry& c) { return c.space == m.source; });
  const auto& chain = sc.chain(cname);
  if (chain.space != m.source) throw Error(Errc::InvalidScenario, "chain '" + cname + "' is not on the source space");

  PullbackModule pb = pullback_module(m.map, b.bundle, p);
  DualOfPullback dop = dual_of_pullback(pb);
  Functional L = dop.apply(dop.dual().element(d.values));
  Exponent e = e_text.empty() ? p.conjugate() : parse_exponent(e_text);

  std::vector<std::string> names = probe_list.empty() ? std::vector<std::string>{} : split(probe_list);
  if (names.empty())
    for (const auto& [sname, s] : b.sections) names.push_back(sname);
  std::vector<ModuleElement> probes;
  for (const auto& n : names) {
    auto it = std::find_if(b.sections.begin(), b.sections.end(), [&](const auto& s) { return s.first == n; });
    if (it == b.sections.end()) throw Error(Errc::InvalidScenario, "bundle '" + d.bundle + "' has no section '" + n + "'");
    probes.emplace_back(b.bundle, it->second, p);
  }

  ApproximationRun run = approximation_sequence(pb, L, chain.chain, probes, e, levels);
  std::cout << "weak* approximation of " << dname << " along chain " << cname << ", p = " << p.str()
            << ", e = " << e.str() << "\n";
  std::vector<std::string> header{"level", "cells"};
  for (const auto& n : names) header.push_back("gap[" + n + "]");
  header.insert(header.end(), {"int|L_k|^e", "bound"});
  Table t(header);
  for (const auto& rec : run.levels) {
    std::vector<std::string> row{std::to_string(rec.level), std::to_string(chain.chain.level(rec.level).size())};
    for (const auto& g : rec.gaps) row.push_back(g.str());
    row.push_back(rec.integral.str());
    row.push_back(verdict(rec.bound_holds));
    t.row(row);
  }
  t.print(std::cout);
  std::cout << "int|L|^e: " << run.integral.str() << "\n";
  std::cout << "separating level: " << (run.separating_level ? std::to_string(*run.separating_level) : "none") << "\n";
  std::cout << "monotone gaps: " << (run.monotone ? "yes" : "no") << "\n";
  print_report(std::cout, "gaps vanish", run.gaps_vanish, {});
  print_report(std::cout, "uniform bound", run.uniform_bound, {});
  print_report(std::cout, "jensen", run.jensen, {});
  print_report(std::cout, "run", run.ok(), run.witness);
  return run.ok() ? 0 : 1;
}

// verify

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text) {
  auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      auto s = std::stoull(text);
      return {s, s};
    }
    auto a = std::stoull(text.substr(0, dots));
    auto b = std::stoull(text.substr(dots + 2));
    if (a > b) throw std::invalid_argument("empty range");
    return {a, b};
  } catch (const std::logic_error&) {
    throw Error(Errc::InvalidScenario, "--seeds expects A..B, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normed modules over finite measure spaces: constructions and verification"};
  app.require_subcommand(1);

  std::string scenario_path, function_name, chain_name, p_text, module_name, map_name, what, space_name;
  std::string suite, seeds, format = "text", exponent_text, probes_text, dual_name;
  std::uint64_t seed = 1;
  std::size_t levels = 0;
  SizeProfile profile;

  auto scenario_opt = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("--scenario", scenario_path, "Scenario JSON file");
    if (required) o->required();
  };

  auto* rep = app.add_subcommand("rep", "Leb/Rep of a function through a partition chain");
  scenario_opt(rep);
  rep->add_option("--function", function_name, "Function name")->required();
  rep->add_option("--chain", chain_name, "Chain name (default: the only chain on the function's space)");
  rep->add_option("--p", p_text, "Compute Rep_p instead of Rep");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", suite, "Suite name")->required();
  auto* vs = verify->add_option("--scenario", scenario_path, "Scenario JSON file");
  auto* vr = verify->add_option("--seeds", seeds, "Seed range A..B of generated instances");
  vs->excludes(vr);
  verify->add_option("--p", p_text, "Module exponent (default 2)");
  verify->add_option("--exponent", exponent_text, "Exponent of the weak* uniform bound (default: both p and q)");
  verify->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  auto* pullback = app.add_subcommand("pullback", "Fibers and norm identity of a pullback module");
  scenario_opt(pullback);
  pullback->add_option("--module", module_name, "Bundle name")->required();
  pullback->add_option("--map", map_name, "Map name (default: the only map into the bundle's space)");
  pullback->add_option("--p", p_text, "Module exponent (default 2)");

  auto* dual = app.add_subcommand("dual", "Fiberwise dual of a module");
  scenario_opt(dual);
  dual->add_option("--module", module_name, "Bundle name")->required();
  dual->add_option("--p", p_text, "Module exponent (default 2)");

  auto* dop = app.add_subcommand("dual-of-pullback", "Dual of a pullback module applied to a dual section");
  scenario_opt(dop);
  dop->add_option("--dual-section", dual_name, "Dual section name (default: the only one over a map)");
  dop->add_option("--p", p_text, "Module exponent (default 2)");

  auto* lift = app.add_subcommand("lift", "Liftings, lifted modules, morphisms and the pullback diagram");
  scenario_opt(lift);
  lift->add_option("--what", what, "atoms, module, morphism or diagram")
      ->required()
      ->check(CLI::IsMember({"atoms", "module", "morphism", "diagram"}));
  lift->add_option("--space", space_name, "Space for --what atoms");
  lift->add_option("--module", module_name, "Bundle name");
  lift->add_option("--map", map_name, "Map for --what diagram");
  lift->add_option("--p", p_text, "Module exponent (default 2)");

  auto* weak = app.add_subcommand("weakstar", "Approximating sequence L_k of a functional on a pullback");
  scenario_opt(weak);
  weak->add_option("--levels", levels, "Number of chain levels to use (default: all)");
  weak->add_option("--probes", probes_text, "Comma-separated section names (default: all)");
  weak->add_option("--exponent", exponent_text, "Exponent e of the uniform bound (default q)");
  weak->add_option("--dual-section", dual_name, "Dual section defining L");
  weak->add_option("--chain", chain_name, "Chain on the source space");
  weak->add_option("--p", p_text, "Module exponent (default 2)");

  auto* gen = app.add_subcommand("generate", "Print a random scenario");
  gen->add_option("--seed", seed, "Seed")->required();
  gen->add_option("--max-points", profile.max_points, "Points per space");
  gen->add_option("--max-dim", profile.max_dim, "Fiber dimension");
  gen->add_option("--max-null", profile.max_null, "Null points over all spaces");
  gen->add_option("--max-den", profile.max_den, "Weight denominators");

  CLI11_PARSE(app, argc, argv);

  try {
    Exponent p = p_text.empty() ? Exponent(2) : parse_exponent(p_text);
    auto load = [&] { return load_scenario(scenario_path); };

    if (rep->parsed()) return cmd_rep(load(), function_name, chain_name, p_text);
    if (pullback->parsed()) return cmd_pullback(load(), module_name, map_name, p);
    if (dual->parsed()) return cmd_dual(load(), module_name, p);
    if (dop->parsed()) return cmd_dual_of_pullback(load(), dual_name, p);
    if (lift->parsed()) return cmd_lift(load(), what, space_name, module_name, map_name, p);
    if (weak->parsed())
      return cmd_weakstar(load(), levels ? std::optional<std::size_t>(levels) : std::nullopt, probes_text,
                          exponent_text, dual_name, chain_name, p);
    if (gen->parsed()) {
      std::cout << generate_scenario_text(seed, profile);
      return 0;
    }
    if (verify->parsed()) {
      SuiteOptions options;
      options.p = p;
      if (!exponent_text.empty()) options.exponent = parse_exponent(exponent_text);
      Report report;
      if (!scenario_path.empty()) {
        report = run_suite(suite, load(), scenario_path, options);
      } else if (!seeds.empty()) {
        auto [a, b] = parse_range(seeds);
        report = run_suite(suite, a, b, options);
      } else {
        throw Error(Errc::InvalidScenario, "verify needs --scenario FILE or --seeds A..B");
      }
      std::cout << (format == "json" ? format_json(report) : format_text(report));
      return report.ok() ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
