#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <cmath>

#include "nmforge/duality.hpp"
#include "nmforge/random.hpp"

using namespace support;

namespace {

FiniteMeasureSpace SX() { return make_space({"a", "b"}, {q("1/2"), q("1/2")}); }
FiniteMeasureSpace SY() { return make_space({"y1", "y2", "y3"}, {q("1/4"), q("1/4"), q("1/2")}); }
MeasurableMap phi() { return MeasurableMap::make(SY(), SX(), {0, 0, 1}); }

Section v_section() { return {vec({"1", "0"}), vec({"2", "2"})}; }
BundlePtr M() { return StrongBundle::uniform(SX(), FiberSpace::lp(2, LpIndex::One), {v_section()}); }
ModuleElement v() { return ModuleElement(M(), v_section()); }

Section omega() { return {vec({"1", "0"}), vec({"0", "1"}), vec({"1", "1"})}; }

RationalVector rvec(const oracle::Vec& v) { return RationalVector(v.begin(), v.end()); }

}  // namespace

TEST_CASE("dual module of an l1 module") {
  auto dm = dual_module(M(), Exponent(2));
  CHECK(dm.q() == Exponent(2));
  CHECK(dm.dual()->fiber(0).space() == FiberSpace::lp(2, LpIndex::Inf));
  CHECK(dm.dual()->predual_of(*M()));
  CHECK(dm.generators().size() == 4);
  CHECK(dual_module(M(), Exponent::infinity()).q().is_infinite());
  CHECK(error_code([] { dual_module(M(), Exponent(1)); }) == Errc::BadExponents);
}

TEST_CASE("sections to functionals") {
  auto dm = dual_module(M(), Exponent(2));
  auto w = dm.element({vec({"1", "0"}), vec({"1", "1"})});
  CHECK(exactly(pointwise_norm(w), {"1", "1"}));
  auto I = iso_sections_to_dual(w, M());
  CHECK(exactly(I(v()), {"1", "4"}));
  CHECK(exactly(iso_sections_to_dual(DualElement::zero(dm.dual()), M())(v()), {"0", "0"}));
  CHECK(section_of_functional(dm, I).equivalent(w));
  CHECK(exactly(ess_sup_norm(w), {"1", "1"}));
  CHECK(dualnorm_bound_holds(w, v_section()));

  auto other = StrongBundle::uniform(SY(), FiberSpace::lp(2, LpIndex::One));
  CHECK(error_code([&] { iso_sections_to_dual(w, other); }) == Errc::FiberMismatch);
}

TEST_CASE("one-point base recovers the dual Banach space") {
  auto point = make_space({"*"}, {q("1")});
  auto poly = FiberSpace::polyhedral({RationalVector{1, 0}, RationalVector{0, 1}, RationalVector{1, 1}});
  auto b = StrongBundle::uniform(point, poly);
  auto dm = dual_module(b, Exponent(2));
  auto w = dm.element({vec({"2", "-1"})});
  CHECK(pointwise_norm(w)[0] == dual_fiber(poly).norm(vec({"2", "-1"})));
  CHECK(exactly(pointwise_norm(w), {"3"}));
}

TEST_CASE("chardual on random bundles") {
  Rng rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = static_cast<std::size_t>(rng.uniform(1, 5));
    std::vector<std::string> labels;
    std::vector<Rational> weights;
    std::vector<FiberSpace> fibers;
    std::vector<std::vector<oracle::Vec>> functionals(n);
    for (std::size_t x = 0; x < n; ++x) {
      labels.push_back("x" + std::to_string(x));
      weights.push_back(x == 0 || !rng.chance(1, 4) ? rng.rational(1, 6, 8) : Rational(0));
      std::size_t d = static_cast<std::size_t>(rng.uniform(1, 3));
      if (rng.coin()) {
        fibers.push_back(FiberSpace::lp(d, rng.coin() ? LpIndex::One : LpIndex::Inf));
        continue;
      }
      for (std::size_t i = 0; i < d; ++i) {
        oracle::Vec row(d, 0);
        row[i] = 1;
        functionals[x].push_back(row);
      }
      oracle::Vec extra;
      for (std::size_t i = 0; i < d; ++i) extra.push_back(rng.rational(-3, 3, 2));
      functionals[x].push_back(extra);
      std::vector<RationalVector> g;
      for (const auto& row : functionals[x]) g.push_back(rvec(row));
      fibers.push_back(FiberSpace::polyhedral(g));
    }
    auto b = StrongBundle::make(make_space(labels, weights), fibers);
    auto dm = dual_module(b, Exponent(2));
    std::vector<DualElement> sections = dm.generators();
    std::vector<ModuleElement> probes;
    Section ws, vs;
    for (const auto& f : fibers) {
      Vector wx, vx;
      for (std::size_t j = 0; j < f.dim(); ++j) {
        wx.emplace_back(static_cast<long>(rng.uniform(-8, 8)));
        vx.emplace_back(static_cast<long>(rng.uniform(-8, 8)));
      }
      ws.push_back(wx);
      vs.push_back(vx);
    }
    sections.push_back(dm.element(ws));
    probes.emplace_back(b, vs);
    auto r = verify_chardual(dm, sections, probes, static_cast<std::uint64_t>(trial));
    CHECK_MESSAGE(r.ok(), r.witness);

    auto norms = pointwise_norm(dm.element(ws));
    for (std::size_t x = 0; x < n; ++x) {
      if (b->negligible(x)) continue;
      auto wo = rationals(ws[x]);
      oracle::Q expected = fibers[x].family() == FiberSpace::Family::Polyhedral ? oracle::dual_norm_poly(functionals[x], wo)
                           : fibers[x].index() == LpIndex::One                 ? oracle::norm_linf(wo)
                                                                               : oracle::norm_l1(wo);
      CHECK(rationals({norms[x]})[0] == expected);
    }
  }
}

TEST_CASE("local operators on the pullback") {
  auto pb = pullback_module(phi(), M());
  auto dop = dual_of_pullback(pb);
  auto w = dop.dual().element(omega());
  auto L = dop.apply(w);
  auto V = pb.pull(v());
  CHECK(exactly(L(V), {"1", "0", "4"}));

  auto T = homloc_iso(pb, L);
  CHECK(exactly(T(v()), {"1", "0", "4"}));
  CHECK(exactly(T.norm(), {"1", "1", "1"}));
  auto back = homloc_inverse(T);
  CHECK(exactly(back(V), {"1", "0", "4"}));

  auto zero = homloc_iso(pb, dop.apply(DualElement::zero(dop.dual().dual())));
  CHECK(exactly(zero(v()), {"0", "0", "0"}));
  CHECK(exactly(zero.norm(), {"0", "0", "0"}));

  auto r = verify_homloc(pb, {L, random_functional(*pb.pulled(), 3)}, {v()});
  CHECK_MESSAGE(r.ok(), r.witness);
}

TEST_CASE("dual of the pullback") {
  auto pb = pullback_module(phi(), M());
  auto dop = dual_of_pullback(pb);
  auto w = dop.dual().element(omega());
  CHECK(exactly(dop.apply(w)(pb.pull(v())), {"1", "0", "4"}));
  CHECK(dop.section(dop.apply(w)).equivalent(w));
  CHECK(exactly(dop.apply(DualElement::zero(dop.dual().dual()))(pb.pull(v())), {"0", "0", "0"}));

  auto dm = dual_module(M(), Exponent(2));
  auto eta = dm.element({vec({"1", "-1"}), vec({"0", "2"})});
  auto pulled = dop.pull(eta);
  CHECK(pulled.section() == Section{vec({"1", "-1"}), vec({"1", "-1"}), vec({"0", "2"})});
  auto via_base = pb.pull(iso_sections_to_dual(eta, M())(v()));
  CHECK(dop.apply(pulled)(pb.pull(v())) == via_base);

  auto r = verify_dual_of_pullback(dop, {w, pulled}, {v()});
  CHECK_MESSAGE(r.ok(), r.witness);
}

TEST_CASE("C_p and R keep the section") {
  auto point = make_space({"*"}, {q("1/4")});
  auto b = StrongBundle::uniform(point, FiberSpace::lp(2, LpIndex::One));
  ModuleElement e(b, {vec({"3", "-1"})}, Exponent::infinity());
  CHECK(exactly(lp_module_norm(e), "4"));
  auto c = cp(e, Exponent(2));
  CHECK(c.section() == e.section());
  CHECK(exactly(lp_module_norm(c), "2"));
  CHECK(restrict_bounded(c).exponent().is_infinite());
  CHECK(verify_consist_dual(M(), Exponent(2)).ok());
  CHECK(verify_consist_dual(b, Exponent(3)).ok());
}
