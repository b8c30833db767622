#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "nmforge/random.hpp"
#include "nmforge/weakstar.hpp"

using namespace support;

namespace {

struct Canonical {
  Scenario sc = canonical();
  const MeasurableMap& phi = sc.map("phi").map;
  PullbackModule pb = pullback_module(phi, sc.bundle("M").bundle);
  DualOfPullback dop = dual_of_pullback(pb);
  Functional L = dop.apply(dop.dual().element(sc.dual_section("omega").values));
  ModuleElement v = sc.elements("M").front();
};

struct RandomMap {
  MeasurableMap map;
  std::vector<std::size_t> assign;
  oracle::Vec wy, wx;
};

RandomMap random_map(Rng& rng) {
  std::size_t ny = static_cast<std::size_t>(rng.uniform(1, 8)), nx = static_cast<std::size_t>(rng.uniform(1, 4));
  RandomMap r;
  std::vector<std::string> ly, lx;
  r.wx.assign(nx, 0);
  for (std::size_t y = 0; y < ny; ++y) {
    ly.push_back("y" + std::to_string(y));
    r.wy.push_back(rng.chance(1, 5) ? oracle::Q(0) : rng.rational(1, 7, 8));
    r.assign.push_back(static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(nx) - 1)));
    r.wx[r.assign.back()] += r.wy.back();
  }
  if (r.wy[0] == 0) {
    r.wy[0] = 1;
    r.wx[r.assign[0]] += 1;
  }
  for (std::size_t x = 0; x < nx; ++x) lx.push_back("x" + std::to_string(x));
  r.map = MeasurableMap::make(make_space(ly, {r.wy.begin(), r.wy.end()}), make_space(lx, {r.wx.begin(), r.wx.end()}),
                              r.assign);
  return r;
}

oracle::Vec random_values(std::size_t n, Rng& rng) {
  oracle::Vec v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(rng.rational(-6, 6, 4));
  return v;
}

}  // namespace

TEST_CASE("pr on the canonical map") {
  Canonical c;
  CHECK(exactly(pr(c.phi, fn({"1", "3", "2"})), {"2", "2"}));
  CHECK(exactly(pr(c.phi, fn({"0", "0", "0"})), {"0", "0"}));
  CHECK(exactly(pr(c.phi, c.phi.compose(fn({"5", "-1"}))), {"5", "-1"}));
  CHECK(check_pr(c.phi, fn({"1", "-3", "2"}), fn({"4", "1"})).ok());
  auto moving = MeasurableMap::make(c.phi.source(), make_space({"a", "b"}, {q("1"), q("0")}), {0, 0, 1});
  CHECK(error_code([&] { pr(moving, fn({"1", "1", "1"})); }) == Errc::NotAbsolutelyContinuous);
}

TEST_CASE("localized functionals") {
  Canonical c;
  const auto& Y = c.phi.source();
  CHECK(exactly(localized_functional(c.pb, c.L, Y.carrier())(c.v), {"1/2", "4"}));
  CHECK(exactly(localized_functional(c.pb, c.L, PointSet())(c.v), {"0", "0"}));
  CHECK(exactly(localized_functional(c.pb, c.L, PointSet::singleton(2))(c.v), {"0", "4"}));
  for (std::uint64_t e = 0; e < 8; ++e) CHECK(check_localized(c.pb, c.L, PointSet(e), {c.v}).ok());
}

TEST_CASE("approximation on the canonical scenario") {
  Canonical c;
  const auto& chain = c.sc.chain("cY").chain;
  auto run = approximation_sequence(c.pb, c.L, chain, {c.v}, Exponent(2));
  REQUIRE(run.levels.size() == 2);
  CHECK(exactly(run.levels[0].gaps[0], "1/4"));
  CHECK(exactly(embedded_action(c.pb, run.levels[0].approximant, c.v), {"1/2", "1/2", "4"}));
  CHECK(exactly(run.levels[1].gaps[0], "0"));
  REQUIRE(run.separating_level.has_value());
  CHECK(*run.separating_level == 1);
  CHECK(run.ok());
  for (const auto& level : run.levels) CHECK(level.integral <= run.integral);

  auto one = approximation_sequence(c.pb, c.L, chain, {c.v}, Exponent(2), 1);
  CHECK(one.levels.size() == 1);
  CHECK(error_code([&] { approximation_sequence(c.pb, c.L, chain, {c.v}, Exponent(2), 3); }) == Errc::LevelOutOfRange);
}

TEST_CASE("an embedded functional is reproduced at every level") {
  Canonical c;
  auto dm = dual_module(c.sc.bundle("M").bundle, Exponent(2));
  auto eta = dm.element({vec({"1", "-1"}), vec({"0", "2"})});
  auto L = c.dop.apply(c.dop.pull(eta));
  auto chain = build_chain(c.phi.source(), std::vector<std::vector<std::string>>{{"y1", "y2"}, {"y1"}});
  for (auto e : {Exponent(2), Exponent(3)}) {
    auto run = approximation_sequence(c.pb, L, chain, {c.v}, e);
    for (const auto& level : run.levels) CHECK(exactly(level.gaps[0], "0"));
  }
}

TEST_CASE("jensen step") {
  auto Y = make_space({"y1", "y2"}, {q("1/2"), q("1/2")});
  auto X = make_space({"a"}, {q("1")});
  auto m = MeasurableMap::make(Y, X, {0, 0});
  auto verdict = jensen_check(m, Y.carrier(), fn({"0", "2"}), Rational(2));
  CHECK(verdict.holds);
  CHECK(exactly(verdict.lhs, {"1"}));
  CHECK(exactly(verdict.rhs, {"2"}));
  auto flat = jensen_check(m, Y.carrier(), fn({"3", "3"}), Rational(3));
  CHECK(flat.lhs == flat.rhs);
}

TEST_CASE("pr laws against the oracle") {
  Rng rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = random_map(rng);
    auto f = random_values(r.wy.size(), rng), g = random_values(r.wx.size(), rng);
    auto prf = oracle::pr(r.assign, r.wy, r.wx, f);
    CHECK(rationals(pr(r.map, reals(f))) == prf);
    oracle::Vec fg(f.size()), af(f.size());
    for (std::size_t y = 0; y < f.size(); ++y) {
      fg[y] = f[y] * g[r.assign[y]];
      af[y] = oracle::qabs(f[y]);
    }
    auto law = oracle::pr(r.assign, r.wy, r.wx, fg);
    auto modulus = oracle::pr(r.assign, r.wy, r.wx, af);
    for (std::size_t x = 0; x < r.wx.size(); ++x) {
      CHECK(law[x] == g[x] * prf[x]);
      CHECK(oracle::qabs(prf[x]) <= modulus[x]);
    }
    CHECK(check_pr(r.map, reals(f), reals(g)).ok());
  }
}

TEST_CASE("jensen against the oracle") {
  Rng rng(82);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = random_map(rng);
    std::size_t ny = r.wy.size();
    auto f = random_values(ny, rng);
    PointSet E(rng.next() & ((std::uint64_t{1} << ny) - 1));
    oracle::Vec ef(ny), efp(ny), ones(ny);
    for (unsigned p : {1u, 2u, 3u}) {
      for (std::size_t y = 0; y < ny; ++y) {
        bool in = E.contains(y);
        ef[y] = in ? f[y] : oracle::Q(0);
        efp[y] = in ? oracle::power(oracle::qabs(f[y]), p) : oracle::Q(0);
        ones[y] = in ? 1 : 0;
      }
      auto a = oracle::pr(r.assign, r.wy, r.wx, ef);
      auto b = oracle::pr(r.assign, r.wy, r.wx, efp);
      auto c = oracle::pr(r.assign, r.wy, r.wx, ones);
      auto verdict = jensen_check(r.map, E, reals(f), Rational(p));
      CHECK(verdict.holds);
      for (std::size_t x = 0; x < r.wx.size(); ++x) {
        oracle::Q lhs = oracle::power(oracle::qabs(a[x]), p), rhs = b[x] * oracle::power(c[x], p - 1);
        CHECK(lhs <= rhs);
        CHECK(rationals({verdict.lhs[x]})[0] == lhs);
        CHECK(rationals({verdict.rhs[x]})[0] == rhs);
      }
    }
  }
}
