#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "nmforge/random.hpp"

using namespace support;

namespace {

FiniteMeasureSpace SX() { return make_space({"a", "b"}, {q("1/2"), q("1/2")}); }
FiniteMeasureSpace SY() { return make_space({"y1", "y2", "y3"}, {q("1/4"), q("1/4"), q("1/2")}); }
MeasurableMap phi() { return MeasurableMap::make(SY(), SX(), {0, 0, 1}); }

}  // namespace

TEST_CASE("make_space validates labels and weights") {
  auto X = SX();
  CHECK(X.size() == 2);
  CHECK(X.total_mass() == 1);
  CHECK(SY().total_mass() == 1);
  CHECK(error_code([] { make_space({"a"}, {Rational(-1)}); }) == Errc::NegativeWeight);
  CHECK(error_code([] { make_space({"a", "a"}, {Rational(1), Rational(1)}); }) == Errc::DuplicateLabel);
  CHECK(error_code([] { make_space({"a", "b"}, {Rational(0), Rational(0)}); }) == Errc::AllNull);
}

TEST_CASE("null points stay on the carrier") {
  auto S = make_space({"a", "b", "c"}, {q("1/2"), q("1/2"), q("0")});
  CHECK(S.size() == 3);
  CHECK(S.is_null(2));
  CHECK(S.support() == PointSet(0b011));
  CHECK(S.index_of("c") == 2);
  CHECK(error_code([&] { S.index_of("d"); }) == Errc::UnknownPoint);
}

TEST_CASE("pushforward sums over fibers") {
  auto m = phi();
  CHECK(exactly(pushforward(m, fn({"1", "1", "1"})), {"1/2", "1/2"}));
  CHECK(m.measure_preserving());
  CHECK(exactly(pushforward(m, fn({"1", "3", "2"})), {"1", "1"}));
  CHECK(exactly(pushforward(m, fn({"0", "0", "0"})), {"0", "0"}));
}

TEST_CASE("a map that moves mass is not measure preserving") {
  auto m = MeasurableMap::make(SY(), SX(), {0, 0, 0});
  CHECK_FALSE(m.measure_preserving());
  CHECK(m.absolutely_continuous());
}

TEST_CASE("radon_nikodym divides by the base mass") {
  CHECK(exactly(radon_nikodym(fn({"1/2", "3/2"}), SX()), {"1", "3"}));
  CHECK(exactly(radon_nikodym(fn({"1/2", "1/2"}), SX()), {"1", "1"}));
  auto S = make_space({"a", "b", "c"}, {q("1/2"), q("1/2"), q("0")});
  CHECK(exactly(radon_nikodym(fn({"1", "1", "0"}), S), {"2", "2", "0"}));
  CHECK(error_code([&] { radon_nikodym(fn({"0", "0", "1"}), S); }) == Errc::NotAbsolutelyContinuous);
}

TEST_CASE("build_chain levels") {
  auto cx = build_chain(SX(), std::vector<std::vector<std::string>>{{"a"}});
  REQUIRE(cx.level_count() == 2);
  CHECK(cx.level(0) == std::vector<PointSet>{PointSet(0b11)});
  CHECK(cx.level(1) == std::vector<PointSet>{PointSet(0b01), PointSet(0b10)});
  CHECK(cx.fully_refining());

  auto cy = build_chain(SY(), std::vector<std::vector<std::string>>{{"y1"}});
  REQUIRE(cy.level_count() == 2);
  CHECK(cy.level(1) == std::vector<PointSet>{PointSet(0b001), PointSet(0b110)});
  CHECK_FALSE(cy.fully_refining());

  auto empty = build_chain(SY(), std::vector<PointSet>{});
  CHECK(empty.level_count() == 1);
  CHECK(empty.level(0) == std::vector<PointSet>{PointSet(0b111)});

  CHECK(error_code([] { build_chain(SX(), std::vector<std::vector<std::string>>{{"z"}}); }) == Errc::UnknownPoint);
  CHECK(error_code([&] { cx.level(2); }) == Errc::LevelOutOfRange);
}

TEST_CASE("a chain needs only positive-mass points isolated") {
  auto S = make_space({"a", "b", "c"}, {q("1/2"), q("1/2"), q("0")});
  auto chain = build_chain(S, std::vector<std::vector<std::string>>{{"a"}});
  CHECK(chain.level(1) == std::vector<PointSet>{PointSet(0b001), PointSet(0b110)});
  CHECK(chain.fully_refining());
}

TEST_CASE("chain levels match the atoms of the generated algebra") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = static_cast<std::size_t>(rng.uniform(1, 10));
    std::vector<std::string> labels;
    std::vector<Rational> weights;
    for (std::size_t i = 0; i < n; ++i) {
      labels.push_back("p" + std::to_string(i));
      weights.push_back(rng.rational(0, 5, 6));
    }
    weights[0] = 1;
    auto S = make_space(labels, weights);
    std::vector<PointSet> gens;
    std::vector<std::uint64_t> masks;
    for (auto k = rng.uniform(0, 4); k > 0; --k) {
      std::uint64_t m = rng.next() & ((std::uint64_t{1} << n) - 1);
      gens.push_back(PointSet(m));
      masks.push_back(m);
    }
    auto chain = build_chain(S, gens);
    REQUIRE(chain.level_count() == gens.size() + 1);
    for (std::size_t k = 0; k < chain.level_count(); ++k) {
      auto expected = oracle::atoms(n, std::vector<std::uint64_t>(masks.begin(), masks.begin() + static_cast<long>(k)));
      const auto& level = chain.level(k);
      REQUIRE(level.size() == expected.size());
      for (std::size_t c = 0; c < level.size(); ++c) {
        PointSet cell;
        for (auto x : expected[c]) cell.insert(x);
        CHECK(level[c] == cell);
        if (k > 0) CHECK(level[c].subset_of(chain.level(k - 1)[chain.cell_of(k - 1, level[c].first())]));
      }
    }
  }
}

TEST_CASE("pushforward of one is the target measure for measure-preserving maps") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t ny = static_cast<std::size_t>(rng.uniform(1, 8)), nx = static_cast<std::size_t>(rng.uniform(1, 4));
    std::vector<std::string> ly, lx;
    std::vector<Rational> wy;
    std::vector<std::size_t> assign;
    oracle::Vec wx(nx, 0);
    for (std::size_t y = 0; y < ny; ++y) {
      ly.push_back("y" + std::to_string(y));
      wy.push_back(rng.rational(1, 9, 8));
      assign.push_back(static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(nx) - 1)));
      wx[assign.back()] += wy.back();
    }
    for (std::size_t x = 0; x < nx; ++x) lx.push_back("x" + std::to_string(x));
    auto m = MeasurableMap::make(make_space(ly, wy), make_space(lx, wx), assign);
    CHECK(m.measure_preserving());
    CHECK(rationals(pushforward(m, Function(ny, Real(1)))) == wx);
    Function f;
    oracle::Vec fo;
    for (std::size_t y = 0; y < ny; ++y) {
      fo.push_back(rng.rational(-9, 9, 5));
      f.emplace_back(fo.back());
    }
    CHECK(rationals(radon_nikodym(pushforward(m, f), m.target())) == oracle::pr(assign, wy, wx, fo));
  }
}
