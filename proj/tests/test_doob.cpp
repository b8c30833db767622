#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include <cmath>

#include "nmforge/doob.hpp"
#include "nmforge/random.hpp"

using namespace support;

namespace {

FiniteMeasureSpace SX() { return make_space({"a", "b"}, {q("1/2"), q("1/2")}); }
PartitionChain chainX() { return build_chain(SX(), std::vector<std::vector<std::string>>{{"a"}}); }

struct RandomChain {
  PartitionChain chain;
  oracle::Vec weights;
  std::vector<std::uint64_t> masks;
};

RandomChain random_chain(Rng& rng, bool refining) {
  std::size_t n = static_cast<std::size_t>(rng.uniform(1, 10));
  std::vector<std::string> labels;
  std::vector<Rational> weights;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back("p" + std::to_string(i));
    weights.push_back(rng.chance(1, 4) ? Rational(0) : rng.rational(1, 8, 16));
  }
  weights[0] = 1;
  std::vector<PointSet> gens;
  std::vector<std::uint64_t> masks;
  for (auto k = rng.uniform(0, 3); k > 0; --k) {
    masks.push_back(rng.next() & ((std::uint64_t{1} << n) - 1));
    gens.push_back(PointSet(masks.back()));
  }
  if (refining)
    for (std::size_t i = 0; i < n; ++i) {
      masks.push_back(std::uint64_t{1} << i);
      gens.push_back(PointSet::singleton(i));
    }
  auto space = make_space(labels, weights);
  return {build_chain(space, gens), oracle::Vec(weights.begin(), weights.end()), masks};
}

Function random_values(std::size_t n, Rng& rng, std::int64_t lo = -9) {
  Function f;
  for (std::size_t i = 0; i < n; ++i) f.emplace_back(rng.rational(lo, 9, 6));
  return f;
}

}  // namespace

TEST_CASE("cond_exp averages over cells") {
  auto chain = chainX();
  CHECK(exactly(doob::cond_exp(chain, 0, fn({"1", "3"})), {"2", "2"}));
  CHECK(exactly(doob::cond_exp(chain, 1, fn({"1", "3"})), {"1", "3"}));
  for (std::size_t k = 0; k < 2; ++k) CHECK(exactly(doob::cond_exp(chain, k, fn({"5/7", "5/7"})), {"5/7", "5/7"}));
  CHECK(error_code([&] { doob::cond_exp(chain, 2, fn({"1", "3"})); }) == Errc::LevelOutOfRange);
  CHECK(error_code([&] { doob::cond_exp(chain, 0, fn({"1"})); }) == Errc::DimensionMismatch);
}

TEST_CASE("rep on a refining chain") {
  auto r = doob::rep(chainX(), fn({"1", "3"}));
  CHECK(exactly(r.rep, {"1", "3"}));
  CHECK(r.leb_set == PointSet(0b11));
  CHECK(r.stabilization_level == 1);

  auto z = doob::rep(chainX(), fn({"0", "0"}));
  CHECK(exactly(z.rep, {"0", "0"}));
  CHECK(z.leb_set == PointSet(0b11));
  CHECK(z.stabilization_level == 0);

  auto cy = build_chain(make_space({"y1", "y2", "y3"}, {q("1/4"), q("1/4"), q("1/2")}),
                        std::vector<std::vector<std::string>>{{"y1"}});
  CHECK(error_code([&] { doob::rep(cy, fn({"1", "2", "3"})); }) == Errc::ChainNotRefining);
}

TEST_CASE("rep ignores values on null points") {
  auto S = make_space({"a", "b", "c"}, {q("1/2"), q("1/2"), q("0")});
  auto chain = build_chain(S, std::vector<std::vector<std::string>>{{"a"}});
  auto f = doob::rep(chain, fn({"1", "3", "100"}));
  auto g = doob::rep(chain, fn({"1", "3", "-4"}));
  CHECK(f.rep[0] == g.rep[0]);
  CHECK(f.rep[1] == g.rep[1]);
  CHECK(S.ae_equal(f.rep, g.rep));
}

TEST_CASE("rep_p and its level proxy") {
  auto chain = chainX();
  auto proxy = doob::cond_exp_p(chain, 0, Rational(2), fn({"1", "3"}));
  REQUIRE(proxy.size() == 2);
  for (const auto& v : proxy) CHECK(std::abs(v.to_double() - std::sqrt(5.0)) <= kRootTolerance);
  CHECK(exactly(doob::rep_p(chain, Rational(2), fn({"1", "3"})).rep, {"1", "3"}));
  for (auto p : {"3/2", "2", "3"}) CHECK(exactly(doob::rep_p(chain, q(p), fn({"1", "1"})).rep, {"1", "1"}));
  CHECK(error_code([&] { doob::rep_p(chain, Rational(2), fn({"-1", "3"})); }) == Errc::NegativeInput);
  CHECK(error_code([&] { doob::rep_p(chain, Rational(1), fn({"1", "3"})); }) == Errc::BadExponents);
}

TEST_CASE("cond_exp agrees with the oracle on random chains") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    auto rc = random_chain(rng, false);
    std::size_t n = rc.weights.size();
    auto f = random_values(n, rng);
    auto fo = rationals(f);
    for (std::size_t k = 0; k < rc.chain.level_count(); ++k) {
      auto cells = oracle::atoms(n, std::vector<std::uint64_t>(rc.masks.begin(), rc.masks.begin() + static_cast<long>(k)));
      auto expected = oracle::cond_exp(rc.weights, cells, fo);
      auto got = rationals(doob::cond_exp(rc.chain, k, f));
      for (std::size_t x = 0; x < n; ++x)
        if (rc.weights[x] != 0) CHECK(got[x] == expected[x]);
      CHECK(oracle::l1(rc.weights, got) <= oracle::l1(rc.weights, fo));
    }
  }
}

TEST_CASE("tower law and rep on refining chains") {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    auto rc = random_chain(rng, true);
    std::size_t n = rc.weights.size();
    const auto& chain = rc.chain;
    auto f = random_values(n, rng);
    for (std::size_t j = 0; j < chain.level_count(); ++j)
      for (std::size_t k = 0; k < chain.level_count(); ++k) {
        auto lhs = doob::cond_exp(chain, j, doob::cond_exp(chain, k, f));
        auto rhs = doob::cond_exp(chain, std::min(j, k), f);
        CHECK(chain.space().ae_equal(lhs, rhs));
      }
    auto r = doob::rep(chain, f);
    CHECK(chain.space().support().subset_of(r.leb_set));
    CHECK(chain.space().ae_equal(r.rep, f));
    auto last = doob::cond_exp(chain, chain.level_count() - 1, f);
    CHECK(chain.space().ae_equal(doob::cond_exp(chain, r.stabilization_level, f), last));
  }
}

TEST_CASE("rep_p is subadditive") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto rc = random_chain(rng, true);
    std::size_t n = rc.weights.size();
    auto f = random_values(n, rng, 0), g = random_values(n, rng, 0);
    for (std::size_t k = 0; k < rc.chain.level_count(); ++k) {
      auto lhs = doob::cond_exp_p(rc.chain, k, Rational(2), plus(f, g));
      auto a = doob::cond_exp_p(rc.chain, k, Rational(2), f);
      auto b = doob::cond_exp_p(rc.chain, k, Rational(2), g);
      for (std::size_t x = 0; x < n; ++x) CHECK(leq(lhs[x], a[x] + b[x], kRootTolerance));
    }
  }
}
