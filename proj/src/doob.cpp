#include "nmforge/doob.hpp"

#include "nmforge/error.hpp"

namespace nmforge::doob {

namespace {

void check_length(const PartitionChain& chain, const Function& f) {
  if (f.size() != chain.space().size())
    throw Error(Errc::DimensionMismatch, "function length differs from carrier size");
}

void check_exponent(const Rational& p) {
  if (p <= 1) throw Error(Errc::BadExponents, "exponent must exceed 1, got " + to_string(p));
}

Function powered(const Rational& p, const Function& f) {
  Function out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i].sign() < 0) throw Error(Errc::NegativeInput, "negative value " + f[i].str() + " at index " + std::to_string(i));
    out[i] = pow(f[i], p);
  }
  return out;
}

}  // namespace

Function cond_exp(const PartitionChain& chain, std::size_t k, const Function& f) {
  check_length(chain, f);
  const auto& space = chain.space();
  Function out(f.size());
  for (const auto& cell : chain.level(k)) {
    Rational mass = space.mass(cell);
    if (sgn(mass) == 0) continue;
    Real total;
    for (auto x : cell.members())
      if (!space.is_null(x)) total += f[x] * Real(space.weight(x));
    Real average = total / Real(mass);
    for (auto x : cell.members()) out[x] = average;
  }
  return out;
}

RepResult rep(const PartitionChain& chain, const Function& f) {
  if (!chain.fully_refining())
    throw Error(Errc::ChainNotRefining, "final level does not isolate every positive-mass point");
  check_length(chain, f);
  std::size_t levels = chain.level_count();
  std::vector<Function> martingale;
  martingale.reserve(levels);
  for (std::size_t k = 0; k < levels; ++k) martingale.push_back(cond_exp(chain, k, f));

  RepResult result;
  result.rep = martingale.back();
  for (std::size_t x = 0; x < f.size(); ++x) {
    std::size_t k = levels - 1;
    while (k > 0 && martingale[k - 1][x] == martingale.back()[x]) --k;
    if (k > result.stabilization_level) result.stabilization_level = k;
    // The tail from level k on is constant, so the limit exists at x.
    result.leb_set.insert(x);
  }
  return result;
}

RepResult rep_p(const PartitionChain& chain, const Rational& p, const Function& f) {
  check_exponent(p);
  check_length(chain, f);
  RepResult inner = rep(chain, powered(p, f));
  Rational inverse = 1 / p;
  for (auto& value : inner.rep) value = pow(value, inverse);
  return inner;
}

Function cond_exp_p(const PartitionChain& chain, std::size_t k, const Rational& p, const Function& f) {
  check_exponent(p);
  Function averaged = cond_exp(chain, k, powered(p, f));
  Rational inverse = 1 / p;
  for (auto& value : averaged) value = pow(value, inverse);
  return averaged;
}

Function abs(const Function& f) {
  Function out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = nmforge::abs(f[i]);
  return out;
}

}  // namespace nmforge::doob
