#pragma once

#include <doctest.h>

#include <initializer_list>
#include <string>
#include <vector>

#include "nmforge/error.hpp"
#include "nmforge/measure.hpp"
#include "nmforge/module.hpp"
#include "nmforge/scenario.hpp"
#include "oracles.hpp"

namespace support {

using namespace nmforge;

inline Rational q(const char* text) { return parse_rational(text); }

inline Function fn(std::initializer_list<const char*> values) {
  Function f;
  for (auto v : values) f.emplace_back(parse_rational(v));
  return f;
}

inline Vector vec(std::initializer_list<const char*> values) { return fn(values); }

inline oracle::Vec rationals(const std::vector<Real>& f) {
  oracle::Vec out;
  for (const auto& r : f) {
    REQUIRE(r.exact());
    out.push_back(r.rational());
  }
  return out;
}

inline Function reals(const oracle::Vec& v) {
  Function out;
  for (const auto& r : v) out.emplace_back(r);
  return out;
}

/// Exact equality with a rational, failing on a binary64 value.
inline bool exactly(const Real& r, const char* expected) { return r.exact() && r.rational() == parse_rational(expected); }

inline bool exactly(const Function& f, std::initializer_list<const char*> expected) {
  if (f.size() != expected.size()) return false;
  std::size_t i = 0;
  for (auto e : expected)
    if (!exactly(f[i++], e)) return false;
  return true;
}

inline std::string scenario_path(const std::string& name) { return std::string(NMFORGE_SCENARIO_DIR) + "/" + name; }

inline Scenario canonical() { return load_scenario(scenario_path("canonical.json")); }
inline Scenario canonical_null() { return load_scenario(scenario_path("canonical-null.json")); }

template <class F>
Errc error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::InvariantViolation;
}

}  // namespace support
