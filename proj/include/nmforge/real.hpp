#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nmforge {

using Rational = mpq_class;

/// Parses "p/q", "p" or a plain decimal such as "0.25" into an exact rational.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& q);

/// Exact n-th root when both numerator and denominator are perfect powers.
std::optional<Rational> exact_root(const Rational& x, unsigned long n);

// Real
//
// A scalar that stays an exact rational for as long as every operation it
// goes through is rational, and degrades to binary64 the first time an
// irrational root is taken. Mixed arithmetic is carried out in binary64.
class Real {
 public:
  Real() : value_(Rational(0)) {}
  Real(int v) : value_(Rational(v)) {}
  Real(long v) : value_(Rational(v)) {}
  Real(unsigned long v) : value_(Rational(v)) {}
  Real(Rational v) : value_(std::move(v)) { std::get<Rational>(value_).canonicalize(); }

  static Real approx(double v) { Real r; r.value_ = v; return r; }

  bool exact() const noexcept { return std::holds_alternative<Rational>(value_); }
  /// Precondition: exact().
  const Rational& rational() const;
  double to_double() const;

  Real operator-() const;
  Real& operator+=(const Real& rhs);
  Real& operator-=(const Real& rhs);
  Real& operator*=(const Real& rhs);
  Real& operator/=(const Real& rhs);

  friend Real operator+(Real a, const Real& b) { return a += b; }
  friend Real operator-(Real a, const Real& b) { return a -= b; }
  friend Real operator*(Real a, const Real& b) { return a *= b; }
  friend Real operator/(Real a, const Real& b) { return a /= b; }

  int sign() const;
  bool is_zero() const { return sign() == 0; }

  // Comparisons are exact when both sides are exact, binary64 otherwise.
  friend bool operator==(const Real& a, const Real& b);
  friend bool operator<(const Real& a, const Real& b);
  friend bool operator!=(const Real& a, const Real& b) { return !(a == b); }
  friend bool operator>(const Real& a, const Real& b) { return b < a; }
  friend bool operator<=(const Real& a, const Real& b) { return !(b < a); }
  friend bool operator>=(const Real& a, const Real& b) { return !(a < b); }

  std::string str() const;

 private:
  std::variant<Rational, double> value_;
};

Real abs(const Real& x);
Real max(const Real& a, const Real& b);
Real min(const Real& a, const Real& b);
/// n-th root of a nonnegative value (any sign for odd n).
Real root(const Real& x, unsigned long n);
Real sqrt(const Real& x);
/// x^p for x >= 0 and rational p >= 0.
Real pow(const Real& x, const Rational& p);

/// Exact equality when both sides are exact; otherwise
/// |a - b| <= tol * max(1, |a|, |b|).
bool near(const Real& a, const Real& b, double tol);
/// a <= b, with the same tolerance rule as near().
bool leq(const Real& a, const Real& b, double tol);

/// Tolerance used wherever a comparison involves an extracted root.
inline constexpr double kRootTolerance = 1e-9;

}  // namespace nmforge
