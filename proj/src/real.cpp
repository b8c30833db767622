#include "nmforge/real.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nmforge/error.hpp"

namespace nmforge {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::AllNull: return "AllNull";
    case Errc::UnknownPoint: return "UnknownPoint";
    case Errc::NotAbsolutelyContinuous: return "NotAbsolutelyContinuous";
    case Errc::LevelOutOfRange: return "LevelOutOfRange";
    case Errc::ChainNotRefining: return "ChainNotRefining";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotANorm: return "NotANorm";
    case Errc::NotAPartition: return "NotAPartition";
    case Errc::MapNotMeasurePreserving: return "MapNotMeasurePreserving";
    case Errc::DominationFails: return "DominationFails";
    case Errc::BadExponents: return "BadExponents";
    case Errc::FiberMismatch: return "FiberMismatch";
    case Errc::BadRetraction: return "BadRetraction";
    case Errc::LiftingsNotCompatible: return "LiftingsNotCompatible";
    case Errc::UnknownSuite: return "UnknownSuite";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

namespace {

bool is_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Rational parse_decimal(std::string_view text) {
  bool negative = false;
  if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
    negative = text[0] == '-';
    text.remove_prefix(1);
  }
  auto dot = text.find('.');
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if ((whole.empty() && frac.empty()) || (!whole.empty() && !is_digits(whole)) ||
      (dot != std::string_view::npos && !is_digits(frac))) {
    throw Error(Errc::InvalidScenario, "not a rational: '" + std::string(text) + "'");
  }
  mpz_class num(std::string(whole.empty() ? "0" : whole) + std::string(frac), 10);
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), 10, frac.size());
  Rational q(num, den);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  Rational num = parse_decimal(text.substr(0, slash));
  std::string_view den_text = text.substr(slash + 1);
  if (!is_digits(den_text)) {
    throw Error(Errc::InvalidScenario, "bad denominator in '" + std::string(text) + "'");
  }
  Rational den = parse_decimal(den_text);
  if (den == 0) throw Error(Errc::InvalidScenario, "zero denominator in '" + std::string(text) + "'");
  Rational q = num / den;
  q.canonicalize();
  return q;
}

std::string to_string(const Rational& q) { return q.get_str(); }

std::optional<Rational> exact_root(const Rational& x, unsigned long n) {
  if (n == 0) return std::nullopt;
  if (n == 1) return x;
  if (sgn(x) < 0) {
    if (n % 2 == 0) return std::nullopt;
    auto r = exact_root(Rational(-x), n);
    if (!r) return std::nullopt;
    return Rational(-*r);
  }
  mpz_class num_root, den_root;
  int num_exact = mpz_root(num_root.get_mpz_t(), x.get_num_mpz_t(), n);
  int den_exact = mpz_root(den_root.get_mpz_t(), x.get_den_mpz_t(), n);
  if (!num_exact || !den_exact) return std::nullopt;
  Rational r(num_root, den_root);
  r.canonicalize();
  return r;
}

const Rational& Real::rational() const {
  if (!exact()) throw Error(Errc::InvariantViolation, "inexact value " + str() + " used where a rational is required");
  return std::get<Rational>(value_);
}

double Real::to_double() const {
  if (exact()) return std::get<Rational>(value_).get_d();
  return std::get<double>(value_);
}

Real Real::operator-() const {
  if (exact()) return Real(Rational(-std::get<Rational>(value_)));
  return approx(-std::get<double>(value_));
}

Real& Real::operator+=(const Real& rhs) {
  if (exact() && rhs.exact()) {
    std::get<Rational>(value_) += std::get<Rational>(rhs.value_);
  } else {
    value_ = to_double() + rhs.to_double();
  }
  return *this;
}

Real& Real::operator-=(const Real& rhs) {
  if (exact() && rhs.exact()) {
    std::get<Rational>(value_) -= std::get<Rational>(rhs.value_);
  } else {
    value_ = to_double() - rhs.to_double();
  }
  return *this;
}

Real& Real::operator*=(const Real& rhs) {
  if (exact() && rhs.exact()) {
    std::get<Rational>(value_) *= std::get<Rational>(rhs.value_);
  } else {
    value_ = to_double() * rhs.to_double();
  }
  return *this;
}

Real& Real::operator/=(const Real& rhs) {
  if (rhs.exact() && sgn(std::get<Rational>(rhs.value_)) == 0) {
    throw Error(Errc::InvariantViolation, "division by exact zero");
  }
  if (exact() && rhs.exact()) {
    std::get<Rational>(value_) /= std::get<Rational>(rhs.value_);
  } else {
    value_ = to_double() / rhs.to_double();
  }
  return *this;
}

int Real::sign() const {
  if (exact()) return sgn(std::get<Rational>(value_));
  double d = std::get<double>(value_);
  return (d > 0) - (d < 0);
}

bool operator==(const Real& a, const Real& b) {
  if (a.exact() && b.exact()) return std::get<Rational>(a.value_) == std::get<Rational>(b.value_);
  return a.to_double() == b.to_double();
}

bool operator<(const Real& a, const Real& b) {
  if (a.exact() && b.exact()) return std::get<Rational>(a.value_) < std::get<Rational>(b.value_);
  return a.to_double() < b.to_double();
}

std::string Real::str() const {
  if (exact()) return std::get<Rational>(value_).get_str();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", std::get<double>(value_));
  return buf;
}

Real abs(const Real& x) { return x.sign() < 0 ? -x : x; }
Real max(const Real& a, const Real& b) { return a < b ? b : a; }
Real min(const Real& a, const Real& b) { return b < a ? b : a; }

Real root(const Real& x, unsigned long n) {
  if (n == 1) return x;
  if (x.sign() < 0 && n % 2 == 0) {
    throw Error(Errc::NegativeInput, "even root of negative value " + x.str());
  }
  if (x.exact()) {
    if (auto r = exact_root(x.rational(), n)) return Real(*r);
  }
  double d = x.to_double();
  if (n == 2) return Real::approx(std::sqrt(d));
  if (n == 3) return Real::approx(std::cbrt(d));
  double r = std::pow(std::fabs(d), 1.0 / static_cast<double>(n));
  return Real::approx(d < 0 ? -r : r);
}

Real sqrt(const Real& x) { return root(x, 2); }

Real pow(const Real& x, const Rational& p) {
  if (sgn(p) < 0) throw Error(Errc::BadExponents, "negative exponent " + p.get_str());
  if (x.sign() < 0) throw Error(Errc::NegativeInput, "power of negative value " + x.str());
  if (!p.get_num().fits_ulong_p() || !p.get_den().fits_ulong_p()) {
    throw Error(Errc::BadExponents, "exponent too large: " + p.get_str());
  }
  unsigned long num = p.get_num().get_ui();
  unsigned long den = p.get_den().get_ui();
  if (x.exact()) {
    Rational powered;
    mpz_class n, d;
    mpz_pow_ui(n.get_mpz_t(), x.rational().get_num_mpz_t(), num);
    mpz_pow_ui(d.get_mpz_t(), x.rational().get_den_mpz_t(), num);
    powered = Rational(n, d);
    powered.canonicalize();
    return root(Real(powered), den);
  }
  return Real::approx(std::pow(x.to_double(), p.get_d()));
}

bool near(const Real& a, const Real& b, double tol) {
  if (a.exact() && b.exact()) return a == b;
  double x = a.to_double();
  double y = b.to_double();
  double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
  return std::fabs(x - y) <= tol * scale;
}

bool leq(const Real& a, const Real& b, double tol) {
  if (a.exact() && b.exact()) return a <= b;
  double x = a.to_double();
  double y = b.to_double();
  double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
  return x <= y + tol * scale;
}

}  // namespace nmforge
