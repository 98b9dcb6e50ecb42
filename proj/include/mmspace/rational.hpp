#pragma once

// Exact rational arithmetic (GMP) and the scalar traits that let the metric
// code run either on rationals or on doubles.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmspace {

using Rational = mpq_class;

class parse_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Parses "p/q", an integer, or a decimal literal ("0.125", "-3e-2") into an
/// exact rational. Decimals are converted digit by digit, never via double.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto trim = [](std::string& v) {
    auto b = v.find_first_not_of(" \t\n\r");
    auto e = v.find_last_not_of(" \t\n\r");
    v = (b == std::string::npos) ? std::string{} : v.substr(b, e - b + 1);
  };
  trim(s);
  if (s.empty()) throw parse_error("empty rational literal");

  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    trim(num);
    trim(den);
    mpz_class p, q;
    if (num.empty() || den.empty() || p.set_str(num, 10) != 0 || q.set_str(den, 10) != 0)
      throw parse_error("malformed rational '" + s + "'");
    if (q == 0) throw parse_error("zero denominator in '" + s + "'");
    Rational r(p, q);
    r.canonicalize();
    return r;
  }

  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  std::string digits;
  long exponent = 0;
  bool seen_digit = false, seen_dot = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
      if (seen_dot) --exponent;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c == 'e' || c == 'E') {
      break;
    } else {
      throw parse_error("malformed number '" + s + "'");
    }
  }
  if (!seen_digit) throw parse_error("malformed number '" + s + "'");
  if (pos < s.size()) {
    std::string exp_text = s.substr(pos + 1);
    try {
      std::size_t used = 0;
      long e = std::stol(exp_text, &used);
      if (used != exp_text.size()) throw parse_error("malformed exponent in '" + s + "'");
      exponent += e;
    } catch (const std::logic_error&) {
      throw parse_error("malformed exponent in '" + s + "'");
    }
  }
  if (exponent > 4096 || exponent < -4096) throw parse_error("exponent out of range in '" + s + "'");

  mpz_class mantissa(digits, 10);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  Rational r = exponent < 0 ? Rational(mantissa, scale) : Rational(mantissa * scale, 1);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

/// "p/q", or "p" when the denominator is 1.
inline std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

/// Decimal rendering rounded half-to-even at `places` fractional digits,
/// computed in integer arithmetic so the text is reproducible.
inline std::string to_decimal(const Rational& r, unsigned places = 12) {
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
  mpz_class num = r.get_num() * scale;
  const mpz_class& den = r.get_den();
  mpz_class q, rem;
  mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  int cmp = mpz_cmp(mpz_class(2 * rem).get_mpz_t(), den.get_mpz_t());
  if (cmp > 0 || (cmp == 0 && mpz_odd_p(q.get_mpz_t()))) q += 1;

  bool negative = q < 0;
  mpz_class mag = abs(q);
  std::string digits = mag.get_str();
  if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
  std::string out = digits.substr(0, digits.size() - places);
  if (places > 0) out += "." + digits.substr(digits.size() - places);
  return negative ? "-" + out : out;
}

/// p / q in canonical form.
inline Rational ratio(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return r;
}

inline double to_double(const Rational& r) { return r.get_d(); }
inline double to_double(double v) { return v; }

/// True when r is the square of a rational; stores the root in `root`.
inline bool exact_sqrt(const Rational& r, Rational& root) {
  if (r < 0) return false;
  const mpz_class& p = r.get_num();
  const mpz_class& q = r.get_den();
  if (!mpz_perfect_square_p(p.get_mpz_t()) || !mpz_perfect_square_p(q.get_mpz_t())) return false;
  mpz_class sp, sq;
  mpz_sqrt(sp.get_mpz_t(), p.get_mpz_t());
  mpz_sqrt(sq.get_mpz_t(), q.get_mpz_t());
  root = Rational(sp, sq);
  root.canonicalize();
  return true;
}

template <class Scalar>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static Rational from_rational(const Rational& r) { return r; }
  static Rational from_double(double d) { return Rational(d); }
  static Rational parse(std::string_view s) { return parse_rational(s); }
  static std::string str(const Rational& r) { return to_string(r); }
  static bool is_zero(const Rational& r, double /*tol*/ = 0) { return sgn(r) == 0; }
  static bool equal(const Rational& a, const Rational& b, double /*tol*/ = 0) { return a == b; }
  static bool leq(const Rational& a, const Rational& b, double /*tol*/ = 0) { return a <= b; }
  static bool positive(const Rational& a, double /*tol*/ = 0) { return sgn(a) > 0; }
  static Rational abs(const Rational& a) { return ::abs(a); }
};

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  static double from_rational(const Rational& r) { return r.get_d(); }
  static double from_double(double d) { return d; }
  static double parse(std::string_view s) { return parse_rational(s).get_d(); }
  static std::string str(double d) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
  }
  static bool is_zero(double v, double tol = 1e-12) { return std::fabs(v) <= tol; }
  static bool equal(double a, double b, double tol = 1e-12) { return std::fabs(a - b) <= tol; }
  static bool leq(double a, double b, double tol = 1e-12) { return a <= b + tol; }
  static bool positive(double a, double tol = 1e-12) { return a > tol; }
  static double abs(double a) { return std::fabs(a); }
};

template <class Scalar>
inline Scalar min_of(const Scalar& a, const Scalar& b) {
  return b < a ? Scalar(b) : Scalar(a);
}

template <class Scalar>
inline Scalar max_of(const Scalar& a, const Scalar& b) {
  return a < b ? Scalar(b) : Scalar(a);
}

}  // namespace mmspace
