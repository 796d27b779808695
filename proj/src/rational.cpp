#include "fsm/rational.hpp"

#include <cctype>

#include "fsm/errors.hpp"

namespace fsm {

std::string to_string(const Rational& value) {
  return numerator(value).str() + "/" + denominator(value).str();
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = trim(text);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational out;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = s.substr(0, slash);
    auto den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) {
      throw ParseError("malformed rational: '" + std::string(text) + "'");
    }
    const Integer d{std::string(den)};
    if (d == 0) throw ParseError("zero denominator: '" + std::string(text) + "'");
    out = Rational(Integer(std::string(num)), d);
  } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
    auto whole = s.substr(0, dot);
    auto frac = s.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || !all_digits(frac)) {
      throw ParseError("malformed rational: '" + std::string(text) + "'");
    }
    Integer scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    Integer w = whole.empty() ? Integer(0) : Integer(std::string(whole));
    out = Rational(w * scale + Integer(std::string(frac)), scale);
  } else {
    if (!all_digits(s)) throw ParseError("malformed rational: '" + std::string(text) + "'");
    out = Rational(Integer(std::string(s)));
  }
  return negative ? Rational(-out) : out;
}

Rational power(const Rational& base, int exponent) {
  Rational result = 1;
  Rational b = exponent >= 0 ? base : Rational(1 / base);
  for (int e = exponent >= 0 ? exponent : -exponent; e > 0; --e) result *= b;
  return result;
}

Integer falling_factorial(long n, int m) {
  Integer result = 1;
  for (int i = 0; i < m; ++i) {
    if (n - i <= 0) return 0;
    result *= (n - i);
  }
  return result;
}

}  // namespace fsm
