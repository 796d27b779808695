#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace fsm {

/// Exact scalar used by every symbolic computation in the library.
using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

/// Always "p/q", with q > 0 ("0/1", "-3/2", "5/1").
std::string to_string(const Rational& value);

/// Accepts "p/q", "p" or a terminating decimal such as "0.25".
Rational parse_rational(std::string_view text);

Rational power(const Rational& base, int exponent);

/// n (n-1) ... (n-m+1); zero once a factor hits zero.
Integer falling_factorial(long n, int m);

}  // namespace fsm
