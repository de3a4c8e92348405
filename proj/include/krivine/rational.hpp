#pragma once

#include <gmpxx.h>
#include <string>
#include <cstdint>

namespace krivine {

// Arbitrary-precision rational, always kept in canonical reduced form with a
// positive denominator (gmp canonicalizes on arithmetic; constructors here
// canonicalize explicitly).
using Rational = mpq_class;
using Integer  = mpz_class;

Rational make_rational(long num, long den = 1);
Rational make_rational(const Integer& num, const Integer& den);

// Accepts "p", "p/q", and decimal strings ("-1.75" -> -7/4). Decimals are
// converted exactly: digits after the point become num/10^k. Throws
// std::invalid_argument on malformed input or zero denominator.
Rational parse_rational(const std::string& text);

// Canonical text form: "p" when den == 1, otherwise "p/q".
std::string rational_to_string(const Rational& r);

// Nearest double (GMP rounding); used only at the float boundary (LP, NN).
inline double to_double(const Rational& r) { return r.get_d(); }

} // namespace krivine
