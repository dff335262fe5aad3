#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace exnet {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double to_double(const Rational& q) { return q.template convert_to<double>(); }

/// Exact conversion of a finite double to a rational (every finite double is
/// a dyadic rational).
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rational_from_double: non-finite");
    if (x == 0.0) return Rational(0);
    int exp = 0;
    double mant = std::frexp(x, &exp);  // x = mant * 2^exp, |mant| in [0.5, 1)
    auto scaled = static_cast<std::int64_t>(std::ldexp(mant, 53));
    exp -= 53;
    Rational r(scaled);
    if (exp >= 0) {
        r *= Rational(BigInt(1) << exp);
    } else {
        r /= Rational(BigInt(1) << (-exp));
    }
    return r;
}

/// Parses "123", "-4.25", "6.02e3", or an exact fraction "p/q".
inline Rational parse_rational(const std::string& s) {
    if (s.empty()) throw parse_error("empty number");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        try {
            BigInt num(s.substr(0, slash));
            BigInt den(s.substr(slash + 1));
            if (den == 0) throw parse_error("zero denominator in '" + s + "'");
            return Rational(num, den);
        } catch (const std::exception&) {
            throw parse_error("bad fraction '" + s + "'");
        }
    }
    std::size_t pos = 0;
    bool negative = false;
    if (s[pos] == '+' || s[pos] == '-') {
        negative = (s[pos] == '-');
        ++pos;
    }
    BigInt mantissa = 0;
    long frac_digits = 0;
    bool any_digit = false;
    bool seen_dot = false;
    for (; pos < s.size(); ++pos) {
        char c = s[pos];
        if (c >= '0' && c <= '9') {
            mantissa = mantissa * 10 + (c - '0');
            if (seen_dot) ++frac_digits;
            any_digit = true;
        } else if (c == '.') {
            if (seen_dot) throw parse_error("bad number '" + s + "'");
            seen_dot = true;
        } else if (c == 'e' || c == 'E') {
            break;
        } else {
            throw parse_error("bad number '" + s + "'");
        }
    }
    if (!any_digit) throw parse_error("bad number '" + s + "'");
    long exp10 = 0;
    if (pos < s.size()) {  // exponent part
        try {
            exp10 = std::stol(s.substr(pos + 1));
        } catch (const std::exception&) {
            throw parse_error("bad exponent in '" + s + "'");
        }
    }
    exp10 -= frac_digits;
    Rational r(mantissa);
    BigInt p10 = 1;
    for (long k = 0; k < std::labs(exp10); ++k) p10 *= 10;
    if (exp10 >= 0) r *= Rational(p10); else r /= Rational(p10);
    return negative ? -r : r;
}

/// Exact decimal string when the denominator is of the form 2^a*5^b
/// (always true for decimal input and for dyadic doubles); otherwise "p/q".
inline std::string rational_to_string(const Rational& q) {
    BigInt num = boost::multiprecision::numerator(q);
    BigInt den = boost::multiprecision::denominator(q);
    BigInt d = den;
    long twos = 0, fives = 0;
    while (d % 2 == 0) { d /= 2; ++twos; }
    while (d % 5 == 0) { d /= 5; ++fives; }
    if (d != 1) return num.str() + "/" + den.str();
    // scale to a power of ten
    long shift = std::max(twos, fives);
    BigInt scaled = num;
    for (long k = 0; k < shift - twos; ++k) scaled *= 2;
    for (long k = 0; k < shift - fives; ++k) scaled *= 5;
    bool neg = scaled < 0;
    if (neg) scaled = -scaled;
    std::string digits = scaled.str();
    std::string out;
    if (shift == 0) {
        out = digits;
    } else {
        if (static_cast<long>(digits.size()) <= shift)
            digits.insert(0, shift + 1 - digits.size(), '0');
        out = digits.substr(0, digits.size() - shift) + "." + digits.substr(digits.size() - shift);
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
    }
    return neg ? "-" + out : out;
}

namespace detail {

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q = a / b, r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}

inline BigInt rat_floor(const Rational& q) {
    return floor_div(boost::multiprecision::numerator(q), boost::multiprecision::denominator(q));
}

// Smallest-denominator rational in the closed interval [lo, hi], lo <= hi.
// Continued-fraction descent; each level strips the integer part.
inline Rational simplest_in_interval(Rational lo, Rational hi) {
    BigInt fl = rat_floor(lo);
    if (Rational(fl + 1) <= hi) {
        // an integer lies inside
        return lo <= Rational(fl) ? Rational(fl) : Rational(fl + 1);
    }
    if (lo == Rational(fl)) return lo;
    Rational inner = simplest_in_interval(1 / (hi - Rational(fl)), 1 / (lo - Rational(fl)));
    return Rational(fl) + 1 / inner;
}

}  // namespace detail

/// Smallest-denominator rational within `tol` of x. Used to lift float
/// earnings into exact arithmetic for certification.
inline Rational snap_to_rational(double x, double tol) {
    if (!std::isfinite(x)) throw std::invalid_argument("snap_to_rational: non-finite");
    if (!(tol > 0.0)) return rational_from_double(x);
    Rational v = rational_from_double(x);
    Rational t = rational_from_double(tol);
    return detail::simplest_in_interval(v - t, v + t);
}

}  // namespace exnet
