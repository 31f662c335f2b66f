#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "errors.hpp"

namespace w2lab {

// Exact scalar: arbitrary-precision rationals backed by GMP.
using Rational = boost::multiprecision::mpq_rational;

// ---------------------------------------------------------------------------
// scalar_traits<S>: the two numeric modes of the library.
//
//   * Rational ("rational" mode): every comparison tolerance is exactly zero;
//     results are certified identities, not approximations.
//   * double ("float" mode): tolerances below are pinned once, here, and
//     referenced everywhere else, so the two modes share all algorithm code.
// ---------------------------------------------------------------------------

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
    static constexpr bool is_exact = false;
    static const char* mode_name() { return "float"; }
    static double to_double(double x) { return x; }
    static double from_int(long long n) { return static_cast<double>(n); }
    static double abs(double x) { return std::fabs(x); }
};

template <>
struct scalar_traits<Rational> {
    static constexpr bool is_exact = true;
    static const char* mode_name() { return "rational"; }
    static double to_double(const Rational& x) { return x.convert_to<double>(); }
    static Rational from_int(long long n) { return Rational(n); }
    static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
};

template <class S>
double to_double(const S& x) { return scalar_traits<S>::to_double(x); }

template <class S>
S abs_val(const S& x) { return scalar_traits<S>::abs(x); }

// 10^-k as an exact value of S (1/10^k in rational mode).
template <class S>
S pow10_neg(int k) {
    S num = scalar_traits<S>::from_int(1);
    S ten = scalar_traits<S>::from_int(10);
    for (int i = 0; i < k; ++i) num = num / ten;
    return num;
}

// ---------------------------------------------------------------------------
// Tolerance policy.  Exact mode: all structural tolerances are 0.  Float
// mode: the pinned defaults below.  A few thresholds are *mode-independent*
// algorithm parameters (duality-gap target of the face minimizer, tie-break
// regularization, ...) and live in `params`.
// ---------------------------------------------------------------------------

template <class S>
struct tolerances {
    // |sum of weights - 1| after canonicalization.
    static S weight_sum() { return scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(12); }
    // Coordinate-wise atom merge distance.
    static S merge() { return scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(12); }
    // Row/column marginal check of couplings.
    static S marginal() { return scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(10); }
    // Duality gap accepted as optimal: gap <= lp_gap() * (1 + |cost|).
    static S lp_gap() { return scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(9); }
    // Kernel row-sum and barycenter (martingale) residuals.
    static S martingale() { return scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(9); }
    // Feasibility slack of the convex-order linear program.
    static S lp_feasibility() { return scalar_traits<S>::is_exact ? S(0) : pow10_neg<S>(8); }
};

struct params {
    // Default residual threshold for the decomposition-identity test.
    template <class S> static S residual_tol() { return pow10_neg<S>(8); }
    // Frank-Wolfe duality-gap target and iteration cap.
    template <class S> static S fw_gap_tol() { return pow10_neg<S>(8); }
    static constexpr long fw_max_iters = 100000;
    // Tie-break regularization weight.
    template <class S> static S tie_break_lambda() { return pow10_neg<S>(6); }
    // Probe agreement threshold (squared distance between candidate minima).
    template <class S> static S probe_match() { return pow10_neg<S>(7); }
    // Least-squares slope threshold certifying second-order residual decay.
    static constexpr double fitted_order_min = 1.5;
    // Guard for exhaustive vertex enumeration: n + m <= this.
    static constexpr int enumerate_guard = 12;
    static constexpr long enumerate_max_vertices = 100000;
};

// ---------------------------------------------------------------------------
// String conversion.  Rational mode parses "p/q", integers, and exact decimal
// strings ("0.25", "2.5e-3"); it rejects anything that cannot be represented
// exactly as written.  Float mode defers to strtod.
// ---------------------------------------------------------------------------

namespace detail {

// Digit-by-digit accumulation: immune to the octal/hex prefix detection some
// bignum string constructors apply to leading zeros.
inline boost::multiprecision::mpz_int digits_to_mpz(const std::string& digits) {
    boost::multiprecision::mpz_int v = 0;
    for (char c : digits) v = v * 10 + (c - '0');
    return v;
}

inline Rational parse_exact_decimal(const std::string& s) {
    // [sign] digits [. digits] [ (e|E) [sign] digits ]
    std::size_t i = 0;
    const std::size_t n = s.size();
    bool neg = false;
    if (i < n && (s[i] == '+' || s[i] == '-')) { neg = (s[i] == '-'); ++i; }
    std::string int_part, frac_part;
    while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) int_part += s[i++];
    if (i < n && s[i] == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) frac_part += s[i++];
    }
    long long exp10 = 0;
    if (i < n && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < n && (s[i] == '+' || s[i] == '-')) { eneg = (s[i] == '-'); ++i; }
        std::string digits;
        while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) digits += s[i++];
        if (digits.empty() || digits.size() > 6)
            throw ParseError("malformed exponent in number '" + s + "'");
        exp10 = std::stoll(digits);
        if (eneg) exp10 = -exp10;
    }
    if (i != n || (int_part.empty() && frac_part.empty()))
        throw ParseError("cannot parse '" + s + "' as an exact number");
    Rational r(digits_to_mpz(int_part + frac_part));
    long long shift = exp10 - static_cast<long long>(frac_part.size());
    Rational ten(10);
    for (long long k = 0; k < (shift > 0 ? shift : -shift); ++k) {
        if (shift > 0) r *= ten; else r /= ten;
    }
    return neg ? Rational(-r) : r;
}

// Signed integer string -> mpz, digit accumulation only.
inline boost::multiprecision::mpz_int parse_exact_integer(const std::string& s) {
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) { neg = (s[i] == '-'); ++i; }
    if (i == s.size()) throw ParseError("cannot parse '" + s + "' as an integer");
    for (std::size_t k = i; k < s.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(s[k])))
            throw ParseError("cannot parse '" + s + "' as an integer");
    auto v = digits_to_mpz(s.substr(i));
    return neg ? boost::multiprecision::mpz_int(-v) : v;
}

} // namespace detail

template <class S>
S parse_scalar(const std::string& s);

template <>
inline double parse_scalar<double>(const std::string& s) {
    // Accept "p/q" in float mode too, so shared fixture files work in both modes.
    auto slash = s.find('/');
    try {
        std::size_t used = 0;
        if (slash != std::string::npos) {
            std::size_t used2 = 0;
            double num = std::stod(s.substr(0, slash), &used);
            double den = std::stod(s.substr(slash + 1), &used2);
            if (used != slash || used2 != s.size() - slash - 1 || den == 0.0)
                throw ParseError("cannot parse '" + s + "' as a number");
            return num / den;
        }
        double v = std::stod(s, &used);
        if (used != s.size()) throw ParseError("cannot parse '" + s + "' as a number");
        if (!std::isfinite(v)) throw ParseError("non-finite number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError("cannot parse '" + s + "' as a number");
    } catch (const std::out_of_range&) {
        throw ParseError("number '" + s + "' out of range");
    }
}

template <>
inline Rational parse_scalar<Rational>(const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        auto num = detail::parse_exact_integer(s.substr(0, slash));
        auto den = detail::parse_exact_integer(s.substr(slash + 1));
        if (den == 0) throw ParseError("zero denominator in '" + s + "'");
        return Rational(num) / Rational(den);
    }
    return detail::parse_exact_decimal(s);
}

inline std::string format_scalar(const Rational& x) { return x.str(); }

inline std::string format_scalar(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace w2lab
