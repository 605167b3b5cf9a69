#pragma once

#include <cmath>
#include <limits>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gsdtail/errors.hpp"

namespace gsdtail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double log_gamma(double x) { return std::lgamma(x); }

// Regularized incomplete gamma functions, P(a,x) + Q(a,x) = 1.
inline double gamma_p(double a, double x) { return boost::math::gamma_p(a, x); }
inline double gamma_q(double a, double x) { return boost::math::gamma_q(a, x); }
inline double gamma_p_inv(double a, double p) { return boost::math::gamma_p_inv(a, p); }
inline double gamma_q_inv(double a, double q) { return boost::math::gamma_q_inv(a, q); }

namespace detail {

// Continued fraction for Q(a,x)*Gamma(a)*exp(x)*x^(-a), valid for x
// well above a (modified Lentz).
inline double upper_gamma_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 400; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h;
}

}  // namespace detail

// log Q(a,x), usable far past the point where Q underflows a double.
inline double log_gamma_q(double a, double x) {
    if (x < 0 || a <= 0) throw ArgumentError("log_gamma_q: need a > 0, x >= 0");
    if (x == 0) return 0.0;
    if (x < a + 40.0) {
        const double q = boost::math::gamma_q(a, x);
        if (q > 1e-280) return std::log(q);
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(detail::upper_gamma_cf(a, x));
}

// Standard normal survival function.
inline double normal_survival(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Survival of a sign-symmetric Y with Y^2 ~ Gamma(shape, rate 1/2);
// t may be -inf. For shape = 1/2 this is the standard normal survival.
inline double symmetric_sqrt_gamma_survival(double shape, double t) {
    if (t == -kInf) return 1.0;
    if (t == kInf) return 0.0;
    const double half_tail = 0.5 * gamma_q(shape, t * t / 2.0);
    return t >= 0 ? half_tail : 1.0 - half_tail;
}

inline double beta_cdf(double a, double b, double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return boost::math::ibeta(a, b, x);
}

inline double relative_diff(double a, double b) {
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return scale == 0 ? 0.0 : std::fabs(a - b) / scale;
}

}  // namespace gsdtail
