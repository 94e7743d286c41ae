#pragma once

#include <cmath>

#include "simclust/errors.hpp"

namespace simclust {

namespace detail {

inline constexpr int kSpecialMaxIter = 500;
inline constexpr double kSpecialEps = 1e-16;
inline constexpr double kFpMin = 1e-300;

/// Continued fraction for the incomplete beta function, modified Lentz.
inline double betacf(double a, double b, double x) {
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kSpecialMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kSpecialEps) return h;
    }
    throw numeric_error("incomplete beta continued fraction failed to converge");
}

/// Series for the regularized lower incomplete gamma P(s, x), x < s + 1.
inline double gamma_p_series(double s, double x) {
    double ap = s;
    double sum = 1.0 / s;
    double del = sum;
    for (int n = 0; n < kSpecialMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * kSpecialEps)
            return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    throw numeric_error("incomplete gamma series failed to converge");
}

/// Continued fraction for the regularized upper incomplete gamma Q(s, x),
/// x >= s + 1, modified Lentz.
inline double gamma_q_cf(double s, double x) {
    double b = x + 1.0 - s;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kSpecialMaxIter; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kSpecialEps)
            return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    throw numeric_error("incomplete gamma continued fraction failed to converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw numeric_error("reg_inc_beta: a, b must be positive");
    if (!(x >= 0.0 && x <= 1.0)) throw numeric_error("reg_inc_beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::betacf(a, b, x) / a;
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

/// Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s).
inline double reg_inc_gamma_upper(double s, double x) {
    if (!(s > 0.0)) throw numeric_error("reg_inc_gamma_upper: s must be positive");
    if (!(x >= 0.0)) throw numeric_error("reg_inc_gamma_upper: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < s + 1.0) return 1.0 - detail::gamma_p_series(s, x);
    return detail::gamma_q_cf(s, x);
}

/// Standard normal CDF via the complementary error function; keeps full
/// relative precision in the lower tail.
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Two-sided normal tail 2(1 - Phi(|z|)) without cancellation.
inline double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Upper tail of the F distribution with (df1, df2) degrees of freedom.
inline double f_upper_tail(double f, double df1, double df2) {
    if (!(f >= 0.0)) throw numeric_error("f_upper_tail: statistic must be nonnegative");
    return reg_inc_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

/// Upper tail of the chi-square distribution.
inline double chi_square_upper_tail(double x, double df) {
    if (!(x >= 0.0)) throw numeric_error("chi_square_upper_tail: statistic must be nonnegative");
    return reg_inc_gamma_upper(df / 2.0, x / 2.0);
}

}  // namespace simclust
