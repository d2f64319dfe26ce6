#pragma once

#include <cmath>
#include <limits>

namespace rssbound {

namespace detail {

// Asymptotic expansion erfcx(x) ~ 1/(x*sqrt(pi)) * sum (-1)^n (2n-1)!!/(2x^2)^n,
// truncated adaptively. Relative error below 1e-13 for x >= 8.
inline double erfcx_asymptotic(double x) {
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n <= 24; ++n) {
        term *= -(2.0 * n - 1.0) * inv2x2;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) {
            break;
        }
    }
    return sum / (x * 1.7724538509055160273);  // sqrt(pi)
}

}  // namespace detail

// Scaled complementary error function exp(x^2) * erfc(x).
// For moderate x the direct product is accurate since erfc carries no
// cancellation there; for large positive x the product underflows/loses
// digits, so the asymptotic continued product takes over. Negative side uses
// the reflection erfcx(-x) = 2*exp(x^2) - erfcx(x) and is allowed to
// overflow to +inf where 2*exp(x^2) is not representable.
inline double erfcx(double x) {
    if (std::isnan(x)) {
        return x;
    }
    if (x >= 0.0) {
        if (x < 8.0) {
            return std::exp(x * x) * std::erfc(x);
        }
        return detail::erfcx_asymptotic(x);
    }
    const double e = std::exp(x * x);
    if (!std::isfinite(e)) {
        return std::numeric_limits<double>::infinity();
    }
    return 2.0 * e - erfcx(-x);
}

// Per-sample information weight of the sign quantizer,
//   exp(-u^2) / (1 - erf(u/sqrt(2))^2)
// evaluated through the identity 1 - erf(v)^2 = erfc(v)*erfc(-v) as
//   1 / (erfcx(v) * erfcx(-v)),  v = u/sqrt(2),
// which stays finite where the naive ratio is 0/0. Beyond the point where
// erfcx(-v) overflows, the remaining factor is applied in log space; the
// weight then underflows to 0, never overflows.
inline double one_bit_fisher_weight(double u) {
    const double v = std::abs(u) * 0.70710678118654752440;  // 1/sqrt(2)
    if (v < 26.0) {
        return 1.0 / (erfcx(v) * erfcx(-v));
    }
    return std::exp(-v * v - std::log(2.0 * erfcx(v)));
}

}  // namespace rssbound
