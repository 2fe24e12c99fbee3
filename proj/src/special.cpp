#include "iblab/special.hpp"

#include <limits>

namespace iblab {

double erfcx(double x) {
    if (x < 0.0) {
        // erfcx(-x) = 2 exp(x^2) - erfcx(x); only safe while exp(x^2) is finite.
        if (x < -26.0) return std::numeric_limits<double>::infinity();
        return 2.0 * std::exp(x * x) - erfcx(-x);
    }
    if (x <= 25.0) {
        return std::exp(x * x) * std::erfc(x);
    }
    // Asymptotic expansion: erfcx(x) ~ 1/(x sqrt(pi)) sum (-1)^k (2k-1)!!/(2x^2)^k.
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        sum += term;
        if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
    }
    constexpr double inv_sqrt_pi = 0.5641895835477562869480794515607726;
    return sum * inv_sqrt_pi / x;
}

double log_normal_cdf(double z) {
    if (z > -1.0) {
        return std::log(normal_cdf(z));
    }
    // Phi(z) = 0.5 erfc(-z/sqrt2) = 0.5 erfcx(-z/sqrt2) exp(-z^2/2).
    const double t = -z * kInvSqrt2;
    return std::log(0.5 * erfcx(t)) - 0.5 * z * z;
}

double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-(a > b ? a - b : b - a)));
}

}  // namespace iblab
