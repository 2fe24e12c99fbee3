#pragma once

#include <cmath>

namespace iblab {

inline constexpr double kInvSqrt2 = 0.7071067811865475244008443621048490;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;
inline constexpr double kLn2 = 0.6931471805599453094172321214581766;

// Standard normal pdf.
inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Standard normal cdf via erfc; abs error ~1 ulp of erfc, well under 1e-12.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

// Scaled complementary error function exp(x^2) erfc(x), valid for all x.
// For x <= 25 the direct product stays in range; beyond that erfc underflows
// and the asymptotic series takes over (terms fall like (2k-1)!!/(2x^2)^k).
double erfcx(double x);

// log(Phi(z)), accurate for arbitrarily negative z (no underflow until the
// log itself leaves double range, i.e. never for finite z).
double log_normal_cdf(double z);

// log(pdf(z)) = -z^2/2 - log(sqrt(2 pi)).
inline double log_normal_pdf(double z) {
    return -0.5 * z * z - 0.9189385332046727417803297364056176;
}

// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

// Numerically stable log(1 + exp(x)).
inline double softplus(double x) {
    if (x > 36.0) return x;
    if (x < -36.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace iblab
