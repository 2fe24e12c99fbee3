#include <cmath>
#include <stdexcept>
#include <initializer_list>

#include "doctest.h"
#include "iblab/special.hpp"
#include "iblab/theory.hpp"

using namespace iblab;
using namespace iblab::theory;
using datasets::GaussianSpec;

namespace {
GaussianSpec spec_at(double snr, double omega, double kappa, double sigma_y = 0.1) {
    return GaussianSpec(snr * sigma_y, omega, kappa, std::sqrt(kappa) * sigma_y,
                        sigma_y, 0.0, 2);
}
}  // namespace

TEST_SUITE("theory") {

TEST_CASE("p of omega") {
    CHECK(p_of_omega(2.0) == doctest::Approx(0.2048327646991335).epsilon(1e-10));
    CHECK(p_of_omega(1.0) == 0.0);
    CHECK(p_of_omega(1e9) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK_THROWS_AS(p_of_omega(0.5), std::invalid_argument);
}

TEST_CASE("limit direction predictions") {
    CHECK(predicted_gd_gaussian(1) == Vec{1.0, 0.0});
    CHECK(predicted_gd_gaussian(-1) == Vec{-1.0, 0.0});
    CHECK(predicted_signgd_gaussian(1, 1)[1] == doctest::Approx(kInvSqrt2));
    CHECK(predicted_signgd_gaussian(1, -1)[1] == doctest::Approx(-kInvSqrt2));
    CHECK(predicted_signgd_gaussian(1, 0) == Vec{1.0, 0.0});
    CHECK(predicted_signgd_gaussian(-1, 1) == Vec{-1.0, 0.0});
    CHECK(predicted_signgd_gaussian(-1, -1) == Vec{-1.0, 0.0});
}

TEST_CASE("toy tables are normalized and carry the stated masses") {
    for (double omega : {1.5, 2.0, 2.3}) {
        const double p = p_of_omega(omega);
        const auto gd = predicted_toy_table(optim::Algorithm::gd, omega);
        const auto sg = predicted_toy_table(optim::Algorithm::signgd, omega);
        const auto ad = predicted_toy_table(optim::Algorithm::adam, omega, 0.9);
        gd.validate();
        sg.validate();
        ad.validate();
        CHECK(gd.entries[0].probability == doctest::Approx(0.25 + 0.5 * p));
        CHECK(sg.entries[0].probability == doctest::Approx(p));
        CHECK(ad.entries.size() == 6);
        // axis mass: gd keeps more neurons on the x1 axis than signgd
        const double gd_axis = gd.entries[0].probability + gd.entries[1].probability;
        const double sg_axis = sg.entries[0].probability + sg.entries[1].probability;
        CHECK(gd_axis > sg_axis);
    }
    CHECK(predicted_toy_table(optim::Algorithm::gd, 2.0).entries[0].probability ==
          doctest::Approx(0.352416).epsilon(1e-5));
    CHECK_THROWS_AS(predicted_toy_table(optim::Algorithm::adam, 2.0, 0.5),
                    std::invalid_argument);
}

TEST_CASE("regime checks") {
    GaussianSpec good(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    CHECK(regime_theorem1(good).omega_ge_2);
    CHECK(regime_theorem1(good).lambda0_ge_08);

    GaussianSpec low_omega(0.3, 1.5, 1.0, 0.1, 0.1, 0.1, 2);
    CHECK(!regime_theorem1(low_omega).omega_ge_2);

    GaussianSpec low_snr(0.05, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    CHECK(!regime_theorem1(low_snr).lambda0_ge_08);

    GaussianSpec mid(0.12, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    CHECK(regime_theorem2(mid, 0.01, 0.004).init_scale_ok);
    CHECK(!regime_theorem2(mid, 0.01, 0.02).init_scale_ok);
    CHECK(regime_theorem2(mid, 0.01, 0.004).lambda0_le_15);

    datasets::ToySpec toy{0.3, 2.0};
    CHECK(regime_toy(toy).toy_window);
    datasets::ToySpec wide{0.3, 2.5};  // omega^2 = 6.25 > 3 + 2 sqrt 2
    CHECK(!regime_toy(wide).toy_window);

    CHECK(regime_theorem3(spec_at(2.0, 2.0, 1.0)).theorem3_window);
    CHECK(!regime_theorem3(spec_at(1.0, 2.0, 1.0)).theorem3_window);  // snr floor
    CHECK(!regime_theorem3(spec_at(25.0, 13.0, 1.0)).theorem3_window);
}

TEST_CASE("linear error reference value and limits") {
    // mu/sigma_y = 1.6, omega = 2, kappa = 1: 0.5 Phi(-1.2) + 0.5 Phi(-2.0)
    const auto spec = spec_at(1.6, 2.0, 1.0);
    CHECK(linear_error(spec, 1.0, 0.0) ==
          doctest::Approx(0.0689099010849437).epsilon(1e-10));

    // separation limit
    CHECK(linear_error(spec_at(200.0, 2.0, 1.0), 1.0, 0.0) < 1e-100);

    // vanishing signal limit (mu must stay positive; take it tiny)
    CHECK(linear_error(spec_at(1e-9, 2.0, 1.0), 1.0, 0.0) ==
          doctest::Approx(0.5).epsilon(1e-6));

    CHECK_THROWS_AS(linear_error(spec, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("linear error decreases in the signal-to-noise ratio") {
    double prev = 1.0;
    for (double snr = 0.5; snr <= 6.0; snr += 0.25) {
        const double err = linear_error(spec_at(snr, 2.0, 0.7), 1.0, 0.0);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("piecewise error collapses to the linear error at b = 0") {
    for (double a : {1.0, 3.0}) {
        for (double snr : {1.0, 2.0}) {
            const auto spec = spec_at(snr, 2.5, 0.6);
            CHECK(std::fabs(piecewise_error(spec, a, 0.0) -
                            linear_error(spec, a, 0.0)) < 1e-8);
        }
    }
}

TEST_CASE("piecewise error against monte carlo") {
    RngStream rng(55);
    for (int t = 0; t < 6; ++t) {
        const double omega = rng.uniform(2.0, 4.0);
        const double kappa = rng.uniform(0.3, 1.0);
        const double snr = rng.uniform(0.8, 2.5);
        const auto spec = spec_at(snr, omega, kappa);
        const double pw = piecewise_error(spec, 3.0, 1.0);
        const std::size_t n = 1000000;
        RngStream srng(600 + t);
        long err = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int y = srng.rademacher();
            const int eps = srng.rademacher();
            const double x1 = srng.normal(
                0.5 * (spec.mu1 - spec.mu3) + y * 0.5 * (spec.mu1 + spec.mu3),
                spec.sigma_x);
            const double x2 = srng.normal(eps * 0.5 * (y + 1) * spec.mu, spec.sigma_y);
            if (((3.0 * x1 + std::fabs(x2) >= 0.0) ? 1 : -1) != y) ++err;
        }
        const double mc = static_cast<double>(err) / n;
        const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / n);
        CHECK(std::fabs(mc - pw) < 4.0 * se);
    }
}

TEST_CASE("theorem 3 gap at an isotropic in-regime operating point") {
    const auto spec = spec_at(1.6, 2.0, 1.0);
    const auto gap = theorem3_gap(spec);
    CHECK(gap.regime_ok);
    CHECK(gap.gap_negative);
    CHECK(gap.gap < 0.0);
    CHECK(piecewise_error(spec, 3.0, 1.0) < linear_error(spec, 1.0, 0.0));
    // separation limit: both errors vanish
    const auto far = theorem3_gap(spec_at(500.0, 2.0, 1.0));
    CHECK(std::fabs(far.gap) == 0.0);
    CHECK(far.gap_negative);  // still resolvable in log domain
}

TEST_CASE("log and plain error routes agree") {
    const auto spec = spec_at(1.3, 3.0, 0.8);
    CHECK(std::exp(log_linear_error(spec, 1.0, 0.0)) ==
          doctest::Approx(linear_error(spec, 1.0, 0.0)).epsilon(1e-12));
    CHECK(std::exp(log_piecewise_error(spec, 3.0, 1.0)) ==
          doctest::Approx(piecewise_error(spec, 3.0, 1.0)).epsilon(1e-10));
}

TEST_CASE("piecewise preconditions") {
    const auto spec = spec_at(1.5, 2.0, 1.0);
    CHECK_THROWS_AS(piecewise_error(spec, 1.0, -0.5), std::invalid_argument);
    CHECK_THROWS_AS(piecewise_error(spec, 0.0, 0.0), std::invalid_argument);
    CHECK(piecewise_error(spec, 0.0, 1.0) == doctest::Approx(0.5));
}

}
