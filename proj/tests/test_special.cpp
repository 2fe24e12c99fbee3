#include <cmath>
#include <initializer_list>

#include "doctest.h"
#include "iblab/special.hpp"

using namespace iblab;

TEST_SUITE("special") {

TEST_CASE("normal cdf reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(normal_cdf(-1.2) == doctest::Approx(0.11506967022170822).epsilon(1e-12));
    CHECK(normal_cdf(-2.0) == doctest::Approx(0.02275013194817921).epsilon(1e-12));
    CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
    CHECK(normal_cdf(-3.75) == doctest::Approx(8.841728520080377e-05).epsilon(1e-11));
}

TEST_CASE("log cdf agrees with plain cdf in the bulk") {
    for (double z = -8.0; z <= 8.0; z += 0.37) {
        CHECK(log_normal_cdf(z) ==
              doctest::Approx(std::log(normal_cdf(z))).epsilon(1e-12));
    }
}

TEST_CASE("log cdf deep tail matches the asymptotic series") {
    // Phi(-z) = phi(z)/z (1 - 1/z^2 + 3/z^4 - 15/z^6 + ...)
    for (double z : {20.0, 50.0, 120.0, 800.0}) {
        const double series =
            1.0 - 1.0 / (z * z) + 3.0 / std::pow(z, 4) - 15.0 / std::pow(z, 6);
        const double expect = log_normal_pdf(z) - std::log(z) + std::log(series);
        CHECK(log_normal_cdf(-z) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("erfcx crosses the implementation switch smoothly") {
    for (double x : {24.9, 25.0, 25.1, 26.0, 40.0}) {
        const double series = 1.0 / (x * 1.7724538509055160273);
        CHECK(erfcx(x) == doctest::Approx(series).epsilon(1e-3));
    }
    CHECK(erfcx(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(erfcx(1.0) == doctest::Approx(std::exp(1.0) * std::erfc(1.0)).epsilon(1e-13));
}

TEST_CASE("log_add_exp") {
    CHECK(log_add_exp(0.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(log_add_exp(-1000.0, -1001.0) ==
          doctest::Approx(-1000.0 + std::log1p(std::exp(-1.0))).epsilon(1e-13));
    CHECK(log_add_exp(-std::numeric_limits<double>::infinity(), -5.0) == -5.0);
}

TEST_CASE("softplus and sigmoid are overflow-free") {
    CHECK(softplus(1000.0) == 1000.0);
    CHECK(softplus(-1000.0) == 0.0);
    CHECK(sigmoid(1000.0) == 1.0);
    CHECK(sigmoid(-1000.0) == doctest::Approx(0.0).epsilon(1e-300));
    CHECK(sigmoid(0.0) == 0.5);
}

}
