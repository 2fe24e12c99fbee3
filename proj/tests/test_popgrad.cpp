#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "iblab/popgrad.hpp"

using namespace iblab;
using namespace iblab::popgrad;
using datasets::GaussianSpec;
using datasets::ToySpec;

TEST_SUITE("popgrad") {

TEST_CASE("frozen value at the reference configuration") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    const Vec g = population_grad(spec, {1.0, 0.0}, 1.0);
    CHECK(g[0] == doctest::Approx(-0.112710677875).epsilon(1e-9));
    CHECK(g[1] == 0.0);  // exact mirror cancellation on the axis
}

TEST_CASE("reflection equivariance in x2") {
    GaussianSpec spec(0.2, 2.5, 1.0, 0.08, 0.08, 0.08, 2);
    RngStream rng(5);
    for (int t = 0; t < 50; ++t) {
        Vec w{rng.normal(), rng.normal()};
        const Vec g = population_grad(spec, w, 1.0);
        const Vec gm = population_grad(spec, {w[0], -w[1]}, 1.0);
        CHECK(g[0] == gm[0]);
        CHECK(g[1] == -gm[1]);
    }
}

TEST_CASE("depends on the neuron only through its direction") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    RngStream rng(6);
    for (int t = 0; t < 20; ++t) {
        Vec w{rng.normal(), rng.normal()};
        Vec w2{7.3 * w[0], 7.3 * w[1]};
        const Vec g1 = population_grad(spec, w, -1.0);
        const Vec g2 = population_grad(spec, w2, -1.0);
        CHECK(g1[0] == doctest::Approx(g2[0]).epsilon(1e-12));
        CHECK(g1[1] == doctest::Approx(g2[1]).epsilon(1e-12));
    }
}

TEST_CASE("preconditions") {
    GaussianSpec aniso(0.3, 2.0, 4.0, 0.2, 0.1, 0.1, 2);
    CHECK_THROWS_AS(population_grad(aniso, {1.0, 0.0}, 1.0), std::invalid_argument);
    GaussianSpec iso(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    CHECK_THROWS_AS(population_grad(iso, {0.0, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(mc_grad(iso, {1.0, 0.0}, 1.0, 100, 1), std::invalid_argument);
}

TEST_CASE("monte carlo oracle agrees with the closed form") {
    RngStream rng(42);
    int coord_failures = 0, coords = 0;
    for (int c = 0; c < 50; ++c) {
        const double omega = rng.uniform(1.5, 4.0);
        const double snr = rng.uniform(0.5, 4.0);
        const double sigma = 0.1;
        GaussianSpec spec(snr * sigma, omega, 1.0, sigma, sigma, sigma, 2);
        Vec w{rng.normal(), rng.normal()};
        const double a = rng.rademacher();
        const Vec closed = population_grad(spec, w, a);
        const auto mc = mc_grad(spec, w, a, 200000, 1000 + c);
        for (int j = 0; j < 2; ++j) {
            ++coords;
            if (std::fabs(mc.mean[j] - closed[j]) >= 4.0 * mc.se[j]) ++coord_failures;
        }
    }
    CHECK(coord_failures == 0);
    CHECK(coords == 100);
}

TEST_CASE("head sign flips the estimate exactly") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    const auto plus = mc_grad(spec, {0.3, -0.2}, 1.0, 10000, 9);
    const auto minus = mc_grad(spec, {0.3, -0.2}, -1.0, 10000, 9);
    for (int j = 0; j < 2; ++j) {
        CHECK(plus.mean[j] == -minus.mean[j]);
        CHECK(plus.se[j] == minus.se[j]);
    }
}

TEST_CASE("noise coordinates carry no signal when the neuron lives in the signal plane") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 5);
    Vec w{0.6, -0.4, 0.0, 0.0, 0.0};
    const Vec closed = population_grad(spec, w, 1.0);
    CHECK(closed[2] == 0.0);
    CHECK(closed[3] == 0.0);
    CHECK(closed[4] == 0.0);
    const auto mc = mc_grad(spec, w, 1.0, 400000, 5);
    for (int j = 2; j < 5; ++j)
        CHECK(std::fabs(mc.mean[j]) < 4.0 * mc.se[j]);
    // and the closed form matches MC on all coordinates, including a neuron
    // with weight on a noise coordinate
    Vec w2{0.5, -0.1, 0.3, 0.0, -0.2};
    const Vec c2 = population_grad(spec, w2, 1.0);
    const auto mc2 = mc_grad(spec, w2, 1.0, 400000, 6);
    for (int j = 0; j < 5; ++j)
        CHECK(std::fabs(mc2.mean[j] - c2[j]) < 4.0 * mc2.se[j]);
}

TEST_CASE("toy gradients reproduce all six activation-region rows") {
    ToySpec toy{0.3, 2.0};
    const double m1 = toy.mu1(), m2 = toy.mu, m3 = toy.mu3();
    struct Row {
        ToyRegion region;
        Vec expected_yx;  // E[y x | region active]
    };
    const Row rows[] = {
        {ToyRegion::s2_s3, {0.5 * m1, 0.0}},
        {ToyRegion::s2, {0.25 * m1, 0.25 * m2}},
        {ToyRegion::s1_s2, {0.25 * (m1 + 2.0 * m3), 0.25 * m2}},
        {ToyRegion::s1, {0.5 * m3, 0.0}},
        {ToyRegion::s3_s1, {0.25 * (m1 + 2.0 * m3), -0.25 * m2}},
        {ToyRegion::s3, {0.25 * m1, -0.25 * m2}},
    };
    for (const auto& row : rows) {
        const Vec w = toy_region_interior_direction(toy, row.region);
        const Vec g = toy_exact_grad(toy, w, 1.0);
        CHECK(g[0] == doctest::Approx(-row.expected_yx[0]).epsilon(1e-14));
        CHECK(g[1] == doctest::Approx(-row.expected_yx[1]).epsilon(1e-14));
    }
}

TEST_CASE("toy region probabilities are the arctan fractions and sum to one") {
    RngStream rng(12);
    for (int t = 0; t < 20; ++t) {
        ToySpec toy{rng.uniform(0.1, 1.0), rng.uniform(1.3, 2.4)};
        const double A = std::atan((toy.omega * toy.omega - 1.0) / (2.0 * toy.omega));
        CHECK(toy_region_probability(toy, ToyRegion::s2_s3) ==
              doctest::Approx(A / M_PI).epsilon(1e-12));
        CHECK(toy_region_probability(toy, ToyRegion::s1) ==
              doctest::Approx(A / M_PI).epsilon(1e-12));
        double total = 0.0;
        for (auto r : {ToyRegion::s2_s3, ToyRegion::s2, ToyRegion::s1_s2,
                       ToyRegion::s1, ToyRegion::s3_s1, ToyRegion::s3}) {
            const double p = toy_region_probability(toy, r);
            if (r != ToyRegion::s2_s3 && r != ToyRegion::s1)
                CHECK(p == doctest::Approx((M_PI / 2.0 - A) / (2.0 * M_PI))
                               .epsilon(1e-12));
            total += p;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        // interior directions really land in their regions (Monte Carlo over
        // directions would be the long way; activation patterns suffice)
        const Vec pts[3] = {toy.z1(), toy.z2(), toy.z3()};
        auto active = [&](const Vec& w, int p) { return dot(w, pts[p]) > 0.0; };
        const Vec w23 = toy_region_interior_direction(toy, ToyRegion::s2_s3);
        CHECK((!active(w23, 0) && active(w23, 1) && active(w23, 2)));
        const Vec w12 = toy_region_interior_direction(toy, ToyRegion::s1_s2);
        CHECK((active(w12, 0) && active(w12, 1) && !active(w12, 2)));
    }
}

TEST_CASE("toy gradient spec examples") {
    ToySpec toy{0.3, 2.0};
    const Vec g1 = toy_exact_grad(toy, {1.0, 0.0}, 1.0);
    CHECK(g1[0] == doctest::Approx(-0.1125).epsilon(1e-14));
    CHECK(g1[1] == 0.0);
    const Vec g2 = toy_exact_grad(toy, {-1.0, 0.0}, 1.0);
    CHECK(g2[0] == doctest::Approx(-0.5 * toy.mu3()).epsilon(1e-14));
    CHECK(g2[1] == 0.0);
    // w = (0,1) touches z1 exactly (w.z1 = 0); the inclusive activation
    // convention lands it in the region where both z1 and z2 contribute
    const Vec g3 = toy_exact_grad(toy, {0.0, 1.0}, 1.0);
    CHECK(g3[0] == doctest::Approx(-0.25 * (toy.mu1() + 2.0 * toy.mu3())).epsilon(1e-14));
    CHECK(g3[1] == doctest::Approx(-0.25 * toy.mu).epsilon(1e-14));
    // strictly inside the z2-only region the classic row value holds
    const Vec w_s2 = toy_region_interior_direction(toy, ToyRegion::s2);
    const Vec g4 = toy_exact_grad(toy, w_s2, 1.0);
    CHECK(g4[0] == doctest::Approx(-0.25 * toy.mu1()).epsilon(1e-14));
    CHECK(g4[1] == doctest::Approx(-0.25 * toy.mu).epsilon(1e-14));
}

TEST_CASE("toy gradient equals the empirical gradient over the weighted support") {
    ToySpec toy{0.45, 1.8};
    std::vector<datasets::Sample> batch(4);
    batch[0].x = toy.z1(); batch[0].y = -1;
    batch[1].x = toy.z1(); batch[1].y = -1;
    batch[2].x = toy.z2(); batch[2].y = 1;
    batch[3].x = toy.z3(); batch[3].y = 1;
    Matrix w(1, 2);
    w(0, 0) = 0.3; w(0, 1) = 0.8;
    network::TwoLayerNet net(std::move(w), {1}, 1.0);
    const auto ge = network::empirical_grad(net, batch, network::LossKind::correlation);
    const Vec gt = toy_exact_grad(toy, {0.3, 0.8}, net.head(0));
    CHECK(ge(0, 0) == doctest::Approx(gt[0]).epsilon(1e-15));
    CHECK(ge(0, 1) == doctest::Approx(gt[1]).epsilon(1e-15));
}

TEST_CASE("population loss identity at a known configuration") {
    // E[-y f] for a single neuron w = (1,0), a = 1 equals w . grad
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    Matrix w(1, 2);
    w(0, 0) = 1.0;
    network::TwoLayerNet net(std::move(w), {1}, 1.0);
    const double loss = population_loss(spec, net);
    const Vec g = population_grad(spec, {1.0, 0.0}, net.head(0));
    CHECK(loss == doctest::Approx(g[0]).epsilon(1e-12));
    // Monte Carlo sanity on the loss value
    RngStream rng(14);
    double acc = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const int y = rng.rademacher();
        const double x1 = rng.normal(
            0.5 * (spec.mu1 - spec.mu3) + y * 0.5 * (spec.mu1 + spec.mu3), spec.sigma_x);
        acc += -y * (x1 >= 0.0 ? x1 : 0.0);
    }
    CHECK(loss == doctest::Approx(acc / n).epsilon(0.05));
}

}
