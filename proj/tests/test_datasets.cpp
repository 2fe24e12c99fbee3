#include <cmath>
#include <stdexcept>
#include <fstream>
#include <map>

#include "doctest.h"
#include "iblab/datasets.hpp"
#include "iblab/rng.hpp"

using namespace iblab;
using namespace iblab::datasets;

TEST_SUITE("datasets") {

TEST_CASE("realizable means") {
    auto [m1, m3] = realizable_means(0.3, 2.0, 1.0);
    CHECK(m1 == doctest::Approx(0.225).epsilon(1e-15));
    CHECK(m3 == doctest::Approx(0.375).epsilon(1e-15));

    auto [u1, u3] = realizable_means(0.7, 1.0, 1.0);
    CHECK(u1 == 0.0);
    CHECK(u3 == doctest::Approx(0.7).epsilon(1e-15));

    // kappa * omega = 1/omega here, so the first mean vanishes
    auto [k1, k3] = realizable_means(0.3, 2.0, 0.25);
    CHECK(k1 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(k3 == doctest::Approx(0.15).epsilon(1e-15));

    CHECK_THROWS_AS(realizable_means(0.3, 0.9, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(realizable_means(-0.3, 2.0, 1.0), std::invalid_argument);
    // anisotropy field must match the stddev ratio it is defined from
    CHECK_THROWS_AS(GaussianSpec(0.3, 2.0, 1.7, 0.13, 0.1, 0.0, 2),
                    std::invalid_argument);
}

TEST_CASE("slope parameter recoverable from the means") {
    RngStream rng(11);
    for (int t = 0; t < 100; ++t) {
        const double mu = rng.uniform(0.05, 2.0);
        const double omega = rng.uniform(1.0, 6.0);
        const double kappa = rng.uniform(0.1, 3.0);
        auto [m1, m3] = realizable_means(mu, omega, kappa);
        CHECK((m1 + m3) / (kappa * mu) == doctest::Approx(omega).epsilon(1e-12));
    }
}

TEST_CASE("gaussian sampling, zero-variance degenerate draw") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.0, 0.0, 0.0, 3);
    const auto samples = sample_gaussian(spec, 500, 5);
    for (const auto& s : samples) {
        if (s.y == 1) {
            CHECK(s.x[0] == spec.mu1);
            CHECK(s.x[1] == s.epsilon * spec.mu);
        } else {
            CHECK(s.x[0] == -spec.mu3);
            CHECK(s.x[1] == 0.0);
        }
        CHECK(s.x[2] == 0.0);
    }
}

TEST_CASE("gaussian sampling, law of large numbers on x1 | y=+1") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    const std::size_t n = 1000000;
    const auto samples = sample_gaussian(spec, n, 77);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples)
        if (s.y == 1) {
            sum += s.x[0];
            ++count;
        }
    const double mean = sum / count;
    CHECK(std::fabs(mean - spec.mu1) < 4.0 * spec.sigma_x / std::sqrt((double)count));
}

TEST_CASE("gaussian sampling, latent sign is uniform given y=+1") {
    GaussianSpec spec;
    const auto samples = sample_gaussian(spec, 100000, 3);
    std::size_t pos = 0, count = 0;
    for (const auto& s : samples)
        if (s.y == 1) {
            pos += s.epsilon == 1;
            ++count;
        }
    CHECK(std::fabs((double)pos / count - 0.5) < 0.01);
}

TEST_CASE("gaussian sampling, per-cluster moments within 5 SE at n=1e6") {
    GaussianSpec spec(0.25, 2.5, 2.25, 0.15, 0.1, 0.05, 3);
    const std::size_t n = 1000000;
    const auto samples = sample_gaussian(spec, n, 99);
    // group by (y, eps for y=+1)
    struct Acc { double s1 = 0, s2 = 0, q1 = 0, q2 = 0, sz = 0, qz = 0; std::size_t n = 0; };
    std::map<int, Acc> acc;  // key: y * 2 + (eps>0)
    for (const auto& s : samples) {
        auto& a = acc[s.y == 1 ? (s.epsilon == 1 ? 1 : 0) : 2];
        a.s1 += s.x[0]; a.q1 += s.x[0] * s.x[0];
        a.s2 += s.x[1]; a.q2 += s.x[1] * s.x[1];
        a.sz += s.x[2]; a.qz += s.x[2] * s.x[2];
        ++a.n;
    }
    auto check_moments = [](const Acc& a, double m1, double m2, double sx, double sy,
                            double sz) {
        const double nn = (double)a.n;
        auto mean_ok = [&](double sum, double mean, double sd) {
            return std::fabs(sum / nn - mean) < 5.0 * sd / std::sqrt(nn);
        };
        auto var_ok = [&](double sum, double sq, double sd) {
            const double var = sq / nn - (sum / nn) * (sum / nn);
            return std::fabs(var - sd * sd) <
                   5.0 * sd * sd * std::sqrt(2.0 / (nn - 1));
        };
        CHECK(mean_ok(a.s1, m1, sx));
        CHECK(mean_ok(a.s2, m2, sy));
        CHECK(mean_ok(a.sz, 0.0, sz));
        CHECK(var_ok(a.s1, a.q1, sx));
        CHECK(var_ok(a.s2, a.q2, sy));
        CHECK(var_ok(a.sz, a.qz, sz));
    };
    check_moments(acc[1], spec.mu1, spec.mu, spec.sigma_x, spec.sigma_y, spec.sigma_z);
    check_moments(acc[0], spec.mu1, -spec.mu, spec.sigma_x, spec.sigma_y, spec.sigma_z);
    check_moments(acc[2], -spec.mu3, 0.0, spec.sigma_x, spec.sigma_y, spec.sigma_z);
}

TEST_CASE("bayes boundary passes exactly through the origin") {
    GaussianSpec iso(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    CHECK(bayes_decision_value(iso, 0.0, 0.0) == 0.0);
    GaussianSpec aniso(0.25, 3.0, 0.36, 0.06, 0.1, 0.0, 2);
    CHECK(bayes_decision_value(aniso, 0.0, 0.0) == 0.0);
    CHECK(bayes_label(iso, {0.0, 0.0}) == 1);  // ties classify as +1
}

TEST_CASE("bayes boundary is even in x2") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    RngStream rng(4);
    for (int t = 0; t < 2000; ++t) {
        const double x1 = rng.uniform(-1.0, 1.0);
        const double x2 = rng.uniform(-1.0, 1.0);
        CHECK(bayes_label(spec, {x1, x2}) == bayes_label(spec, {x1, -x2}));
        CHECK(bayes_decision_value(spec, x1, x2) ==
              doctest::Approx(bayes_decision_value(spec, x1, -x2)).epsilon(1e-12));
    }
}

TEST_CASE("bayes boundary asymptote at large x2") {
    GaussianSpec spec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    const double s2 = spec.sigma_y * spec.sigma_y;
    const double x2 = 30.0 * spec.sigma_y;
    // on the line omega x1 + x2 = (sigma^2/mu) ln 2 the decision value -> 0
    const double x1 = ((s2 / spec.mu) * std::log(2.0) - x2) / spec.omega;
    CHECK(std::fabs(bayes_decision_value(spec, x1, x2)) < 1e-12);
}

TEST_CASE("bayes label agrees with brute-force density comparison on a grid") {
    GaussianSpec spec(0.3, 2.0, 1.69, 0.13, 0.1, 0.0, 2);
    auto log_gauss = [](double v, double mean, double sd) {
        const double z = (v - mean) / sd;
        return -0.5 * z * z - std::log(sd);
    };
    int disagreements = 0;
    for (int i = 0; i < 200; ++i) {
        for (int j = 0; j < 200; ++j) {
            const double x1 = -1.0 + 2.0 * i / 199.0;
            const double x2 = -1.0 + 2.0 * j / 199.0;
            // three-cluster likelihoods with priors 1/4, 1/4, 1/2
            const double lp = std::log(0.25) +
                              log_gauss(x1, spec.mu1, spec.sigma_x) +
                              log_gauss(x2, spec.mu, spec.sigma_y);
            const double lm = std::log(0.25) +
                              log_gauss(x1, spec.mu1, spec.sigma_x) +
                              log_gauss(x2, -spec.mu, spec.sigma_y);
            const double l0 = std::log(0.5) +
                              log_gauss(x1, -spec.mu3, spec.sigma_x) +
                              log_gauss(x2, 0.0, spec.sigma_y);
            const double pos = std::max(lp, lm) +
                               std::log1p(std::exp(-std::fabs(lp - lm)));
            if (std::fabs(pos - l0) < 1e-9) continue;  // numerically on the boundary
            const int want = pos >= l0 ? 1 : -1;
            if (bayes_label(spec, {x1, x2}) != want) ++disagreements;
        }
    }
    CHECK(disagreements == 0);
}

TEST_CASE("toy point masses and bayes rule") {
    ToySpec toy{0.3, 2.0};
    CHECK(toy_bayes_label(toy, toy.z1()) == -1);
    CHECK(toy_bayes_label(toy, toy.z2()) == 1);
    CHECK(toy_bayes_label(toy, toy.z3()) == 1);
    CHECK(toy_bayes_decision_value(toy, 0.0, 0.0) == 0.0);
    CHECK(toy_bayes_label(toy, {0.0, 0.0}) == 1);

    RngStream rng(8);
    for (int t = 0; t < 100; ++t) {
        ToySpec spec{rng.uniform(0.05, 2.0), rng.uniform(1.05, 2.4)};
        CHECK(spec.z1()[0] == -0.5 * spec.mu * (spec.omega + 1.0 / spec.omega));
        CHECK(spec.z1()[1] == 0.0);
        CHECK(spec.z2()[0] == 0.5 * spec.mu * (spec.omega - 1.0 / spec.omega));
        CHECK(spec.z2()[1] == spec.mu);
        CHECK(spec.z3()[0] == spec.z2()[0]);
        CHECK(spec.z3()[1] == -spec.mu);
    }
}

TEST_CASE("toy sampling frequencies") {
    ToySpec toy{0.3, 2.0};
    const auto samples = sample_toy(toy, 100000, 21);
    std::size_t c1 = 0, c2 = 0, c3 = 0;
    for (const auto& s : samples) {
        if (s.y == -1)
            ++c1;
        else if (s.x[1] > 0)
            ++c2;
        else
            ++c3;
    }
    CHECK(std::fabs(c1 / 1e5 - 0.5) < 0.01);
    CHECK(std::fabs(c2 / 1e5 - 0.25) < 0.01);
    CHECK(std::fabs(c3 / 1e5 - 0.25) < 0.01);
}

TEST_CASE("staircase") {
    CHECK(staircase({1, 1, 1, 1}, 4) == 1);
    CHECK(staircase({-1, 1, 1}, 3) == -1);
    CHECK(staircase({1, -1, 1}, 3) == -1);  // 1 - 1 - 1
    CHECK(staircase({1, -1}, 1) == 1);
    CHECK_THROWS_AS(staircase({1, 1}, 3), std::invalid_argument);
}

TEST_CASE("boolean task sampling") {
    BooleanTaskSpec task{12, 3, 2, 1.0};
    auto all_same = sample_boolean(task, 2000, 31);
    for (const auto& s : all_same) {
        CHECK(task.core_value(s.x) == task.spurious_value(s.x));
        CHECK(s.y == task.core_value(s.x));
    }

    task.lambda_corr = 0.9;
    const auto mixed = sample_boolean(task, 100000, 32);
    std::size_t agree = 0;
    std::vector<double> ucorr(task.d_uncorrelated(), 0.0);
    for (const auto& s : mixed) {
        agree += task.core_value(s.x) == task.spurious_value(s.x);
        for (int j = 0; j < task.d_uncorrelated(); ++j)
            ucorr[j] += s.x[task.d_core + task.d_spurious + j] * s.y;
    }
    CHECK(std::fabs(agree / 1e5 - 0.9) < 0.01);
    for (double c : ucorr) CHECK(std::fabs(c / 1e5) < 0.02);
}

TEST_CASE("csv dumps carry the documented headers") {
    GaussianSpec spec;
    const auto samples = sample_gaussian(spec, 5, 1);
    dump_samples_csv(samples, spec.dim, "test_gauss.csv");
    {
        std::ifstream in("test_gauss.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "x1,x2,y,eps");
    }
    BooleanTaskSpec task{4, 2, 1, 0.5};
    dump_boolean_csv(sample_boolean(task, 3, 2), task.dim, "test_bool.csv");
    {
        std::ifstream in("test_bool.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "b1,b2,b3,b4,y");
    }
}

}
