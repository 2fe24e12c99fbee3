#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "iblab/network.hpp"

using namespace iblab;
using namespace iblab::network;

namespace {

TwoLayerNet hand_net() {
    Matrix w(2, 2);
    w(0, 0) = 1.0; w(0, 1) = 2.0;
    w(1, 0) = 3.0; w(1, 1) = -1.0;
    return TwoLayerNet(std::move(w), {1, -1}, 1.0);
}

datasets::Sample sample_of(Vec x, int y) {
    datasets::Sample s;
    s.x = std::move(x);
    s.y = y;
    return s;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("forward matches hand arithmetic") {
    const auto net = hand_net();
    // (relu(3) - relu(2)) / sqrt(2)
    CHECK(net.forward({1.0, 1.0}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(net.forward({0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(net.forward({1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("positive homogeneity") {
    RngStream rng(5);
    for (int t = 0; t < 20; ++t) {
        auto net = init_net(16, 3, 0.7, 100 + t);
        Vec x{rng.normal(), rng.normal(), rng.normal()};
        const double f = net.forward(x);
        for (double c : {0.25, 2.0, 7.5}) {
            Vec cx{c * x[0], c * x[1], c * x[2]};
            CHECK(net.forward(cx) == doctest::Approx(c * f).epsilon(1e-12));
        }
    }
}

TEST_CASE("inactive neuron row is zero") {
    const auto net = hand_net();
    // row 0 is active at x = (-0.2, 1), row 1 is not (w2 . x = -1.6)
    const std::vector<datasets::Sample> batch{sample_of({-0.2, 1.0}, 1)};
    const auto g = empirical_grad(net, batch, LossKind::correlation);
    CHECK(g(1, 0) == 0.0);
    CHECK(g(1, 1) == 0.0);
    CHECK(g(0, 0) != 0.0);
}

TEST_CASE("logistic gradient approaches correlation gradient at very negative margins") {
    auto net = init_net(8, 2, 1.0, 42);
    // scale weights so margins are around -20 for the negative-label samples
    for (auto& v : net.weights().data) v *= 40.0;
    std::vector<datasets::Sample> batch;
    RngStream rng(7);
    for (int i = 0; i < 64 && batch.size() < 8; ++i) {
        Vec x{rng.normal(), rng.normal()};
        const double f = net.forward(x);
        if (std::fabs(f) < 25.0) continue;  // want margins around -25 or worse
        batch.push_back(sample_of(x, f > 0 ? -1 : 1));
    }
    REQUIRE(batch.size() >= 4);
    const auto gl = empirical_grad(net, batch, LossKind::logistic);
    const auto gc = empirical_grad(net, batch, LossKind::correlation);
    for (std::size_t i = 0; i < gl.data.size(); ++i) {
        if (gc.data[i] == 0.0) {
            CHECK(gl.data[i] == 0.0);
        } else {
            CHECK(gl.data[i] == doctest::Approx(gc.data[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("directional derivative matches the gradient (central differences)") {
    for (auto loss : {LossKind::correlation, LossKind::logistic}) {
        auto net = init_net(10, 3, 1.0, 17);
        std::vector<datasets::Sample> batch;
        RngStream rng(23);
        for (int i = 0; i < 12; ++i)
            batch.push_back(
                sample_of({rng.normal(), rng.normal(), rng.normal()}, rng.rademacher()));
        // keep away from relu kinks
        bool near_kink = false;
        for (std::size_t k = 0; k < net.width(); ++k)
            for (const auto& s : batch)
                if (std::fabs(dot(net.weights().row(k), s.x.data(), 3)) < 1e-3)
                    near_kink = true;
        REQUIRE(!near_kink);

        const auto g = empirical_grad(net, batch, loss);
        Matrix dir(net.width(), 3);
        for (auto& v : dir.data) v = rng.normal();
        const double h = 1e-6;
        auto shifted = [&](double t) {
            TwoLayerNet n2 = net;
            for (std::size_t i = 0; i < n2.weights().data.size(); ++i)
                n2.weights().data[i] += t * dir.data[i];
            return batch_loss(n2, batch, loss);
        };
        const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        const double gd = dot(g.data.data(), dir.data.data(), g.data.size());
        CHECK(fd == doctest::Approx(gd).epsilon(1e-5));
    }
}

TEST_CASE("batch gradient equals the average of per-sample gradients") {
    auto net = init_net(6, 2, 1.0, 3);
    std::vector<datasets::Sample> batch;
    RngStream rng(31);
    for (int i = 0; i < 9; ++i)
        batch.push_back(sample_of({rng.normal(), rng.normal()}, rng.rademacher()));
    const auto g = empirical_grad(net, batch, LossKind::logistic);
    Matrix avg(net.width(), 2, 0.0);
    for (const auto& s : batch) {
        const auto gi = empirical_grad(net, {s}, LossKind::logistic);
        for (std::size_t i = 0; i < avg.data.size(); ++i)
            avg.data[i] += gi.data[i] / batch.size();
    }
    for (std::size_t i = 0; i < avg.data.size(); ++i)
        CHECK(g.data[i] == doctest::Approx(avg.data[i]).epsilon(1e-12));
}

TEST_CASE("correlation gradient ignores gating-stable rescaling of W") {
    auto net = init_net(6, 2, 1.0, 13);
    std::vector<datasets::Sample> batch;
    RngStream rng(37);
    for (int i = 0; i < 10; ++i)
        batch.push_back(sample_of({rng.normal(), rng.normal()}, rng.rademacher()));
    const auto g1 = empirical_grad(net, batch, LossKind::correlation);
    for (auto& v : net.weights().data) v *= 2.0;  // gates unchanged
    const auto g2 = empirical_grad(net, batch, LossKind::correlation);
    CHECK(g1.data == g2.data);
}

TEST_CASE("packed gradient matches the reference path") {
    for (int d : {2, 5}) {
        auto net = init_net(24, d, 1.0, 19);
        std::vector<datasets::Sample> batch;
        RngStream rng(41);
        for (int i = 0; i < 200; ++i) {
            Vec x(d);
            for (auto& v : x) v = rng.normal();
            batch.push_back(sample_of(std::move(x), rng.rademacher()));
        }
        const auto packed = PackedBatch::from(batch);
        for (auto loss : {LossKind::correlation, LossKind::logistic}) {
            const auto ref = empirical_grad(net, batch, loss);
            double loss_packed;
            const auto fast = empirical_grad_packed(net, packed, loss, &loss_packed);
            for (std::size_t i = 0; i < ref.data.size(); ++i)
                CHECK(fast.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-13));
            CHECK(loss_packed ==
                  doctest::Approx(batch_loss(net, batch, loss)).epsilon(1e-13));
        }
    }
}

TEST_CASE("init_net") {
    const auto zero = init_net(4, 3, 0.0, 9);
    for (double v : zero.weights().data) CHECK(v == 0.0);

    const auto balanced = init_net(10, 2, 0.5, 9, HeadMode::balanced);
    int pos = 0;
    for (int s : balanced.head_signs()) pos += s > 0;
    CHECK(pos == 5);
    CHECK_THROWS_AS(init_net(5, 2, 0.5, 9, HeadMode::balanced), std::invalid_argument);

    // mean squared row norm = alpha^2
    const double alpha = 0.7;
    const std::size_t m = 100000;
    const auto net = init_net(m, 4, alpha, 1234);
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double* wk = net.weights().row(k);
        acc += dot(wk, wk, 4);
    }
    const double mean_sq = acc / m;
    const double se = alpha * alpha * std::sqrt(2.0 / (4.0 * m));
    CHECK(std::fabs(mean_sq - alpha * alpha) < 5.0 * se);
}

TEST_CASE("margins") {
    auto net = init_net(6, 2, 0.0, 2);
    std::vector<datasets::Sample> batch{sample_of({1.0, 2.0}, 1),
                                        sample_of({-1.0, 0.5}, -1)};
    for (double v : margins(net, batch)) CHECK(v == 0.0);

    net = init_net(6, 2, 1.0, 2);
    const auto m1 = margins(net, batch);
    for (std::size_t i = 0; i < batch.size(); ++i)
        CHECK(m1[i] == batch[i].y * net.forward(batch[i].x));
    for (auto& v : net.weights().data) v *= 2.0;
    const auto m2 = margins(net, batch);
    for (std::size_t i = 0; i < batch.size(); ++i)
        CHECK(m2[i] == doctest::Approx(2.0 * m1[i]).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip") {
    const auto net = init_net(7, 3, 0.2, 55);
    save_checkpoint(net, 55, ".", "ckpt_test");
    const auto back = load_checkpoint(".", "ckpt_test");
    CHECK(back.width() == net.width());
    CHECK(back.dim() == net.dim());
    CHECK(back.head_signs() == net.head_signs());
    for (std::size_t i = 0; i < net.weights().data.size(); ++i)
        CHECK(back.weights().data[i] == net.weights().data[i]);
}

TEST_CASE("mlp structure and finite differences") {
    auto net = init_mlp({5, 8, 8, 1}, Activation::leaky_relu, 0.01, 1.0, 77);
    CHECK(net.slope == 0.01);
    for (const auto& b : net.biases)
        for (double v : b) CHECK(v == 0.0);

    const Vec flat = net.flatten();
    MlpNet other = init_mlp({5, 8, 8, 1}, Activation::leaky_relu, 0.01, 1.0, 78);
    other.unflatten(flat);
    CHECK(other.forward({1, -1, 0.5, 2, -0.3}) ==
          net.forward({1, -1, 0.5, 2, -0.3}));

    // gradient vs central differences, away from kinks
    RngStream rng(5);
    std::vector<Vec> xs;
    std::vector<int> ys;
    while (xs.size() < 6) {
        Vec x(5);
        for (auto& v : x) v = rng.normal();
        // resample until all pre-activations are comfortably off zero
        bool ok = true;
        Vec h = x;
        for (std::size_t l = 0; l + 1 < net.weights.size(); ++l) {
            Vec z(net.weights[l].rows);
            for (std::size_t r = 0; r < z.size(); ++r) {
                z[r] = dot(net.weights[l].row(r), h.data(), h.size()) + net.biases[l][r];
                if (std::fabs(z[r]) < 1e-3) ok = false;
                z[r] = z[r] >= 0 ? z[r] : 0.01 * z[r];
            }
            h = z;
        }
        if (!ok) continue;
        xs.push_back(x);
        ys.push_back(rng.rademacher());
    }
    const Vec g = mlp_batch_grad(net, xs, ys);
    RngStream drng(6);
    Vec dir(g.size());
    for (auto& v : dir) v = drng.normal();
    const double h = 1e-6;
    auto at = [&](double t) {
        MlpNet n2 = net;
        Vec f = flat;
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += t * dir[i];
        n2.unflatten(f);
        return mlp_batch_loss(n2, xs, ys);
    };
    const double fd = (at(h) - at(-h)) / (2.0 * h);
    const double gd = dot(g, dir);
    CHECK(std::fabs(fd - gd) / std::max(1e-12, std::fabs(gd)) < 1e-4);
}

}
