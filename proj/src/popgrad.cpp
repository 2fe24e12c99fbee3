#include "iblab/popgrad.hpp"

#include <cmath>
#include <stdexcept>

#include "iblab/special.hpp"

namespace iblab::popgrad {

using datasets::GaussianSpec;
using datasets::ToySpec;

Vec population_grad(const GaussianSpec& spec, const Vec& w, double a) {
    if (!spec.isotropic())
        throw std::invalid_argument(
            "population_grad: closed form needs sigma_x == sigma_y == sigma_z; "
            "use mc_grad for anisotropic specs");
    if (w.size() != static_cast<std::size_t>(spec.dim))
        throw std::invalid_argument("population_grad: dimension mismatch");
    const double wnorm = norm2(w);
    if (!(wnorm > 0.0)) throw std::invalid_argument("population_grad: zero-norm neuron");

    const double sigma = spec.sigma_x;
    const double lam = spec.lambda();
    Vec wb(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) wb[j] = w[j] / wnorm;

    const Vec up = spec.unit_mean_pos();
    const Vec un = spec.unit_mean_neg();
    const Vec u0 = spec.unit_mean_zero();

    const double tp = lam * dot(up, wb);
    const double tn = lam * dot(un, wb);
    const double t0 = lam * dot(u0, wb);

    const double cp = normal_cdf(tp) * lam;
    const double cn = normal_cdf(tn) * lam;
    const double c0 = 2.0 * normal_cdf(t0) * lam;
    const double pdf_coeff = normal_pdf(tp) + normal_pdf(tn) - 2.0 * normal_pdf(t0);

    const double scale = -a * sigma / 4.0;
    Vec g(w.size());
    for (std::size_t j = 0; j < w.size(); ++j)
        g[j] = scale * (cp * up[j] + cn * un[j] - c0 * u0[j] + pdf_coeff * wb[j]);
    return g;
}

Matrix population_grad_net(const GaussianSpec& spec, const network::TwoLayerNet& net) {
    Matrix g(net.width(), net.dim());
    Vec wk(net.dim());
    for (std::size_t k = 0; k < net.width(); ++k) {
        const double* row = net.weights().row(k);
        wk.assign(row, row + net.dim());
        const Vec gk = population_grad(spec, wk, net.head(k));
        for (std::size_t j = 0; j < net.dim(); ++j) g(k, j) = gk[j];
    }
    return g;
}

double population_loss(const GaussianSpec& spec, const network::TwoLayerNet& net) {
    // E[-y f] = sum_k w_k . grad_k since grad_k = -a_k E[1[w_k.x>=0] y x].
    double loss = 0.0;
    Vec wk(net.dim());
    for (std::size_t k = 0; k < net.width(); ++k) {
        const double* row = net.weights().row(k);
        wk.assign(row, row + net.dim());
        if (norm2(wk) == 0.0) continue;  // dead neuron contributes 0
        loss += dot(wk, population_grad(spec, wk, net.head(k)));
    }
    return loss;
}

McGrad mc_grad(const GaussianSpec& spec, const Vec& w, double a,
               std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1000)
        throw std::invalid_argument("mc_grad: n_samples must be >= 1000");
    if (w.size() != static_cast<std::size_t>(spec.dim))
        throw std::invalid_argument("mc_grad: dimension mismatch");

    const int d = spec.dim;
    Vec sum(d, 0.0), sumsq(d, 0.0);
    RngStream rng(seed);
    Vec x(d);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const int y = rng.rademacher();
        const int eps = rng.rademacher();
        const double mean1 =
            0.5 * (spec.mu1 - spec.mu3) + y * 0.5 * (spec.mu1 + spec.mu3);
        const double mean2 = eps * 0.5 * (y + 1) * spec.mu;
        x[0] = rng.normal(mean1, spec.sigma_x);
        x[1] = rng.normal(mean2, spec.sigma_y);
        for (int j = 2; j < d; ++j) x[j] = rng.normal(0.0, spec.sigma_z);
        const bool active = dot(x.data(), w.data(), d) >= 0.0;
        if (active) {
            for (int j = 0; j < d; ++j) {
                const double v = -a * y * x[j];
                sum[j] += v;
                sumsq[j] += v * v;
            }
        }
        // inactive samples contribute exact zeros to both accumulators
    }
    McGrad out;
    out.n = n_samples;
    out.mean.resize(d);
    out.se.resize(d);
    const double n = static_cast<double>(n_samples);
    for (int j = 0; j < d; ++j) {
        out.mean[j] = sum[j] / n;
        const double var = (sumsq[j] - sum[j] * sum[j] / n) / (n - 1.0);
        out.se[j] = std::sqrt(std::max(var, 0.0) / n);
    }
    return out;
}

Vec toy_exact_grad(const ToySpec& spec, const Vec& w, double a) {
    if (w.size() != 2) throw std::invalid_argument("toy_exact_grad: w must be 2-D");
    if (!(norm2(w) > 0.0))
        throw std::invalid_argument("toy_exact_grad: zero-norm neuron");
    const Vec pts[3] = {spec.z1(), spec.z2(), spec.z3()};
    const double probs[3] = {0.5, 0.25, 0.25};
    const int labels[3] = {-1, 1, 1};
    Vec g(2, 0.0);
    for (int p = 0; p < 3; ++p) {
        if (dot(w, pts[p]) >= 0.0) {
            const double c = -a * probs[p] * labels[p];
            g[0] += c * pts[p][0];
            g[1] += c * pts[p][1];
        }
    }
    return g;
}

Matrix toy_exact_grad_net(const ToySpec& spec, const network::TwoLayerNet& net) {
    if (net.dim() != 2) throw std::invalid_argument("toy_exact_grad_net: dim != 2");
    Matrix g(net.width(), 2);
    Vec wk(2);
    for (std::size_t k = 0; k < net.width(); ++k) {
        wk[0] = net.weights()(k, 0);
        wk[1] = net.weights()(k, 1);
        const Vec gk = toy_exact_grad(spec, wk, net.head(k));
        g(k, 0) = gk[0];
        g(k, 1) = gk[1];
    }
    return g;
}

double toy_population_loss(const ToySpec& spec, const network::TwoLayerNet& net) {
    const Vec pts[3] = {spec.z1(), spec.z2(), spec.z3()};
    const double probs[3] = {0.5, 0.25, 0.25};
    const int labels[3] = {-1, 1, 1};
    double loss = 0.0;
    for (int p = 0; p < 3; ++p)
        loss += probs[p] * (-labels[p] * net.forward(pts[p]));
    return loss;
}

double toy_region_probability(const ToySpec& spec, ToyRegion region) {
    const double w2 = spec.omega * spec.omega;
    const double A = std::atan((w2 - 1.0) / (2.0 * spec.omega));
    const double pi = M_PI;
    switch (region) {
        case ToyRegion::s2_s3:
        case ToyRegion::s1: return A / pi;
        case ToyRegion::s2:
        case ToyRegion::s1_s2:
        case ToyRegion::s3_s1:
        case ToyRegion::s3: return (pi / 2.0 - A) / (2.0 * pi);
    }
    return 0.0;
}

Vec toy_region_interior_direction(const ToySpec& spec, ToyRegion region) {
    // theta2 = angle of z2; the region boundaries are at +-(pi/2 - theta2),
    // +-pi/2, +-(pi/2 + theta2).
    const double theta2 = std::atan2(spec.mu, spec.mu1());
    double psi = 0.0;
    switch (region) {
        case ToyRegion::s2_s3: psi = 0.0; break;
        case ToyRegion::s2: psi = M_PI / 2.0 - theta2 / 2.0; break;
        case ToyRegion::s1_s2: psi = M_PI / 2.0 + theta2 / 2.0; break;
        case ToyRegion::s1: psi = M_PI; break;
        case ToyRegion::s3_s1: psi = -M_PI / 2.0 - theta2 / 2.0; break;
        case ToyRegion::s3: psi = -M_PI / 2.0 + theta2 / 2.0; break;
    }
    return {std::cos(psi), std::sin(psi)};
}

std::string toy_region_name(ToyRegion region) {
    switch (region) {
        case ToyRegion::s2_s3: return "S2uS3";
        case ToyRegion::s2: return "S2";
        case ToyRegion::s1_s2: return "S1uS2";
        case ToyRegion::s1: return "S1";
        case ToyRegion::s3_s1: return "S3uS1";
        case ToyRegion::s3: return "S3";
    }
    return "?";
}

}  // namespace iblab::popgrad
