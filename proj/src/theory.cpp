#include "iblab/theory.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "iblab/special.hpp"

namespace iblab::theory {

using datasets::GaussianSpec;
using datasets::ToySpec;

double p_of_omega(double omega) {
    if (!(omega >= 1.0)) throw std::invalid_argument("p_of_omega: omega must be > 1");
    return std::atan((omega * omega - 1.0) / (2.0 * omega)) / M_PI;
}

void DirectionTable::validate() const {
    double total = 0.0;
    for (const auto& e : entries) {
        if (e.direction.size() != 2)
            throw std::logic_error("DirectionTable: directions must be 2-D");
        if (std::fabs(norm2(e.direction) - 1.0) > 1e-12)
            throw std::logic_error("DirectionTable: non-unit direction");
        if (e.probability < -1e-12 || e.probability > 1.0 + 1e-12)
            throw std::logic_error("DirectionTable: probability out of [0,1]");
        total += e.probability;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::logic_error("DirectionTable: probabilities must sum to 1");
}

Vec predicted_gd_gaussian(int a_sign) {
    if (a_sign == 0) throw std::invalid_argument("predicted_gd_gaussian: a_sign 0");
    return {a_sign > 0 ? 1.0 : -1.0, 0.0};
}

Vec predicted_signgd_gaussian(int a_sign, int sin_theta0_sign) {
    if (a_sign == 0) throw std::invalid_argument("predicted_signgd_gaussian: a_sign 0");
    if (a_sign < 0) return {-1.0, 0.0};
    if (sin_theta0_sign > 0) return {kInvSqrt2, kInvSqrt2};
    if (sin_theta0_sign < 0) return {kInvSqrt2, -kInvSqrt2};
    return {1.0, 0.0};
}

DirectionTable predicted_toy_table(optim::Algorithm algo, double omega, double s) {
    const double p = p_of_omega(omega);
    DirectionTable t;
    t.algorithm = optim::algorithm_name(algo);
    t.source = "toy limit table";
    const double w2 = omega * omega;
    const Vec e1{1.0, 0.0}, e1n{-1.0, 0.0};
    const Vec diag_up{kInvSqrt2, kInvSqrt2}, diag_dn{kInvSqrt2, -kInvSqrt2};
    switch (algo) {
        case optim::Algorithm::gd: {
            const Vec mu_up{(w2 - 1.0) / (w2 + 1.0), 2.0 * omega / (w2 + 1.0)};
            const Vec mu_dn{mu_up[0], -mu_up[1]};
            t.entries = {{e1, 0.25 + 0.5 * p, "+x1"},
                         {e1n, 0.5, "-x1"},
                         {mu_up, 0.125 - 0.25 * p, "cluster+"},
                         {mu_dn, 0.125 - 0.25 * p, "cluster-"}};
            break;
        }
        case optim::Algorithm::signgd: {
            t.entries = {{e1, p, "+x1"},
                         {e1n, 0.5, "-x1"},
                         {diag_up, 0.25 - 0.5 * p, "diag+"},
                         {diag_dn, 0.25 - 0.5 * p, "diag-"}};
            break;
        }
        case optim::Algorithm::adam: {
            if (!(s >= 0.72 && s <= 1.0))
                throw std::invalid_argument(
                    "predicted_toy_table: adam column needs s in [0.72, 1]");
            const double ns = std::sqrt(s * s + 1.0);
            const Vec s_up{s / ns, 1.0 / ns}, s_dn{s / ns, -1.0 / ns};
            t.entries = {{e1, p, "+x1"},
                         {e1n, 0.5, "-x1"},
                         {diag_up, 0.125 - 0.25 * p, "diag+"},
                         {diag_dn, 0.125 - 0.25 * p, "diag-"},
                         {s_up, 0.125 - 0.25 * p, "s+"},
                         {s_dn, 0.125 - 0.25 * p, "s-"}};
            break;
        }
    }
    t.validate();
    return t;
}

std::string RegimeCheck::describe() const {
    auto flag = [](bool b) { return b ? "ok" : "VIOLATED"; };
    std::string out;
    out += "omega>=2: " + std::string(flag(omega_ge_2));
    out += ", mu/sigma>=0.8: " + std::string(flag(lambda0_ge_08));
    out += ", mu/sigma<=1.5: " + std::string(flag(lambda0_le_15));
    out += ", isotropic: " + std::string(flag(isotropic));
    out += ", init<eta/2: " + std::string(flag(init_scale_ok));
    out += ", toy-window: " + std::string(flag(toy_window));
    out += ", th3-window: " + std::string(flag(theorem3_window));
    return out;
}

RegimeCheck regime_theorem1(const GaussianSpec& spec) {
    RegimeCheck r;
    r.omega_ge_2 = spec.omega >= 2.0;
    r.isotropic = spec.isotropic();
    if (spec.sigma_x > 0.0) {
        const double l0 = spec.mu / spec.sigma_x;
        r.lambda0_ge_08 = l0 >= 0.8;
        r.lambda0_le_15 = true;  // not required by this theorem
    }
    r.init_scale_ok = true;
    r.toy_window = true;
    r.theorem3_window = true;
    return r;
}

RegimeCheck regime_theorem2(const GaussianSpec& spec, double eta,
                            double max_init_norm) {
    RegimeCheck r = regime_theorem1(spec);
    if (spec.sigma_x > 0.0) r.lambda0_le_15 = spec.mu / spec.sigma_x <= 1.5;
    r.init_scale_ok = max_init_norm < 0.5 * eta;
    return r;
}

RegimeCheck regime_toy(const ToySpec& spec) {
    RegimeCheck r;
    r.toy_window = spec.omega_in_theorem_window();
    r.omega_ge_2 = true;
    r.lambda0_ge_08 = r.lambda0_le_15 = true;
    r.isotropic = true;
    r.init_scale_ok = true;
    r.theorem3_window = true;
    return r;
}

RegimeCheck regime_theorem3(const GaussianSpec& spec) {
    RegimeCheck r;
    r.omega_ge_2 = true;
    r.lambda0_ge_08 = r.lambda0_le_15 = true;
    r.isotropic = true;
    r.init_scale_ok = true;
    r.toy_window = true;
    const double w = spec.omega;
    const bool omega_ok = w >= 2.0 && w <= 12.0;
    const bool kappa_ok = spec.kappa >= 1.0 / (w * w) && spec.kappa <= 1.0;
    const bool snr_ok =
        spec.sigma_y > 0.0 &&
        spec.mu / spec.sigma_y >= 0.8 * std::sqrt(spec.kappa) * w;
    r.theorem3_window = omega_ok && kappa_ok && snr_ok;
    return r;
}

namespace {

struct ErrorTerm {
    double log_weight;
    double log_value;
};

double combine(const std::vector<ErrorTerm>& terms) {
    double total = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) total = log_add_exp(total, t.log_weight + t.log_value);
    return total;
}

// log P(a x1 < c) (or >= with flip) for x1 ~ N(m1, sx^2), a != 0.
double log_prob_ax1(double a, double c, double m1, double sx, bool geq) {
    double z;
    if (!geq) {
        z = a > 0.0 ? (c / a - m1) / sx : (m1 - c / a) / sx;
    } else {
        z = a > 0.0 ? (m1 - c / a) / sx : (c / a - m1) / sx;
    }
    return log_normal_cdf(z);
}

// Adaptive Simpson on [lo, hi] of a smooth positive integrand <= ~1.
double simpson(const std::function<double(double)>& f, double lo, double hi,
               double f_lo, double f_mid, double f_hi, double whole, double tol,
               int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lmid = 0.5 * (lo + mid), rmid = 0.5 * (mid + hi);
    const double f_lmid = f(lmid), f_rmid = f(rmid);
    const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lmid + f_mid);
    const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rmid + f_hi);
    const double delta = left + right - whole;
    if (depth <= 0) throw std::runtime_error("piecewise_error: quadrature depth cap");
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, lo, mid, f_lo, f_lmid, f_mid, left, 0.5 * tol, depth - 1) +
           simpson(f, mid, hi, f_mid, f_rmid, f_hi, right, 0.5 * tol, depth - 1);
}

// log of integral over one half-line x2 = half_sign * s, s in [0, inf), of
// phi((x2-m2)/sy)/sy * P(x1 side condition | s). The integrand is
// log-concave in s, so: bracket the peak by expanding scan, golden-section,
// cut where the log drops 60 nats, then adaptive Simpson on the shifted
// integrand. The window adapts to the integrand's own peak (which can sit
// far outside the cluster's x2 bulk in deep-tail regimes).
double log_half_integral(double half_sign, double m1, double m2, double sx,
                         double sy, double a, double b, bool err_geq) {
    auto logf = [&](double s) {
        const double x2 = half_sign * s;
        const double lg = log_normal_pdf((x2 - m2) / sy) - std::log(sy);
        return lg + log_prob_ax1(a, -b * s, m1, sx, err_geq);
    };

    // Expanding scan for the peak.
    double h = 0.25 * sy;
    double best_s = 0.0, best_v = logf(0.0);
    double s = 0.0;
    int since_best = 0;
    for (int i = 1; i < 20000; ++i) {
        s += h;
        if (i % 64 == 0) h *= 2.0;
        const double v = logf(s);
        if (v > best_v) {
            best_v = v;
            best_s = s;
            since_best = 0;
        } else {
            ++since_best;
            if (v < best_v - 80.0 && since_best > 2) break;
        }
    }
    // Golden-section refine around the bracket.
    double lo = std::max(0.0, best_s - 2.0 * h), hi = best_s + 2.0 * h;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1p = hi - gr * (hi - lo), x2p = lo + gr * (hi - lo);
    double f1 = logf(x1p), f2 = logf(x2p);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        if (f1 < f2) {
            lo = x1p;
            x1p = x2p;
            f1 = f2;
            x2p = lo + gr * (hi - lo);
            f2 = logf(x2p);
        } else {
            hi = x2p;
            x2p = x1p;
            f2 = f1;
            x1p = hi - gr * (hi - lo);
            f1 = logf(x1p);
        }
    }
    const double s_star = 0.5 * (lo + hi);
    const double l_star = logf(s_star);

    // Cut points where the integrand drops 60 nats below the peak.
    const double cut_level = l_star - 60.0;
    auto cut_point = [&](double dir) {
        double d = std::max(0.25 * sy, 1e-6), inside_d = 0.0;
        for (int it = 0; it < 200; ++it) {
            double cand = s_star + dir * d;
            if (dir < 0.0 && cand < 0.0) cand = 0.0;
            if (logf(cand) < cut_level) {
                double lo_d = inside_d, hi_d = d;
                for (int bs = 0; bs < 80; ++bs) {
                    const double mid = 0.5 * (lo_d + hi_d);
                    double p = s_star + dir * mid;
                    if (dir < 0.0 && p < 0.0) p = 0.0;
                    if (logf(p) < cut_level)
                        hi_d = mid;
                    else
                        lo_d = mid;
                }
                double res = s_star + dir * hi_d;
                return dir < 0.0 ? std::max(res, 0.0) : res;
            }
            if (dir < 0.0 && cand == 0.0) return 0.0;  // still above cut at s = 0
            inside_d = d;
            d *= 2.0;
        }
        return s_star + dir * d;
    };
    const double q_lo = cut_point(-1.0);
    const double q_hi = cut_point(+1.0);

    auto f = [&](double t) { return std::exp(logf(t) - l_star); };
    const double f_lo = f(q_lo), f_hi = f(q_hi), f_mid = f(0.5 * (q_lo + q_hi));
    const double whole = (q_hi - q_lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
    const double integral =
        simpson(f, q_lo, q_hi, f_lo, f_mid, f_hi, whole, 1e-12 * (q_hi - q_lo), 48);
    return l_star + std::log(integral);
}

// log error contribution of one Gaussian cluster for sign(a x1 + b |x2|).
double log_cluster_error(double m1, double m2, double sx, double sy, double a,
                         double b, bool err_geq) {
    const double up = log_half_integral(+1.0, m1, m2, sx, sy, a, b, err_geq);
    const double dn = log_half_integral(-1.0, m1, m2, sx, sy, a, b, err_geq);
    return log_add_exp(up, dn);
}

}  // namespace

double log_linear_error(const GaussianSpec& spec, double a, double b) {
    if (a == 0.0 && b == 0.0)
        throw std::invalid_argument("linear_error: a = b = 0");
    if (!(spec.sigma_y > 0.0))
        throw std::invalid_argument("linear_error: sigma_y must be > 0");
    const double s =
        spec.sigma_y * std::sqrt(a * a * spec.kappa + b * b);
    std::vector<ErrorTerm> terms = {
        {std::log(0.25), log_normal_cdf(-(a * spec.mu1 + b * spec.mu) / s)},
        {std::log(0.25), log_normal_cdf(-(a * spec.mu1 - b * spec.mu) / s)},
        {std::log(0.5), log_normal_cdf(-(a * spec.mu3) / s)}};
    return combine(terms);
}

double linear_error(const GaussianSpec& spec, double a, double b) {
    return std::exp(log_linear_error(spec, a, b));
}

double log_piecewise_error(const GaussianSpec& spec, double a, double b) {
    if (b < 0.0) throw std::invalid_argument("piecewise_error: b must be >= 0");
    if (a == 0.0 && b == 0.0)
        throw std::invalid_argument("piecewise_error: a = b = 0");
    if (!(spec.sigma_x > 0.0 && spec.sigma_y > 0.0))
        throw std::invalid_argument("piecewise_error: needs positive sigmas");
    if (a == 0.0) return std::log(0.5);  // b|x2| >= 0 always: constant +1 predictor

    // y=+1 clusters err when a x1 + b|x2| < 0, y=-1 cluster errs on >= 0.
    std::vector<ErrorTerm> terms = {
        {std::log(0.25),
         log_cluster_error(spec.mu1, spec.mu, spec.sigma_x, spec.sigma_y, a, b, false)},
        {std::log(0.25),
         log_cluster_error(spec.mu1, -spec.mu, spec.sigma_x, spec.sigma_y, a, b, false)},
        {std::log(0.5),
         log_cluster_error(-spec.mu3, 0.0, spec.sigma_x, spec.sigma_y, a, b, true)}};
    return combine(terms);
}

double piecewise_error(const GaussianSpec& spec, double a, double b) {
    return std::exp(log_piecewise_error(spec, a, b));
}

Theorem3Gap theorem3_gap(const GaussianSpec& spec) {
    Theorem3Gap out;
    out.log_piecewise = log_piecewise_error(spec, 3.0, 1.0);
    out.log_linear = log_linear_error(spec, 1.0, 0.0);
    out.gap = std::exp(out.log_piecewise) - std::exp(out.log_linear);
    out.gap_negative = out.log_piecewise < out.log_linear;
    out.regime_ok = regime_theorem3(spec).theorem3_window;
    return out;
}

}  // namespace iblab::theory
