#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "iblab/matrix.hpp"
#include "iblab/rng.hpp"

namespace iblab::datasets {

struct Sample {
    Vec x;
    int y = 1;        // label in {-1, +1}
    int epsilon = 1;  // latent cluster sign, diagnostic only when y = -1
};

// Cluster means under the realizability constraint (the Bayes boundary is
// forced through the origin so a bias-free homogeneous net can express it):
//   mu1 = (mu/2)(kappa*omega - 1/omega),  mu3 = (mu/2)(kappa*omega + 1/omega).
// Requires omega >= 1. Throws std::invalid_argument otherwise.
std::pair<double, double> realizable_means(double mu, double omega, double kappa);

// Gaussian three-cluster task. Always constructed realizable from
// (mu, omega, kappa); mu1/mu3 and the unit cluster directions are derived.
struct GaussianSpec {
    double mu = 0.3;       // mu2, the x2 cluster offset
    double omega = 2.0;    // inverse slope of the optimal boundary pieces
    double kappa = 1.0;    // anisotropy sigma_x^2 / sigma_y^2
    double sigma_x = 0.1;
    double sigma_y = 0.1;
    double sigma_z = 0.1;  // noise coordinates 3..d
    int dim = 2;

    double mu1 = 0.0;  // derived: x1 mean of the y=+1 clusters
    double mu3 = 0.0;  // derived: -x1 mean of the y=-1 cluster

    GaussianSpec() { finalize(); }
    GaussianSpec(double mu_, double omega_, double kappa_, double sx, double sy,
                 double sz, int d)
        : mu(mu_), omega(omega_), kappa(kappa_), sigma_x(sx), sigma_y(sy),
          sigma_z(sz), dim(d) {
        finalize();
    }

    // Recomputes derived fields; call after mutating parameters.
    void finalize();

    bool isotropic() const { return sigma_x == sigma_y && sigma_y == sigma_z; }

    // lambda = (mu/sigma)(omega^2+1)/(2 omega); only meaningful when
    // sigma_x == sigma_y == sigma.
    double lambda() const;

    // Unit directions of the three cluster means, zero-padded to dim.
    Vec unit_mean_pos() const;   // y=+1, eps=+1
    Vec unit_mean_neg() const;   // y=+1, eps=-1
    Vec unit_mean_zero() const;  // y=-1
};

std::vector<Sample> sample_gaussian(const GaussianSpec& spec, std::size_t n,
                                    std::uint64_t seed);

// Signed distance-like decision value of the Bayes-optimal rule, using only
// the first two coordinates. Positive (or zero) means label +1. Evaluated in
// the realizable reduced form, which is exactly even in x2 and exactly zero
// at the origin.
double bayes_decision_value(const GaussianSpec& spec, double x1, double x2);
int bayes_label(const GaussianSpec& spec, const Vec& x);

// Zero-variance limit of the Gaussian task: three point masses.
struct ToySpec {
    double mu = 0.3;
    double omega = 2.0;

    Vec z1() const;  // label -1, probability 1/2
    Vec z2() const;  // label +1, probability 1/4
    Vec z3() const;  // label +1, probability 1/4

    double mu1() const { return 0.5 * mu * (omega - 1.0 / omega); }
    double mu3() const { return 0.5 * mu * (omega + 1.0 / omega); }

    // Direction-limit statements need 1 + 2/sqrt(3) < omega^2 < 3 + 2 sqrt(2).
    bool omega_in_theorem_window() const;
};

std::vector<Sample> sample_toy(const ToySpec& spec, std::size_t n, std::uint64_t seed);

double toy_bayes_decision_value(const ToySpec& spec, double x1, double x2);
int toy_bayes_label(const ToySpec& spec, const Vec& x);

// Threshold staircase of degree k on a +-1 vector:
// +1 iff x1 + x1 x2 + ... + x1 x2 ... xk >= 0.
int staircase(const std::vector<int>& x, int degree);

// Boolean core/spurious task. Coordinates are partitioned in order:
// [0, d_core) core, [d_core, d_core+d_spurious) spurious, rest uncorrelated.
struct BooleanTaskSpec {
    int dim = 50;
    int d_core = 8;
    int d_spurious = 1;
    double lambda_corr = 0.9;  // P(core and spurious agree)

    int d_uncorrelated() const { return dim - d_core - d_spurious; }
    void validate() const;

    int core_value(const std::vector<int>& x) const;
    int spurious_value(const std::vector<int>& x) const;
};

struct BooleanSample {
    std::vector<int> x;  // entries in {-1, +1}
    int y = 1;           // = core_value(x)
};

// Draws from D_same with probability lambda, else D_diff, by rejection over
// the uniform hypercube. Throws after 1e6 rejections for a single sample.
std::vector<BooleanSample> sample_boolean(const BooleanTaskSpec& spec, std::size_t n,
                                          std::uint64_t seed);

// CSV dumps. Gaussian/toy header: x1,...,xd,y,eps. Boolean header: b1..bd,y.
void dump_samples_csv(const std::vector<Sample>& samples, int dim,
                      const std::string& path);
void dump_boolean_csv(const std::vector<BooleanSample>& samples, int dim,
                      const std::string& path);

}  // namespace iblab::datasets
