#pragma once

#include <string>
#include <vector>

#include "iblab/datasets.hpp"
#include "iblab/matrix.hpp"
#include "iblab/optim.hpp"

namespace iblab::theory {

// p = arctan((omega^2 - 1)/(2 omega)) / pi. The fraction of directions whose
// activation set is exactly {z2, z3} (and by symmetry {z1}).
double p_of_omega(double omega);

struct DirectionEntry {
    Vec direction;  // unit 2-vector
    double probability = 0.0;
    std::string label;
};

struct DirectionTable {
    std::vector<DirectionEntry> entries;
    std::string algorithm;
    std::string regime;
    std::string source;

    // Unit norms and probabilities summing to 1 (+-1e-12).
    void validate() const;
};

// Limit direction a_k [1, 0] of gradient flow on the Gaussian task.
Vec predicted_gd_gaussian(int a_sign);

// signGD limit keyed on (sign a_k, sign sin theta_0):
// (+,+) -> (1,1)/sqrt2, (+,-) -> (1,-1)/sqrt2, (+,0) -> (1,0), (-,*) -> (-1,0).
Vec predicted_signgd_gaussian(int a_sign, int sin_theta0_sign);

// Full toy tables. GD and signGD need only omega; the Adam (beta ~ 1) column
// carries the constant s in [0.72, 1] for its (s, +-1) rows.
DirectionTable predicted_toy_table(optim::Algorithm algo, double omega,
                                   double s = 1.0);

// Hypothesis flags of the theorem statements, derivable from spec parameters.
struct RegimeCheck {
    bool omega_ge_2 = false;
    bool lambda0_ge_08 = false;       // mu/sigma >= 0.8
    bool lambda0_le_15 = false;       // mu/sigma <= 1.5
    bool isotropic = false;
    bool init_scale_ok = false;       // sup ||w_0|| < eta/2 (signGD theorem)
    bool toy_window = false;          // 1 + 2/sqrt3 < omega^2 < 3 + 2 sqrt2
    bool theorem3_window = false;     // omega in [2,12], kappa in [1/w^2, 1],
                                      // mu/sigma_y >= 0.8 sqrt(kappa) omega

    std::string describe() const;
};

RegimeCheck regime_theorem1(const datasets::GaussianSpec& spec);
RegimeCheck regime_theorem2(const datasets::GaussianSpec& spec, double eta,
                            double max_init_norm);
RegimeCheck regime_toy(const datasets::ToySpec& spec);
RegimeCheck regime_theorem3(const datasets::GaussianSpec& spec);

// Exact error probability of the linear predictor sign(a x1 + b x2):
//   1/4 [Phi(-(a mu1 + b mu)/s) + Phi(-(a mu1 - b mu)/s)] + 1/2 Phi(-a mu3 / s),
// s = sigma_y sqrt(a^2 kappa + b^2). Throws when a = b = 0.
double linear_error(const datasets::GaussianSpec& spec, double a, double b);
double log_linear_error(const datasets::GaussianSpec& spec, double a, double b);

// Exact error probability of the piecewise predictor sign(a x1 + b |x2|),
// b >= 0, by per-cluster adaptive quadrature over x2 (inner x1 integral in
// closed form). Carried in log domain so deep-tail values keep their sign
// information; the plain value is exp() of it. Abs error < 1e-8.
double piecewise_error(const datasets::GaussianSpec& spec, double a, double b);
double log_piecewise_error(const datasets::GaussianSpec& spec, double a, double b);

struct Theorem3Gap {
    double gap = 0.0;           // piecewise(3,1) - linear(1,0); may round to 0
    double log_piecewise = 0.0;
    double log_linear = 0.0;
    bool gap_negative = false;  // decided in log domain
    bool regime_ok = false;
};

Theorem3Gap theorem3_gap(const datasets::GaussianSpec& spec);

}  // namespace iblab::theory
