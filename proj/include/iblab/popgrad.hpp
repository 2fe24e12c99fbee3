#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iblab/datasets.hpp"
#include "iblab/matrix.hpp"
#include "iblab/network.hpp"

namespace iblab::popgrad {

// Closed-form population gradient of the correlation loss for one neuron,
//   grad = -(a sigma / 4) [ Phi(l u+.wb) l u+ + Phi(l u-.wb) l u-
//                           - 2 Phi(l u0.wb) l u0
//                           + (phi(l u+.wb) + phi(l u-.wb) - 2 phi(l u0.wb)) wb ],
// l = (mu/sigma)(omega^2+1)/(2 omega), u+/u-/u0 the unit cluster means, wb the
// unit neuron. Valid only for isotropic noise (sigma_x = sigma_y = sigma_z);
// depends on w through wb alone. Throws on anisotropic spec or zero-norm w.
Vec population_grad(const datasets::GaussianSpec& spec, const Vec& w, double a);

// Full-net version: row k = population_grad(spec, w_k, a_k).
Matrix population_grad_net(const datasets::GaussianSpec& spec,
                           const network::TwoLayerNet& net);

// Population correlation loss E[-y f], exact via the identity
// E[y relu(w.x)] = -w.grad/a per neuron.
double population_loss(const datasets::GaussianSpec& spec,
                       const network::TwoLayerNet& net);

struct McGrad {
    Vec mean;  // plain MC average of -a 1[w.x >= 0] y x
    Vec se;    // per-coordinate standard error
    std::size_t n = 0;
};

// Plain Monte Carlo estimate of the population gradient (works for any
// anisotropy). n_samples >= 1000 enforced. Deterministic per (spec, w, seed).
McGrad mc_grad(const datasets::GaussianSpec& spec, const Vec& w, double a,
               std::size_t n_samples, std::uint64_t seed);

// Exact population gradient over the three toy point masses:
// -a sum_p prob_p 1[w.z_p >= 0] y_p z_p (boundary included).
Vec toy_exact_grad(const datasets::ToySpec& spec, const Vec& w, double a);

// Full-net toy gradient and exact toy correlation loss.
Matrix toy_exact_grad_net(const datasets::ToySpec& spec,
                          const network::TwoLayerNet& net);
double toy_population_loss(const datasets::ToySpec& spec,
                           const network::TwoLayerNet& net);

// Activation regions of the first-iteration toy analysis, identified by
// which point masses a neuron direction activates.
enum class ToyRegion { s2_s3, s2, s1_s2, s1, s3_s1, s3 };

// P(a uniformly random direction lands in the region); the six arctan
// formulas, summing to 1.
double toy_region_probability(const datasets::ToySpec& spec, ToyRegion region);

// Representative interior unit direction of a region (test/diagnostic aid).
Vec toy_region_interior_direction(const datasets::ToySpec& spec, ToyRegion region);

std::string toy_region_name(ToyRegion region);

}  // namespace iblab::popgrad
