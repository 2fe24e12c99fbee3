#pragma once

#include <vector>

#include "iblab/matrix.hpp"

namespace iblab {

struct LogregResult {
    Vec w;
    double bias = 0.0;
    bool converged = false;
    int iterations = 0;
    double grad_norm = 0.0;

    double decision(const Vec& x) const { return dot(w, x) + bias; }
    int predict(const Vec& x) const { return decision(x) >= 0.0 ? 1 : -1; }
};

// Deterministic, dependency-free logistic regression: full-batch gradient
// descent with step 1/L (L = logistic smoothness bound from the data),
// iteration cap and gradient-norm stop.
LogregResult fit_logistic(const std::vector<Vec>& xs, const std::vector<int>& ys,
                          bool fit_bias = true, int max_iter = 10000,
                          double grad_tol = 1e-8);

}  // namespace iblab
