#include "iblab/logreg.hpp"

#include <cmath>
#include <stdexcept>

#include "iblab/special.hpp"

namespace iblab {

LogregResult fit_logistic(const std::vector<Vec>& xs, const std::vector<int>& ys,
                          bool fit_bias, int max_iter, double grad_tol) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("fit_logistic: bad inputs");
    const std::size_t n = xs.size();
    const std::size_t p = xs[0].size();

    // Smoothness of the mean logistic loss: L <= (1/4n) sum ||(x,1)||^2.
    double lsum = 0.0;
    for (const auto& x : xs) lsum += dot(x, x) + (fit_bias ? 1.0 : 0.0);
    const double L = 0.25 * lsum / static_cast<double>(n);
    const double step = L > 0.0 ? 1.0 / L : 1.0;

    LogregResult res;
    res.w.assign(p, 0.0);
    res.bias = 0.0;

    auto loss_at = [&](const Vec& w, double b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += softplus(-ys[i] * (dot(w, xs[i]) + b));
        return acc / static_cast<double>(n);
    };

    // Backtracking/expanding step: separable probe sets have no finite
    // optimum and plain 1/L steps leave the direction half-baked inside the
    // iteration cap.
    double cur_step = step;
    double cur_loss = loss_at(res.w, res.bias);
    Vec gw(p), wtry(p);
    for (int it = 0; it < max_iter; ++it) {
        gw.assign(p, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = dot(res.w, xs[i]) + res.bias;
            const double c = -ys[i] * sigmoid(-ys[i] * f) / static_cast<double>(n);
            axpy(c, xs[i], gw);
            gb += c;
        }
        double g2 = dot(gw, gw);
        if (fit_bias) g2 += gb * gb;
        res.grad_norm = std::sqrt(g2);
        res.iterations = it;
        if (res.grad_norm < grad_tol) {
            res.converged = true;
            return res;
        }
        for (int bt = 0; bt < 60; ++bt) {
            wtry = res.w;
            axpy(-cur_step, gw, wtry);
            const double btry = fit_bias ? res.bias - cur_step * gb : res.bias;
            const double ltry = loss_at(wtry, btry);
            if (ltry <= cur_loss) {
                res.w = wtry;
                res.bias = btry;
                cur_loss = ltry;
                cur_step *= 1.5;
                break;
            }
            cur_step *= 0.5;
        }
    }
    res.iterations = max_iter;
    res.converged = res.grad_norm < grad_tol;
    return res;
}

}  // namespace iblab
