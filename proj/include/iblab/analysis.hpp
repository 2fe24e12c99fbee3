#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iblab/datasets.hpp"
#include "iblab/matrix.hpp"
#include "iblab/network.hpp"
#include "iblab/optim.hpp"
#include "iblab/theory.hpp"

namespace iblab::analysis {

struct NeuronSnapshot {
    std::size_t id = 0;
    double angle = 0.0;  // atan2(w2, w1), in (-pi, pi]
    double norm = 0.0;
    int head_sign = 1;
    std::vector<double> cos_to_predicted;
};

std::vector<NeuronSnapshot> snapshot_neurons(const network::TwoLayerNet& net);

// Limit directions per the theorems' w_(k,T)/T convention (same direction as
// w_T; the division matters only for reported magnitudes).
std::vector<Vec> limit_directions(const network::TwoLayerNet& net, long long steps);

struct HistogramResult {
    std::vector<double> empirical;  // aligned with the table entries
    double unmatched = 0.0;
    std::vector<std::size_t> counts;
    std::size_t total = 0;
};

// Assigns each direction to the max-cosine table entry above threshold.
HistogramResult direction_histogram(const std::vector<Vec>& directions,
                                    const theory::DirectionTable& table,
                                    double cos_threshold);

struct BoundaryTrace {
    std::vector<std::vector<Vec>> polylines;
    double window_lo = 0.0, window_hi = 0.0;
    int resolution = 0;
    bool empty_flagged = false;  // constant-sign window
    double tolerance = 0.0;      // |f| bound satisfied by every vertex
};

// Marching-edge sign-change scan of f over [lo,hi]^2 with per-edge bisection
// refinement to |f| < 1e-9 * (max |f| over grid nodes).
BoundaryTrace extract_boundary(const network::TwoLayerNet& net, double window_lo,
                               double window_hi, int resolution);

// Same scan for an arbitrary scalar field (used for the Bayes curve).
BoundaryTrace extract_boundary_field(const std::function<double(double, double)>& f,
                                     double window_lo, double window_hi,
                                     int resolution);

void boundary_to_svg(const BoundaryTrace& trace,
                     const std::vector<datasets::Sample>& scatter,
                     const std::optional<BoundaryTrace>& bayes_curve,
                     const std::string& path);

// Fits a linear classifier (logistic regression, deterministic full-batch GD)
// to the net's own predictions on the probe set, then returns the fraction of
// probe points where the two agree. High agreement = near-linear boundary.
double linear_agreement(const network::TwoLayerNet& net,
                        const std::vector<datasets::Sample>& probe);

using Predictor = std::function<int(const Vec&)>;

// MC classification accuracy with a seed-shared stream so paired gaps use
// common random numbers.
double test_accuracy(const network::TwoLayerNet& net,
                     const datasets::GaussianSpec& spec, std::size_t n,
                     std::uint64_t seed);
double predictor_accuracy(const Predictor& pred, const datasets::GaussianSpec& spec,
                          std::size_t n, std::uint64_t seed);
double accuracy_gap(const network::TwoLayerNet& a, const network::TwoLayerNet& b,
                    const datasets::GaussianSpec& spec, std::size_t n,
                    std::uint64_t seed);

struct PairedAccuracy {
    double acc_a = 0.0, acc_b = 0.0;
    double gap = 0.0;  // acc_a - acc_b over the shared stream
};

// One sample sweep evaluating both nets (common random numbers).
PairedAccuracy paired_accuracy(const network::TwoLayerNet& a,
                               const network::TwoLayerNet& b,
                               const datasets::GaussianSpec& spec, std::size_t n,
                               std::uint64_t seed);

struct DecodedCorrelation {
    double value = 0.0;
    double se = 0.0;
    bool retrain_converged = true;
};

enum class DecodeTarget { core, spurious };

// Freezes all but the last layer, refits the last layer by logistic
// regression on fresh uniform-hypercube samples labeled by the target
// staircase, then measures E[target(x) sign(f(x))]: on the uniform
// distribution for the core target, on the lambda-mixture test distribution
// for the spurious target.
DecodedCorrelation decoded_correlation(const network::MlpNet& net,
                                       const datasets::BooleanTaskSpec& task,
                                       DecodeTarget target, std::size_t n_retrain,
                                       std::size_t n_eval, std::uint64_t seed);

struct Histogram {
    std::vector<double> edges;   // bins + 1
    std::vector<std::size_t> counts;
    std::size_t total = 0;
};

Histogram margin_histogram(const network::TwoLayerNet& net,
                           const std::vector<datasets::Sample>& batch, int bins);

// Limit-direction gate: max over neurons of (max - min recorded angle) within
// the last 10% of steps, compared against 1e-3 rad.
struct ConvergenceReport {
    double max_angular_drift = 0.0;
    bool converged = false;
};

ConvergenceReport angular_convergence(const optim::TrajectoryLog& log,
                                      double tol_rad = 1e-3);

}  // namespace iblab::analysis
