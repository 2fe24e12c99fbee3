#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iblab/matrix.hpp"
#include "iblab/network.hpp"

namespace iblab::optim {

enum class Algorithm { gd, signgd, adam };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct StepSpec {
    Algorithm algorithm = Algorithm::gd;
    double eta = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 0.0;  // 0 for theory presets, 1e-8 for Boolean presets

    void validate() const;
};

// W' = W - eta G.
void gd_step(Matrix& w, const Matrix& g, double eta);

// W'_kj = W_kj - eta sign(G_kj), sign(0) = 0 (zero-gradient coordinates do
// not move; any nonzero choice injects drift on symmetric configurations).
void signgd_step(Matrix& w, const Matrix& g, double eta);

// Adam state over a flat parameter array. Internally the moments are kept as
// raw geometric sums M = sum_tau beta1^tau G_(t-tau) (same for V) with scalar
// normalizers sum_tau beta^tau, so the bias-corrected estimates
//   M_hat = M / sum beta1^tau = M_ema_(t+1) / (1 - beta1^(t+1))
// come out exactly, and the first step reproduces signGD bitwise.
class AdamState {
  public:
    AdamState() = default;
    AdamState(std::size_t n, double beta1, double beta2, double eps);

    // One update over flat views: w -= eta * M_hat / sqrt(V_hat + eps).
    // A coordinate with V_hat + eps == 0 takes a zero update (the eps -> 0
    // limit along a zero-gradient history).
    void step(double* w, const double* g, std::size_t n, double eta);

    long long t() const { return t_; }
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }
    double epsilon() const { return eps_; }

    // Spec-form accessors: (1-beta)-weighted EMA moments M_(t+1), V_(t+1) and
    // their bias-corrected versions at the last completed step.
    double first_moment_ema(std::size_t i) const { return (1.0 - beta1_) * m_[i]; }
    double second_moment_ema(std::size_t i) const { return (1.0 - beta2_) * v_[i]; }
    double first_moment_hat(std::size_t i) const { return m_[i] / s1_; }
    double second_moment_hat(std::size_t i) const { return v_[i] / s2_; }

  private:
    Vec m_, v_;
    double s1_ = 0.0, s2_ = 0.0;  // sum of beta^tau weights
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 0.0;
    long long t_ = 0;
};

// Matrix-shaped wrapper: (state', W') from (state, W, G).
void adam_step(AdamState& state, Matrix& w, const Matrix& g, double eta);

// Uniform stepper over the three rules, acting on a TwoLayerNet's weights.
class Optimizer {
  public:
    Optimizer(StepSpec spec, std::size_t n_params);
    void step(Matrix& w, const Matrix& g);
    const StepSpec& spec() const { return spec_; }
    AdamState& adam() { return adam_; }

  private:
    StepSpec spec_;
    AdamState adam_;
};

// Per-step record of the quantities the analysis module consumes.
struct StepRecord {
    long long step = 0;
    double loss = 0.0;
    std::vector<double> angles;  // 2-D angle of each neuron, radians
    std::vector<double> norms;
};

struct TrajectoryLog {
    std::vector<StepRecord> records;
    long long steps_run = 0;
    bool diverged = false;

    const StepRecord& last() const { return records.back(); }
    void dump_csv(const std::string& path) const;  // step,loss,neuron_id,angle_rad,norm
};

// Gradient source for one step: receives the net and a stream for minibatch
// draws; returns the full m x d gradient.
using GradFn = std::function<Matrix(const network::TwoLayerNet&, RngStream&)>;
// Loss used for logging only.
using LossFn = std::function<double(const network::TwoLayerNet&)>;
using Callback = std::function<void(long long, const network::TwoLayerNet&)>;

struct TrainOptions {
    long long steps = 1;
    long long record_every = 1;
    bool record_neurons = true;
    double divergence_cap = 1e12;  // abort when any |W| entry exceeds this
    std::uint64_t seed = 0;        // minibatch stream seed
    Callback on_record;            // optional
    std::optional<double> stop_below_loss;  // early stop, checked on record
};

// Runs T update steps; records at step 0, every record_every steps, and at
// the final step. steps == 0 is the record-only mode (initial snapshot).
// Deterministic under a fixed (net, opts.seed). Throws on divergence.
TrajectoryLog train(network::TwoLayerNet& net, const StepSpec& spec,
                    const GradFn& grad_fn, const LossFn& loss_fn,
                    const TrainOptions& opts);

// Ready-made gradient sources.
GradFn full_batch_source(const std::vector<datasets::Sample>& batch,
                         network::LossKind loss);
GradFn minibatch_source(const std::vector<datasets::Sample>& batch,
                        std::size_t batch_size, network::LossKind loss);

}  // namespace iblab::optim
