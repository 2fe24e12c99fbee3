#include "iblab/optim.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "iblab/csv.hpp"

namespace iblab::optim {

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::gd: return "gd";
        case Algorithm::signgd: return "signgd";
        case Algorithm::adam: return "adam";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "gd") return Algorithm::gd;
    if (name == "signgd") return Algorithm::signgd;
    if (name == "adam") return Algorithm::adam;
    throw std::invalid_argument("unknown algorithm: " + name);
}

void StepSpec::validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("StepSpec: eta must be > 0");
    if (algorithm == Algorithm::adam) {
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw std::invalid_argument("StepSpec: betas must be in [0,1)");
        if (epsilon < 0.0) throw std::invalid_argument("StepSpec: epsilon < 0");
    }
}

void gd_step(Matrix& w, const Matrix& g, double eta) {
    if (!w.same_shape(g)) throw std::invalid_argument("gd_step: shape mismatch");
    for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] -= eta * g.data[i];
}

void signgd_step(Matrix& w, const Matrix& g, double eta) {
    if (!w.same_shape(g)) throw std::invalid_argument("signgd_step: shape mismatch");
    for (std::size_t i = 0; i < w.data.size(); ++i) {
        const double gi = g.data[i];
        if (gi > 0.0)
            w.data[i] -= eta;
        else if (gi < 0.0)
            w.data[i] += eta;
    }
}

AdamState::AdamState(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw std::invalid_argument("AdamState: betas must be in [0,1)");
    if (eps < 0.0) throw std::invalid_argument("AdamState: eps < 0");
}

void AdamState::step(double* w, const double* g, std::size_t n, double eta) {
    if (n != m_.size()) throw std::invalid_argument("AdamState: size mismatch");
    s1_ = beta1_ * s1_ + 1.0;
    s2_ = beta2_ * s2_ + 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        m_[i] = beta1_ * m_[i] + g[i];
        v_[i] = beta2_ * v_[i] + g[i] * g[i];
        const double vhat = v_[i] / s2_ + eps_;
        if (vhat > 0.0) {
            // |mhat|/sqrt(vhat) computed as sqrt(mhat^2/vhat): same value, and
            // the squares cancel bitwise on one-step histories, which keeps
            // the first step identical to signGD.
            const double mhat = m_[i] / s1_;
            w[i] -= std::copysign(eta * std::sqrt(mhat * mhat / vhat), mhat);
        }
        // vhat == 0: zero-gradient history (or g*g underflow); no movement.
    }
    ++t_;
}

void adam_step(AdamState& state, Matrix& w, const Matrix& g, double eta) {
    if (!w.same_shape(g)) throw std::invalid_argument("adam_step: shape mismatch");
    state.step(w.data.data(), g.data.data(), w.data.size(), eta);
}

Optimizer::Optimizer(StepSpec spec, std::size_t n_params) : spec_(spec) {
    spec_.validate();
    if (spec_.algorithm == Algorithm::adam)
        adam_ = AdamState(n_params, spec_.beta1, spec_.beta2, spec_.epsilon);
}

void Optimizer::step(Matrix& w, const Matrix& g) {
    switch (spec_.algorithm) {
        case Algorithm::gd: gd_step(w, g, spec_.eta); break;
        case Algorithm::signgd: signgd_step(w, g, spec_.eta); break;
        case Algorithm::adam: adam_step(adam_, w, g, spec_.eta); break;
    }
}

void TrajectoryLog::dump_csv(const std::string& path) const {
    CsvWriter csv(path);
    csv.header({"step", "loss", "neuron_id", "angle_rad", "norm"});
    for (const auto& r : records) {
        if (r.angles.empty()) {
            csv.field(r.step).field(r.loss).field(-1).field(0.0).field(0.0);
            csv.endrow();
            continue;
        }
        for (std::size_t k = 0; k < r.angles.size(); ++k) {
            csv.field(r.step).field(r.loss);
            csv.field(static_cast<long long>(k));
            csv.field(r.angles[k]).field(r.norms[k]);
            csv.endrow();
        }
    }
}

namespace {

void record_state(TrajectoryLog& log, long long step, double loss,
                  const network::TwoLayerNet& net, bool record_neurons) {
    StepRecord rec;
    rec.step = step;
    rec.loss = loss;
    if (record_neurons) {
        const std::size_t m = net.width();
        rec.angles.resize(m);
        rec.norms.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            const double* wk = net.weights().row(k);
            rec.angles[k] = std::atan2(wk[1], wk[0]);
            rec.norms[k] = norm2(wk, net.dim());
        }
    }
    log.records.push_back(std::move(rec));
}

}  // namespace

TrajectoryLog train(network::TwoLayerNet& net, const StepSpec& spec,
                    const GradFn& grad_fn, const LossFn& loss_fn,
                    const TrainOptions& opts) {
    if (opts.steps < 0) throw std::invalid_argument("train: steps < 0");
    if (opts.record_every < 1) throw std::invalid_argument("train: record_every < 1");
    spec.validate();

    const std::vector<int> head_before = net.head_signs();
    Optimizer optimizer(spec, net.weights().data.size());
    RngStream stream(derive_seed(opts.seed, "train-minibatch"));

    TrajectoryLog log;
    record_state(log, 0, loss_fn(net), net, opts.record_neurons);
    if (opts.on_record) opts.on_record(0, net);

    log.steps_run = 0;
    if (opts.stop_below_loss && log.records.front().loss <= *opts.stop_below_loss) {
        if (net.head_signs() != head_before)
            throw std::logic_error("train: fixed head was mutated");
        return log;
    }
    for (long long t = 1; t <= opts.steps; ++t) {
        const Matrix g = grad_fn(net, stream);
        optimizer.step(net.weights(), g);
        log.steps_run = t;
        if (max_abs(net.weights()) > opts.divergence_cap) {
            log.diverged = true;
            record_state(log, t, loss_fn(net), net, opts.record_neurons);
            throw std::runtime_error("train: divergence guard tripped at step " +
                                     std::to_string(t));
        }
        if (t % opts.record_every == 0 || t == opts.steps) {
            const double loss = loss_fn(net);
            record_state(log, t, loss, net, opts.record_neurons);
            if (opts.on_record) opts.on_record(t, net);
            if (opts.stop_below_loss && loss <= *opts.stop_below_loss) break;
        }
    }
    if (net.head_signs() != head_before)
        throw std::logic_error("train: fixed head was mutated");
    return log;
}

GradFn full_batch_source(const std::vector<datasets::Sample>& batch,
                         network::LossKind loss) {
    auto packed = std::make_shared<network::PackedBatch>(
        network::PackedBatch::from(batch));
    return [packed, loss](const network::TwoLayerNet& net, RngStream&) {
        return network::empirical_grad_packed(net, *packed, loss);
    };
}

GradFn minibatch_source(const std::vector<datasets::Sample>& batch,
                        std::size_t batch_size, network::LossKind loss) {
    if (batch_size == 0) throw std::invalid_argument("minibatch_source: empty batch");
    return [&batch, batch_size, loss](const network::TwoLayerNet& net, RngStream& rng) {
        std::vector<std::size_t> idx(batch_size);
        for (auto& i : idx) i = rng.uniform_index(batch.size());  // with replacement
        return network::empirical_grad_indices(net, batch, idx, loss);
    };
}

}  // namespace iblab::optim
