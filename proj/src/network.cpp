#include "iblab/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "iblab/csv.hpp"
#include "iblab/special.hpp"
#include "json.hpp"

namespace iblab::network {

double loss_value(LossKind kind, double z) {
    return kind == LossKind::correlation ? z : softplus(z);
}

double loss_slope(LossKind kind, double z) {
    return kind == LossKind::correlation ? 1.0 : sigmoid(z);
}

TwoLayerNet::TwoLayerNet(Matrix weights, std::vector<int> head_signs, double alpha)
    : weights_(std::move(weights)), head_signs_(std::move(head_signs)), alpha_(alpha) {
    if (head_signs_.size() != weights_.rows)
        throw std::invalid_argument("TwoLayerNet: head size != width");
    for (int s : head_signs_)
        if (s != 1 && s != -1)
            throw std::invalid_argument("TwoLayerNet: head signs must be +-1");
    inv_sqrt_m_ = 1.0 / std::sqrt(static_cast<double>(weights_.rows));
}

double TwoLayerNet::forward(const double* x, std::size_t n) const {
    if (n != dim()) throw std::invalid_argument("forward: dimension mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < width(); ++k) {
        const double z = dot(weights_.row(k), x, n);
        if (z >= 0.0) acc += head_signs_[k] * z;
    }
    return acc * inv_sqrt_m_;
}

double TwoLayerNet::forward(const Vec& x) const { return forward(x.data(), x.size()); }

TwoLayerNet init_net(std::size_t m, std::size_t d, double alpha, std::uint64_t seed,
                     HeadMode head_mode) {
    if (m == 0 || d == 0) throw std::invalid_argument("init_net: empty shape");
    if (head_mode == HeadMode::balanced && m % 2 != 0)
        throw std::invalid_argument("init_net: balanced head needs even m");
    RngStream rng(derive_seed(seed, "net-init"));
    Matrix w(m, d);
    const double sd = alpha / std::sqrt(static_cast<double>(d));
    for (auto& v : w.data) v = rng.normal(0.0, sd);
    std::vector<int> head(m);
    if (head_mode == HeadMode::balanced) {
        for (std::size_t k = 0; k < m; ++k) head[k] = (k % 2 == 0) ? 1 : -1;
    } else {
        RngStream hrng(derive_seed(seed, "net-head"));
        for (auto& s : head) s = hrng.rademacher();
    }
    return TwoLayerNet(std::move(w), std::move(head), alpha);
}

std::vector<double> margins(const TwoLayerNet& net,
                            const std::vector<datasets::Sample>& batch) {
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        out[i] = batch[i].y * net.forward(batch[i].x);
    return out;
}

double batch_loss(const TwoLayerNet& net, const std::vector<datasets::Sample>& batch,
                  LossKind loss) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double acc = 0.0;
    for (const auto& s : batch) acc += loss_value(loss, -s.y * net.forward(s.x));
    return acc / static_cast<double>(batch.size());
}

namespace {

Matrix grad_over(const TwoLayerNet& net, const std::vector<datasets::Sample>& batch,
                 const std::size_t* idx, std::size_t n, LossKind loss) {
    if (n == 0) throw std::invalid_argument("empirical_grad: empty batch");
    const std::size_t m = net.width(), d = net.dim();
    const Matrix& w = net.weights();

    // Pass 1: margins -> per-sample loss slopes.
    std::vector<double> coeff(n);  // l'_i * y_i / n
    for (std::size_t ii = 0; ii < n; ++ii) {
        const auto& s = batch[idx ? idx[ii] : ii];
        const double f = net.forward(s.x);
        coeff[ii] = loss_slope(loss, -s.y * f) * s.y / static_cast<double>(n);
    }
    // Pass 2: row k accumulates -a_k sum_i coeff_i x_i over active samples.
    Matrix g(m, d, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        const double* wk = w.row(k);
        double* gk = g.row(k);
        const double ak = net.head(k);
        for (std::size_t ii = 0; ii < n; ++ii) {
            const auto& s = batch[idx ? idx[ii] : ii];
            if (dot(wk, s.x.data(), d) >= 0.0) {
                const double c = -ak * coeff[ii];
                for (std::size_t j = 0; j < d; ++j) gk[j] += c * s.x[j];
            }
        }
    }
    return g;
}

}  // namespace

Matrix empirical_grad(const TwoLayerNet& net,
                      const std::vector<datasets::Sample>& batch, LossKind loss) {
    return grad_over(net, batch, nullptr, batch.size(), loss);
}

Matrix empirical_grad_indices(const TwoLayerNet& net,
                              const std::vector<datasets::Sample>& batch,
                              const std::vector<std::size_t>& idx, LossKind loss) {
    return grad_over(net, batch, idx.data(), idx.size(), loss);
}

PackedBatch PackedBatch::from(const std::vector<datasets::Sample>& batch) {
    if (batch.empty()) throw std::invalid_argument("PackedBatch: empty batch");
    PackedBatch out;
    const std::size_t n = batch.size(), d = batch[0].x.size();
    out.x = Matrix(n, d);
    out.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (batch[i].x.size() != d)
            throw std::invalid_argument("PackedBatch: ragged batch");
        for (std::size_t j = 0; j < d; ++j) out.x(i, j) = batch[i].x[j];
        out.y[i] = batch[i].y;
    }
    return out;
}

Matrix empirical_grad_packed(const TwoLayerNet& net, const PackedBatch& batch,
                             LossKind loss, double* loss_out) {
    const std::size_t m = net.width(), d = net.dim(), n = batch.x.rows;
    if (batch.x.cols != d)
        throw std::invalid_argument("empirical_grad_packed: dimension mismatch");
    const Matrix& w = net.weights();
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));

    // Two sample-outer sweeps keep W (and the gradient accumulator) resident
    // in L1 while each sample's coordinates sit in registers. Inactive
    // neurons contribute an exact +-0.0, which never changes an IEEE sum, so
    // results are bit-identical to the skip-if-inactive reference (and the
    // per-accumulator summation orders match forward()/grad_over exactly).
    const double* X = batch.x.data.data();
    const double* W = w.data.data();
    std::vector<double> sign_d(m), neg_head(m);
    for (std::size_t k = 0; k < m; ++k) {
        sign_d[k] = net.head_signs()[k];
        neg_head[k] = -net.head(k);
    }

    std::vector<double> coeff(n);  // l'_i y_i / n
    double loss_acc = 0.0;
    if (d == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = X[2 * i], x1 = X[2 * i + 1];
            // four independent accumulators break the add-latency chain;
            // the summation order differs from forward() by rounding only
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            std::size_t k = 0;
            for (; k + 4 <= m; k += 4) {
                const double z0 = W[2 * k] * x0 + W[2 * k + 1] * x1;
                const double z1 = W[2 * k + 2] * x0 + W[2 * k + 3] * x1;
                const double z2 = W[2 * k + 4] * x0 + W[2 * k + 5] * x1;
                const double z3 = W[2 * k + 6] * x0 + W[2 * k + 7] * x1;
                a0 += sign_d[k] * (z0 >= 0.0 ? z0 : 0.0);
                a1 += sign_d[k + 1] * (z1 >= 0.0 ? z1 : 0.0);
                a2 += sign_d[k + 2] * (z2 >= 0.0 ? z2 : 0.0);
                a3 += sign_d[k + 3] * (z3 >= 0.0 ? z3 : 0.0);
            }
            double acc = (a0 + a1) + (a2 + a3);
            for (; k < m; ++k) {
                const double z = W[2 * k] * x0 + W[2 * k + 1] * x1;
                acc += sign_d[k] * (z >= 0.0 ? z : 0.0);
            }
            const double margin = batch.y[i] * (acc * inv_sqrt_m);
            loss_acc += loss_value(loss, -margin);
            coeff[i] = loss_slope(loss, -margin) * batch.y[i] / static_cast<double>(n);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = batch.x.row(i);
            double acc = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double z = dot(w.row(k), xi, d);
                acc += sign_d[k] * (z >= 0.0 ? z : 0.0);
            }
            const double margin = batch.y[i] * (acc * inv_sqrt_m);
            loss_acc += loss_value(loss, -margin);
            coeff[i] = loss_slope(loss, -margin) * batch.y[i] / static_cast<double>(n);
        }
    }
    if (loss_out) *loss_out = loss_acc / static_cast<double>(n);

    Matrix g(m, d, 0.0);
    double* G = g.data.data();
    if (d == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = X[2 * i], x1 = X[2 * i + 1];
            const double ci = coeff[i];
            for (std::size_t k = 0; k < m; ++k) {
                const double z = W[2 * k] * x0 + W[2 * k + 1] * x1;
                const double ind = z >= 0.0 ? 1.0 : 0.0;  // branchless gate
                const double c = neg_head[k] * ci * ind;
                G[2 * k] += c * x0;
                G[2 * k + 1] += c * x1;
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = batch.x.row(i);
            const double ci = coeff[i];
            for (std::size_t k = 0; k < m; ++k) {
                if (dot(w.row(k), xi, d) >= 0.0) {
                    const double c = neg_head[k] * ci;
                    double* gk = g.row(k);
                    for (std::size_t j = 0; j < d; ++j) gk[j] += c * xi[j];
                }
            }
        }
    }
    return g;
}

std::size_t MlpNet::n_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        n += weights[l].data.size() + biases[l].size();
    return n;
}

namespace {
inline double act_fwd(Activation a, double slope, double z) {
    if (z >= 0.0) return z;
    return a == Activation::relu ? 0.0 : slope * z;
}
inline double act_slope(Activation a, double slope, double z) {
    if (z >= 0.0) return 1.0;
    return a == Activation::relu ? 0.0 : slope;
}
}  // namespace

double MlpNet::forward(const Vec& x) const {
    Vec h = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const Matrix& W = weights[l];
        Vec z(W.rows);
        for (std::size_t r = 0; r < W.rows; ++r)
            z[r] = dot(W.row(r), h.data(), W.cols) + biases[l][r];
        if (l + 1 < weights.size())
            for (auto& v : z) v = act_fwd(act, slope, v);
        h = std::move(z);
    }
    if (h.size() != 1) throw std::logic_error("MlpNet::forward: scalar output expected");
    return h[0];
}

Vec MlpNet::penultimate_features(const Vec& x) const {
    Vec h = x;
    for (std::size_t l = 0; l + 1 < weights.size(); ++l) {
        const Matrix& W = weights[l];
        Vec z(W.rows);
        for (std::size_t r = 0; r < W.rows; ++r)
            z[r] = dot(W.row(r), h.data(), W.cols) + biases[l][r];
        for (auto& v : z) v = act_fwd(act, slope, v);
        h = std::move(z);
    }
    return h;
}

Vec MlpNet::flatten() const {
    Vec flat;
    flat.reserve(n_params());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.insert(flat.end(), weights[l].data.begin(), weights[l].data.end());
        flat.insert(flat.end(), biases[l].begin(), biases[l].end());
    }
    return flat;
}

void MlpNet::unflatten(const Vec& flat) {
    std::size_t p = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (auto& v : weights[l].data) v = flat[p++];
        for (auto& v : biases[l]) v = flat[p++];
    }
    if (p != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

MlpNet init_mlp(const std::vector<std::size_t>& dims, Activation act, double slope,
                double alpha, std::uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("init_mlp: need >= 2 dims");
    MlpNet net;
    net.act = act;
    net.slope = slope;
    RngStream rng(derive_seed(seed, "mlp-init"));
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix W(dims[l + 1], dims[l]);
        const double sd = alpha * std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (auto& v : W.data) v = rng.normal(0.0, sd);
        net.weights.push_back(std::move(W));
        net.biases.emplace_back(dims[l + 1], 0.0);
    }
    return net;
}

double mlp_batch_loss(const MlpNet& net, const std::vector<Vec>& xs,
                      const std::vector<int>& ys) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("mlp_batch_loss: bad batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        acc += softplus(-ys[i] * net.forward(xs[i]));
    return acc / static_cast<double>(xs.size());
}

Vec mlp_batch_grad(const MlpNet& net, const std::vector<Vec>& xs,
                   const std::vector<int>& ys, double* loss_out) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("mlp_batch_grad: bad batch");
    const std::size_t L = net.n_layers();
    Vec grad(net.n_params(), 0.0);

    // Flat offsets per layer, matching flatten().
    std::vector<std::size_t> w_off(L), b_off(L);
    std::size_t p = 0;
    for (std::size_t l = 0; l < L; ++l) {
        w_off[l] = p;
        p += net.weights[l].data.size();
        b_off[l] = p;
        p += net.biases[l].size();
    }

    double loss_acc = 0.0;
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    std::vector<Vec> pre(L), post(L + 1);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        post[0] = xs[i];
        for (std::size_t l = 0; l < L; ++l) {
            const Matrix& W = net.weights[l];
            pre[l].assign(W.rows, 0.0);
            for (std::size_t r = 0; r < W.rows; ++r)
                pre[l][r] = dot(W.row(r), post[l].data(), W.cols) + net.biases[l][r];
            post[l + 1] = pre[l];
            if (l + 1 < L)
                for (auto& v : post[l + 1]) v = act_fwd(net.act, net.slope, v);
        }
        const double f = post[L][0];
        const double z = -ys[i] * f;
        loss_acc += softplus(z);
        // dl/df = -y sigmoid(-y f)
        Vec delta{-ys[i] * sigmoid(z) * inv_n};
        for (std::size_t l = L; l-- > 0;) {
            const Matrix& W = net.weights[l];
            for (std::size_t r = 0; r < W.rows; ++r) {
                const double dr = delta[r];
                if (dr == 0.0) continue;
                double* gw = grad.data() + w_off[l] + r * W.cols;
                const double* in = post[l].data();
                for (std::size_t c = 0; c < W.cols; ++c) gw[c] += dr * in[c];
                grad[b_off[l] + r] += dr;
            }
            if (l == 0) break;
            Vec next(W.cols, 0.0);
            for (std::size_t r = 0; r < W.rows; ++r) {
                const double dr = delta[r];
                if (dr == 0.0) continue;
                const double* wr = W.row(r);
                for (std::size_t c = 0; c < W.cols; ++c) next[c] += dr * wr[c];
            }
            for (std::size_t c = 0; c < W.cols; ++c)
                next[c] *= act_slope(net.act, net.slope, pre[l - 1][c]);
            delta = std::move(next);
        }
    }
    if (loss_out) *loss_out = loss_acc * inv_n;
    return grad;
}

void save_checkpoint(const TwoLayerNet& net, std::uint64_t seed,
                     const std::string& dir, const std::string& stem) {
    {
        CsvWriter csv(dir + "/" + stem + ".csv");
        for (std::size_t k = 0; k < net.width(); ++k) {
            for (std::size_t j = 0; j < net.dim(); ++j)
                csv.field(net.weights()(k, j));
            csv.endrow();
        }
    }
    nlohmann::json h;
    h["m"] = net.width();
    h["d"] = net.dim();
    h["alpha"] = net.alpha();
    h["seed"] = seed;
    h["head_signs"] = net.head_signs();
    std::ofstream out(dir + "/" + stem + ".json");
    if (!out) throw std::runtime_error("cannot write checkpoint header");
    out << h.dump(2) << "\n";
}

TwoLayerNet load_checkpoint(const std::string& dir, const std::string& stem) {
    std::ifstream in(dir + "/" + stem + ".json");
    if (!in) throw std::runtime_error("cannot read checkpoint header");
    nlohmann::json h = nlohmann::json::parse(in);
    const std::size_t m = h.at("m").get<std::size_t>();
    const std::size_t d = h.at("d").get<std::size_t>();
    auto rows = read_csv(dir + "/" + stem + ".csv");
    if (rows.size() != m) throw std::runtime_error("checkpoint: row count mismatch");
    Matrix w(m, d);
    for (std::size_t k = 0; k < m; ++k) {
        if (rows[k].size() != d)
            throw std::runtime_error("checkpoint: column count mismatch");
        for (std::size_t j = 0; j < d; ++j) w(k, j) = std::stod(rows[k][j]);
    }
    return TwoLayerNet(std::move(w), h.at("head_signs").get<std::vector<int>>(),
                       h.at("alpha").get<double>());
}

}  // namespace iblab::network
