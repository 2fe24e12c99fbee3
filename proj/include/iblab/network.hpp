#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iblab/datasets.hpp"
#include "iblab/matrix.hpp"

namespace iblab::network {

enum class LossKind { correlation, logistic };

// l(z) applied to z = -y f(W;x). Correlation: l(z) = z. Logistic: log(1+e^z).
double loss_value(LossKind kind, double z);
// l'(z): 1 for correlation, sigmoid(z) for logistic (overflow-free).
double loss_slope(LossKind kind, double z);

enum class HeadMode { random, balanced };

// f(W;x) = sum_k a_k max(0, w_k.x) with the head a fixed at +-1/sqrt(m).
// Optimizers mutate W only; head() is read-only by construction.
class TwoLayerNet {
  public:
    TwoLayerNet() = default;
    TwoLayerNet(Matrix weights, std::vector<int> head_signs, double alpha);

    std::size_t width() const { return weights_.rows; }
    std::size_t dim() const { return weights_.cols; }
    double alpha() const { return alpha_; }

    Matrix& weights() { return weights_; }
    const Matrix& weights() const { return weights_; }

    const std::vector<int>& head_signs() const { return head_signs_; }
    // a_k = sign_k / sqrt(m).
    double head(std::size_t k) const { return head_signs_[k] * inv_sqrt_m_; }

    double forward(const Vec& x) const;
    double forward(const double* x, std::size_t n) const;

  private:
    Matrix weights_;
    std::vector<int> head_signs_;
    double inv_sqrt_m_ = 1.0;
    double alpha_ = 0.0;
};

// Rows i.i.d. N(0, (alpha/sqrt(d))^2 I). Balanced head needs m even and puts
// exactly m/2 positive signs (fixed interleaved pattern, so it is
// deterministic given the flag alone).
TwoLayerNet init_net(std::size_t m, std::size_t d, double alpha, std::uint64_t seed,
                     HeadMode head_mode = HeadMode::random);

// y_i f(W; x_i) per sample.
std::vector<double> margins(const TwoLayerNet& net,
                            const std::vector<datasets::Sample>& batch);

// Average loss (1/n) sum l(-y_i f(W;x_i)).
double batch_loss(const TwoLayerNet& net, const std::vector<datasets::Sample>& batch,
                  LossKind loss);

// Full-batch gradient. Row k = -(1/n) sum_i l'_i a_k 1[w_k.x_i >= 0] y_i x_i.
// Summation order is fixed (sample index order) for reproducibility.
Matrix empirical_grad(const TwoLayerNet& net,
                      const std::vector<datasets::Sample>& batch, LossKind loss);

// Gradient restricted to an index subset (minibatch view over a fixed set).
Matrix empirical_grad_indices(const TwoLayerNet& net,
                              const std::vector<datasets::Sample>& batch,
                              const std::vector<std::size_t>& idx, LossKind loss);

// Contiguous batch layout for the hot full-batch path. Produces bit-identical
// gradients/losses to the Sample-based routines (same summation order).
struct PackedBatch {
    Matrix x;            // n rows, d cols
    std::vector<int> y;  // labels
    static PackedBatch from(const std::vector<datasets::Sample>& batch);
};

// Fused full-batch gradient + loss: one pass computes margins and the
// activation mask, the second accumulates rows from the mask.
Matrix empirical_grad_packed(const TwoLayerNet& net, const PackedBatch& batch,
                             LossKind loss, double* loss_out = nullptr);

enum class Activation { relu, leaky_relu };

// Small fully-connected net for the Boolean experiments. All layers train.
struct MlpNet {
    std::vector<Matrix> weights;  // layer l: out x in
    std::vector<Vec> biases;
    Activation act = Activation::leaky_relu;
    double slope = 0.01;  // leaky slope, recorded exactly

    std::size_t n_layers() const { return weights.size(); }
    std::size_t n_params() const;

    double forward(const Vec& x) const;
    // Activations of the last hidden layer (input to the final linear map).
    Vec penultimate_features(const Vec& x) const;

    // Flat parameter vector in (W0, b0, W1, b1, ...) order.
    Vec flatten() const;
    void unflatten(const Vec& flat);
};

// dims = {in, h1, ..., out}; weights N(0, (alpha*sqrt(2/fan_in))^2), biases 0.
MlpNet init_mlp(const std::vector<std::size_t>& dims, Activation act, double slope,
                double alpha, std::uint64_t seed);

// BCE loss and flat gradient over {+-1}-labeled samples; logits f(x),
// l = softplus(-y f). Gradient layout matches MlpNet::flatten().
double mlp_batch_loss(const MlpNet& net, const std::vector<Vec>& xs,
                      const std::vector<int>& ys);
Vec mlp_batch_grad(const MlpNet& net, const std::vector<Vec>& xs,
                   const std::vector<int>& ys, double* loss_out = nullptr);

// Checkpoint: CSV weight matrix + JSON header (m, d, alpha, seed, head signs).
void save_checkpoint(const TwoLayerNet& net, std::uint64_t seed,
                     const std::string& dir, const std::string& stem);
TwoLayerNet load_checkpoint(const std::string& dir, const std::string& stem);

}  // namespace iblab::network
