#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "remest/rng.hpp"

namespace remest::nn {

inline constexpr double kStdFloor = 1e-6;

double softplus(double z);
double sigmoid(double z);

// Fully connected feedforward net with rectifier hidden layers. Parameters
// live in one flat vector (per layer: weight matrix column-major, then bias)
// so the optimizer, checkpointing, and finite differences all see the same
// storage.
struct Mlp {
    std::vector<int> sizes;      // n_0 .. n_L
    bool relu_output = false;    // rectify the last affine layer too
    std::vector<double> params;

    int num_layers() const { return static_cast<int>(sizes.size()) - 1; }
    int input_dim() const { return sizes.front(); }
    int output_dim() const { return sizes.back(); }
    size_t param_count() const { return params.size(); }
    size_t layer_offset(int layer) const;

    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

    static Mlp zeros(std::vector<int> sizes, bool relu_output = false);
    // He-uniform weights, zero biases.
    static Mlp random(std::vector<int> sizes, Rng& rng, bool relu_output = false);
};

struct ForwardCache {
    Eigen::MatrixXd input;              // in x B
    std::vector<Eigen::MatrixXd> pre;   // per-layer pre-activations
    std::vector<Eigen::MatrixXd> post;  // per-layer activations
};

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& x,
                              ForwardCache* cache = nullptr);
Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x,
                        ForwardCache* cache = nullptr);

// Reverse-mode gradients; accumulates into grad (callers zero it first) and
// returns the gradient with respect to the input batch.
Eigen::MatrixXd backward_batch(const Mlp& net, const ForwardCache& cache,
                               const Eigen::MatrixXd& output_grad, std::span<double> grad);
Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache,
                         const Eigen::VectorXd& output_grad, std::span<double> grad);

// Gaussian policy head outputs: mean in [-1,1]^d via tanh, positive std via
// softplus with a small floor.
struct ActorOutput {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

// head_pre is the 2d-dimensional linear output; first half drives the mean,
// second half the std.
ActorOutput actor_heads(const Eigen::VectorXd& head_pre);
// dL/dhead_pre from gradients w.r.t. mean and std.
Eigen::VectorXd actor_heads_backward(const Eigen::VectorXd& head_pre, const ActorOutput& out,
                                     const Eigen::VectorXd& mean_grad,
                                     const Eigen::VectorXd& std_grad);

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState(size_t n, double learning_rate) : m(n, 0.0), v(n, 0.0), lr(learning_rate) {}
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::ptrdiff_t worst_index = -1;
};

// Central finite differences against an analytic gradient. loss() must read
// the live contents of params; entries are perturbed in place and restored.
// The error is |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport gradient_check(std::span<double> params, std::span<const double> analytic,
                               const std::function<double()>& loss, double h = 1e-5);

// Hidden layer widths scaled to the system size:
// K = sqrt(N/M) log2(M+1), sizes {ceil(70K), ceil(50K), ceil(30K)}.
std::vector<int> hidden_sizes(int num_sensors, int num_channels);

}  // namespace remest::nn
