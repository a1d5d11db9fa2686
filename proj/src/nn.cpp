#include "remest/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace remest::nn {

double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

size_t Mlp::layer_offset(int layer) const {
    size_t off = 0;
    for (int k = 0; k < layer; ++k)
        off += static_cast<size_t>(sizes[k + 1]) * sizes[k] + sizes[k + 1];
    return off;
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
    return {params.data() + layer_offset(layer), sizes[layer + 1], sizes[layer]};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
    return {params.data() + layer_offset(layer), sizes[layer + 1], sizes[layer]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
    const size_t off = layer_offset(layer) + static_cast<size_t>(sizes[layer + 1]) * sizes[layer];
    return {params.data() + off, sizes[layer + 1]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
    const size_t off = layer_offset(layer) + static_cast<size_t>(sizes[layer + 1]) * sizes[layer];
    return {params.data() + off, sizes[layer + 1]};
}

Mlp Mlp::zeros(std::vector<int> sizes, bool relu_output) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least input and output sizes");
    Mlp net;
    net.sizes = std::move(sizes);
    net.relu_output = relu_output;
    net.params.assign(net.layer_offset(net.num_layers()), 0.0);
    return net;
}

Mlp Mlp::random(std::vector<int> sizes, Rng& rng, bool relu_output) {
    Mlp net = zeros(std::move(sizes), relu_output);
    for (int k = 0; k < net.num_layers(); ++k) {
        const double limit = std::sqrt(6.0 / net.sizes[k]);
        auto w = net.weight(k);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    }
    return net;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& x, ForwardCache* cache) {
    if (x.rows() != net.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    const int layers = net.num_layers();
    if (cache) {
        cache->input = x;
        cache->pre.assign(layers, {});
        cache->post.assign(layers, {});
    }
    Eigen::MatrixXd act = x;
    for (int k = 0; k < layers; ++k) {
        Eigen::MatrixXd pre = (net.weight(k) * act).colwise() + net.bias(k);
        const bool rectify = k + 1 < layers || net.relu_output;
        Eigen::MatrixXd post = rectify ? pre.cwiseMax(0.0) : pre;
        if (cache) {
            cache->pre[k] = pre;
            cache->post[k] = post;
        }
        act = std::move(post);
    }
    return act;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& x, ForwardCache* cache) {
    return forward_batch(net, x, cache).col(0);
}

Eigen::MatrixXd backward_batch(const Mlp& net, const ForwardCache& cache,
                               const Eigen::MatrixXd& output_grad, std::span<double> grad) {
    if (grad.size() != net.param_count())
        throw std::invalid_argument("backward: gradient buffer size mismatch");
    if (cache.pre.size() != static_cast<size_t>(net.num_layers()))
        throw std::invalid_argument("backward: stale or missing forward cache");

    const int layers = net.num_layers();
    Eigen::MatrixXd g = output_grad;
    for (int k = layers - 1; k >= 0; --k) {
        const bool rectify = k + 1 < layers || net.relu_output;
        if (rectify)
            g = g.cwiseProduct((cache.pre[k].array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd& prev = k == 0 ? cache.input : cache.post[k - 1];

        const size_t off = net.layer_offset(k);
        Eigen::Map<Eigen::MatrixXd> dw(grad.data() + off, net.sizes[k + 1], net.sizes[k]);
        dw.noalias() += g * prev.transpose();
        Eigen::Map<Eigen::VectorXd> db(
            grad.data() + off + static_cast<size_t>(net.sizes[k + 1]) * net.sizes[k],
            net.sizes[k + 1]);
        db.noalias() += g.rowwise().sum();

        if (k > 0) g = net.weight(k).transpose() * g;
    }
    return net.weight(0).transpose() * g;
}

Eigen::VectorXd backward(const Mlp& net, const ForwardCache& cache,
                         const Eigen::VectorXd& output_grad, std::span<double> grad) {
    return backward_batch(net, cache, output_grad, grad).col(0);
}

ActorOutput actor_heads(const Eigen::VectorXd& head_pre) {
    if (head_pre.size() % 2 != 0)
        throw std::invalid_argument("actor_heads: output size must be even");
    const Eigen::Index d = head_pre.size() / 2;
    ActorOutput out;
    out.mean = head_pre.head(d).array().tanh();
    out.std.resize(d);
    for (Eigen::Index i = 0; i < d; ++i)
        out.std(i) = std::max(softplus(head_pre(d + i)), kStdFloor);
    return out;
}

Eigen::VectorXd actor_heads_backward(const Eigen::VectorXd& head_pre, const ActorOutput& out,
                                     const Eigen::VectorXd& mean_grad,
                                     const Eigen::VectorXd& std_grad) {
    const Eigen::Index d = head_pre.size() / 2;
    Eigen::VectorXd g(head_pre.size());
    for (Eigen::Index i = 0; i < d; ++i)
        g(i) = mean_grad(i) * (1.0 - out.mean(i) * out.mean(i));
    for (Eigen::Index i = 0; i < d; ++i) {
        const bool floored = softplus(head_pre(d + i)) < kStdFloor;
        g(d + i) = floored ? 0.0 : std_grad(i) * sigmoid(head_pre(d + i));
    }
    return g;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

GradCheckReport gradient_check(std::span<double> params, std::span<const double> analytic,
                               const std::function<double()>& loss, double h) {
    if (params.size() != analytic.size())
        throw std::invalid_argument("gradient_check: size mismatch");
    GradCheckReport report;
    for (size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double up = loss();
        params[i] = saved - h;
        const double down = loss();
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        const double err = std::abs(analytic[i] - numeric) / denom;
        if (err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst_index = static_cast<std::ptrdiff_t>(i);
        }
    }
    return report;
}

std::vector<int> hidden_sizes(int num_sensors, int num_channels) {
    const double k = std::sqrt(static_cast<double>(num_sensors) / num_channels) *
                     std::log2(static_cast<double>(num_channels) + 1.0);
    return {static_cast<int>(std::ceil(70.0 * k)), static_cast<int>(std::ceil(50.0 * k)),
            static_cast<int>(std::ceil(30.0 * k))};
}

}  // namespace remest::nn
