#include "remest/channel.hpp"

#include <stdexcept>

namespace remest::channel {

namespace {

// Exponential spacings normalized to the simplex (Dirichlet(1,...,1)).
Eigen::VectorXd uniform_simplex_row(int n, Rng& rng) {
    Eigen::VectorXd row(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        row(i) = -std::log(1.0 - rng.uniform());
        sum += row(i);
    }
    row /= sum;
    return row;
}

// Strong connectivity of the support graph; a reducible chain has no unique
// stationary distribution.
bool strongly_connected(const Eigen::MatrixXd& t) {
    const int n = static_cast<int>(t.rows());
    auto reaches_all = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                const double w = forward ? t(u, v) : t(v, u);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        for (int v = 0; v < n; ++v)
            if (!seen[v]) return false;
        return true;
    };
    return reaches_all(true) && reaches_all(false);
}

}  // namespace

Eigen::VectorXd default_gain_levels() {
    Eigen::VectorXd levels(8);
    for (int i = 0; i < 8; ++i) levels(i) = std::pow(10.0, -8 + i);
    return levels;
}

ChannelModel generate_random_channel_model(int num_sensors, int num_channels,
                                           const Eigen::VectorXd& levels,
                                           double persistence, Rng& rng) {
    if (levels.size() < 2)
        throw std::invalid_argument("channel model: need at least 2 gain levels");
    if (persistence < 0.0 || persistence >= 1.0)
        throw std::invalid_argument("channel model: persistence must be in [0, 1)");
    for (int i = 0; i + 1 < levels.size(); ++i)
        if (levels(i) <= 0.0 || levels(i) >= levels(i + 1))
            throw std::invalid_argument("channel model: levels must be positive and strictly increasing");

    const int h = static_cast<int>(levels.size());
    ChannelModel model;
    model.levels = levels;
    model.num_sensors = num_sensors;
    model.num_channels = num_channels;
    model.transition.reserve(static_cast<size_t>(num_sensors) * num_channels);
    for (int link = 0; link < num_sensors * num_channels; ++link) {
        Eigen::MatrixXd t(h, h);
        for (int row = 0; row < h; ++row) {
            Eigen::VectorXd r = uniform_simplex_row(h, rng);
            for (int col = 0; col < h; ++col)
                t(row, col) = (1.0 - persistence) * r(col) + (row == col ? persistence : 0.0);
        }
        model.transition.push_back(std::move(t));
    }
    return model;
}

ChannelState step_channel(const ChannelModel& model, const ChannelState& state, Rng& rng) {
    ChannelState next = state;
    for (int n = 0; n < model.num_sensors; ++n) {
        for (int m = 0; m < model.num_channels; ++m) {
            const Eigen::MatrixXd& t = model.link_transition(n, m);
            const int current = state.gains(m, n);
            const Eigen::VectorXd row = t.row(current);
            next.gains(m, n) = rng.categorical({row.data(), static_cast<size_t>(row.size())});
        }
    }
    return next;
}

StationaryResult stationary_distribution(const Eigen::MatrixXd& transition,
                                         double tol, long max_iter) {
    const int n = static_cast<int>(transition.rows());
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
    if (!strongly_connected(transition)) return {uniform, false};

    Eigen::RowVectorXd pi = uniform.transpose();
    for (long it = 0; it < max_iter; ++it) {
        Eigen::RowVectorXd next = pi * transition;
        next /= next.sum();
        const double change = (next - pi).cwiseAbs().sum();
        pi = next;
        if (change <= tol) return {pi.transpose(), true};
    }
    return {uniform, false};  // periodic chain: no convergence
}

}  // namespace remest::channel
