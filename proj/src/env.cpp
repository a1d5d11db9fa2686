#include "remest/env.hpp"

#include <cmath>
#include <stdexcept>

namespace remest::env {

Environment::Environment(EnvConfig cfg, uint64_t seed)
    : cfg_(std::move(cfg)),
      channel_rng_(derive_seed(seed, 0x633A)),
      reception_rng_(derive_seed(seed, 0x5A1E)) {
    const int n = cfg_.num_sensors;
    const int m = cfg_.num_channels;
    if (n <= m || m < 1)
        throw std::invalid_argument("Environment: requires N > M >= 1");
    if (static_cast<int>(cfg_.plants.size()) != n ||
        static_cast<int>(cfg_.covariances.size()) != n)
        throw std::invalid_argument("Environment: need one plant and covariance per sensor");
    if (cfg_.channel_model.num_sensors != n || cfg_.channel_model.num_channels != m)
        throw std::invalid_argument("Environment: channel model dimensions mismatch");
    if (cfg_.aoi_cap < 1) throw std::invalid_argument("Environment: aoi_cap must be >= 1");
    if (cfg_.p_max <= 0.0) throw std::invalid_argument("Environment: p_max must be > 0");

    cost_table_.resize(n);
    for (int i = 0; i < n; ++i) {
        cost_table_[i].resize(cfg_.aoi_cap);
        // cost(aoi+1) = Tr(A P A^T) + Tr(W) applied incrementally on the covariance
        Eigen::MatrixXd p = cfg_.covariances[i].p_bar;
        cost_table_[i][0] = p.trace();
        for (int aoi = 2; aoi <= cfg_.aoi_cap; ++aoi) {
            p = cfg_.plants[i].A * p * cfg_.plants[i].A.transpose() + cfg_.plants[i].W;
            cost_table_[i][aoi - 1] = p.trace();
        }
        cost_floor_ += cost_table_[i][0];
    }

    stationary_.reserve(static_cast<size_t>(n) * m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            stationary_.push_back(
                channel::stationary_distribution(cfg_.channel_model.link_transition(i, j)).pi);

    const double lo = std::log10(cfg_.channel_model.levels(0));
    const double hi = std::log10(cfg_.channel_model.levels(cfg_.channel_model.num_levels() - 1));
    gain_log_center_ = 0.5 * (lo + hi);
    gain_log_halfspan_ = hi > lo ? 0.5 * (hi - lo) : 1.0;

    state_.channel.gains = Eigen::MatrixXi::Zero(m, n);
    state_.aoi.assign(n, 1);
    reset();
}

const EnvState& Environment::reset() {
    const int n = cfg_.num_sensors;
    const int m = cfg_.num_channels;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const Eigen::VectorXd& pi = stationary_[static_cast<size_t>(i) * m + j];
            state_.channel.gains(j, i) =
                channel_rng_.categorical({pi.data(), static_cast<size_t>(pi.size())});
        }
    }
    state_.aoi.assign(n, 1);
    return state_;
}

StepResult Environment::step(const codec::RealAction& action) {
    const int n = cfg_.num_sensors;
    const int m = cfg_.num_channels;
    if (static_cast<int>(action.selection.size()) != n ||
        static_cast<int>(action.power.size()) != n)
        throw std::invalid_argument("Environment::step: action size mismatch");

    std::vector<double> received(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int ch = action.selection[i];
        if (ch < 0 || ch > m) throw std::invalid_argument("Environment::step: channel out of range");
        if (ch == 0) continue;
        if (action.power[i] < 0.0 || action.power[i] > cfg_.p_max * (1.0 + 1e-12))
            throw std::invalid_argument("Environment::step: power out of range");
        const double gain = cfg_.channel_model.levels(state_.channel.gains(ch - 1, i));
        received[i] = action.power[i] * gain;
    }

    const link::DecodeOutcome outcome =
        link::decode_failure_probs(action.selection, received, cfg_.code);
    std::vector<uint8_t> successes =
        link::sample_receptions(action.selection, received, cfg_.code, reception_rng_);
    if (force_success_) {
        for (int i = 0; i < n; ++i)
            successes[i] = static_cast<uint8_t>(action.selection[i] > 0 && action.power[i] > 0.0);
    }

    StepResult result;
    result.next_state.aoi.resize(n);
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
        const int next_aoi = successes[i] ? 1 : std::min(state_.aoi[i] + 1, cfg_.aoi_cap);
        result.next_state.aoi[i] = next_aoi;
        cost += cost_table_[i][next_aoi - 1];
    }
    result.next_state.channel = channel::step_channel(cfg_.channel_model, state_.channel, channel_rng_);
    result.reward = -cost;
    result.successes = std::move(successes);
    result.info.sinrs = outcome.sinrs;
    result.info.failure_probs = outcome.failure_probs;

    state_ = result.next_state;
    return result;
}

Eigen::VectorXd Environment::observe(const EnvState& state) const {
    const int n = cfg_.num_sensors;
    const int m = cfg_.num_channels;
    Eigen::VectorXd obs(n * (m + 1));
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            const double g = cfg_.channel_model.levels(state.channel.gains(j, i));
            obs(k++) = (std::log10(g) - gain_log_center_) / gain_log_halfspan_;
        }
    for (int i = 0; i < n; ++i)
        obs(k++) = static_cast<double>(std::min(state.aoi[i], cfg_.aoi_cap)) / cfg_.aoi_cap;
    return obs;
}

double Environment::cost_at(int sensor, int aoi) const {
    return cost_table_[sensor][std::min(aoi, cfg_.aoi_cap) - 1];
}

}  // namespace remest::env
