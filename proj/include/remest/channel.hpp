#pragma once

#include <Eigen/Dense>
#include <vector>

#include "remest/rng.hpp"

namespace remest::channel {

// Finite-state Markov block-fading model. Every (sensor, channel) link has
// its own H-state chain over the shared gain level set; links evolve
// independently.
struct ChannelModel {
    Eigen::VectorXd levels;                   // H power gains, strictly increasing
    std::vector<Eigen::MatrixXd> transition;  // N*M row-stochastic H x H, index n*M + m
    int num_sensors = 0;                      // N
    int num_channels = 0;                     // M

    int num_levels() const { return static_cast<int>(levels.size()); }
    const Eigen::MatrixXd& link_transition(int sensor, int channel) const {
        return transition[static_cast<size_t>(sensor) * num_channels + channel];
    }
};

// Current gain-level indices, one per (channel, sensor) link.
struct ChannelState {
    Eigen::MatrixXi gains;  // M x N, entries in [0, H)

    int level_index(int channel, int sensor) const { return gains(channel, sensor); }
};

// {1e-8, 1e-7, ..., 1e-1}
Eigen::VectorXd default_gain_levels();

// Per-link transitions built as persistence * I + (1 - persistence) * R with
// each row of R uniform on the simplex.
ChannelModel generate_random_channel_model(int num_sensors, int num_channels,
                                           const Eigen::VectorXd& levels,
                                           double persistence, Rng& rng);

// Advance every link one slot.
ChannelState step_channel(const ChannelModel& model, const ChannelState& state, Rng& rng);

struct StationaryResult {
    Eigen::VectorXd pi;
    bool converged = true;  // false: reducible/periodic chain, uniform fallback
};

// Stationary distribution by power iteration on the transpose; reducible or
// non-converging chains fall back to the uniform distribution with a flag.
StationaryResult stationary_distribution(const Eigen::MatrixXd& transition,
                                         double tol = 1e-12, long max_iter = 100000);

}  // namespace remest::channel
