#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "remest/channel.hpp"
#include "remest/codec.hpp"
#include "remest/link.hpp"
#include "remest/plant.hpp"
#include "remest/rng.hpp"

namespace remest::env {

// MDP state: current channel gains and per-sensor AoI (slots since the last
// delivered packet, >= 1).
struct EnvState {
    channel::ChannelState channel;
    std::vector<int> aoi;
};

struct StepInfo {
    Eigen::VectorXd sinrs;
    Eigen::VectorXd failure_probs;
};

struct StepResult {
    EnvState next_state;
    double reward;  // negative sum estimation cost after the transition
    std::vector<uint8_t> successes;
    StepInfo info;
};

struct EnvConfig {
    int num_sensors = 0;   // N
    int num_channels = 0;  // M, must be < N
    std::vector<plant::PlantModel> plants;
    std::vector<plant::SteadyStateCov> covariances;
    channel::ChannelModel channel_model;
    link::CodeParams code;
    double p_max = 0.0;  // linear W
    int aoi_cap = 200;
};

// One instance is single-threaded; run one per worker. Channel evolution and
// reception sampling draw from separate streams so gain trajectories do not
// depend on the policy being executed.
class Environment {
public:
    Environment(EnvConfig cfg, uint64_t seed);

    const EnvState& reset();
    StepResult step(const codec::RealAction& action);

    Eigen::VectorXd observe() const { return observe(state_); }
    Eigen::VectorXd observe(const EnvState& state) const;

    const EnvState& state() const { return state_; }
    const EnvConfig& config() const { return cfg_; }
    int num_sensors() const { return cfg_.num_sensors; }
    int num_channels() const { return cfg_.num_channels; }
    int obs_dim() const { return cfg_.num_sensors * (cfg_.num_channels + 1); }

    // Estimation cost of one sensor at a given AoI (table lookup).
    double cost_at(int sensor, int aoi) const;
    // Sum of Tr(p_bar) over sensors: the cost when every AoI is 1.
    double cost_floor() const { return cost_floor_; }

    // Test hook: force every transmitted packet to be received.
    void set_force_success(bool on) { force_success_ = on; }

private:
    EnvConfig cfg_;
    std::vector<std::vector<double>> cost_table_;  // [sensor][aoi-1], aoi in 1..cap
    std::vector<Eigen::VectorXd> stationary_;      // per link, reset sampling
    double cost_floor_ = 0.0;
    double gain_log_center_ = 0.0;
    double gain_log_halfspan_ = 1.0;
    EnvState state_;
    Rng channel_rng_;
    Rng reception_rng_;
    bool force_success_ = false;
};

}  // namespace remest::env
