#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "remest/codec.hpp"
#include "remest/env.hpp"
#include "remest/nn.hpp"
#include "remest/ppo.hpp"
#include "remest/rng.hpp"

namespace remest::dqn {

// Orthogonal-access action set: every action schedules exactly one distinct
// sensor per channel at full power; the rest idle. Enumerable only for small
// systems.
struct OmaActionSpace {
    std::vector<std::vector<int>> actions;  // each entry: channel -> sensor
    int num_sensors = 0;
    int num_channels = 0;

    int size() const { return static_cast<int>(actions.size()); }
};

// All ordered selections of M distinct sensors out of N; refuses spaces larger
// than max_size.
OmaActionSpace enumerate_oma_actions(int num_sensors, int num_channels,
                                     long max_size = 100000);

codec::RealAction oma_to_real(const std::vector<int>& channel_to_sensor, int num_sensors,
                              double p_max);

struct EpsilonSchedule {
    double initial = 1.0;
    double decay = 0.999;
    double floor = 0.01;

    double at(long step) const;
};

struct Transition {
    Eigen::VectorXd obs;
    Eigen::VectorXd next_obs;
    int action = 0;
    double reward = 0.0;
};

// Fixed-capacity ring buffer with uniform sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);
    void push(Transition t);
    size_t size() const { return data_.size(); }
    size_t capacity() const { return capacity_; }
    std::vector<const Transition*> sample(int batch, Rng& rng) const;

private:
    std::vector<Transition> data_;
    size_t capacity_;
    size_t next_ = 0;
};

// Uniform random action with probability epsilon, otherwise the greedy one
// (lowest index on ties).
int epsilon_greedy(const Eigen::VectorXd& q_values, double epsilon, Rng& rng);

struct DqnConfig {
    double lr = 1e-3;
    double discount = 0.95;
    EpsilonSchedule epsilon;
    int minibatch = 128;
    long buffer_capacity = 0;  // 0: 1000 * N * M
    int target_refresh = 100;  // updates between target-network syncs
    int update_every = 2;      // environment steps per gradient step
    int episodes = 0;          // 0: same episode formula as the PPO trainer
    int rollout_steps = 128;
    int eval_every = 50;
    int eval_steps = 1000;
};

struct Agent {
    nn::Mlp qnet;
    OmaActionSpace actions;

    Eigen::VectorXd q_values(const Eigen::VectorXd& obs) const;
    int greedy_action(const Eigen::VectorXd& obs) const;
};

struct TrainResult {
    Agent agent;
    Agent best_agent;
    std::vector<ppo::EpisodeStats> curve;  // critic_loss carries the TD loss
    double best_eval_mse = 0.0;
    bool diverged = false;
};

double evaluate_agent_mse(const Agent& agent, const env::EnvConfig& env_cfg, long steps,
                          uint64_t seed);

TrainResult train_dqn(const env::EnvConfig& env_cfg, const DqnConfig& cfg, uint64_t env_seed,
                      uint64_t init_seed, uint64_t explore_seed);

}  // namespace remest::dqn
