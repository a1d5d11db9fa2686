#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "remest/codec.hpp"
#include "remest/dqn.hpp"
#include "remest/env.hpp"
#include "remest/ppo.hpp"

namespace remest {

// Anything that maps the MDP state (and its observation encoding) to a real
// action. Stateful policies (e.g. random) carry their own generator.
using Policy = std::function<codec::RealAction(const env::EnvState& state,
                                               const Eigen::VectorXd& obs)>;

// Uniform channel choice (idle included) and uniform power per sensor.
Policy random_policy(int num_sensors, int num_channels, double p_max, uint64_t seed);

// Schedules the M sensors with the largest AoI on distinct channels at full
// power, ties broken by sensor index.
Policy round_robin_policy(int num_sensors, int num_channels, double p_max);

Policy always_idle_policy(int num_sensors);

// The reference overloads require the agent to outlive the policy; the
// shared_ptr overloads tie the agent's lifetime to the closure.
Policy ppo_policy(const ppo::Agent& agent, int num_sensors, int num_channels, double p_max);
Policy ppo_policy(std::shared_ptr<const ppo::Agent> agent, int num_sensors, int num_channels,
                  double p_max);

Policy dqn_policy(const dqn::Agent& agent, int num_sensors, double p_max);
Policy dqn_policy(std::shared_ptr<const dqn::Agent> agent, int num_sensors, double p_max);

}  // namespace remest
