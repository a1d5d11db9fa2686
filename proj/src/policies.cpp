#include "remest/policies.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

namespace remest {

Policy random_policy(int num_sensors, int num_channels, double p_max, uint64_t seed) {
    auto rng = std::make_shared<Rng>(seed);
    return [=](const env::EnvState&, const Eigen::VectorXd&) {
        codec::RealAction action;
        action.selection.resize(num_sensors);
        action.power.resize(num_sensors);
        for (int i = 0; i < num_sensors; ++i) {
            action.selection[i] = rng->uniform_int(num_channels + 1);
            action.power[i] = action.selection[i] ? rng->uniform(0.0, p_max) : 0.0;
        }
        return action;
    };
}

Policy round_robin_policy(int num_sensors, int num_channels, double p_max) {
    return [=](const env::EnvState& state, const Eigen::VectorXd&) {
        std::vector<int> order(num_sensors);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (state.aoi[a] != state.aoi[b]) return state.aoi[a] > state.aoi[b];
            return a < b;
        });
        codec::RealAction action;
        action.selection.assign(num_sensors, 0);
        action.power.assign(num_sensors, 0.0);
        for (int m = 0; m < num_channels; ++m) {
            action.selection[order[m]] = m + 1;
            action.power[order[m]] = p_max;
        }
        return action;
    };
}

Policy always_idle_policy(int num_sensors) {
    return [=](const env::EnvState&, const Eigen::VectorXd&) {
        return codec::RealAction{std::vector<int>(num_sensors, 0),
                                 std::vector<double>(num_sensors, 0.0)};
    };
}

Policy ppo_policy(const ppo::Agent& agent, int num_sensors, int num_channels, double p_max) {
    return [&agent, num_sensors, num_channels, p_max](const env::EnvState&,
                                                      const Eigen::VectorXd& obs) {
        const Eigen::VectorXd virtual_action = agent.deploy_action(obs);
        return codec::decode_action(
            agent.codec, {virtual_action.data(), static_cast<size_t>(virtual_action.size())},
            num_sensors, num_channels, p_max);
    };
}

Policy ppo_policy(std::shared_ptr<const ppo::Agent> agent, int num_sensors, int num_channels,
                  double p_max) {
    return [agent = std::move(agent), num_sensors, num_channels,
            p_max](const env::EnvState&, const Eigen::VectorXd& obs) {
        const Eigen::VectorXd virtual_action = agent->deploy_action(obs);
        return codec::decode_action(
            agent->codec, {virtual_action.data(), static_cast<size_t>(virtual_action.size())},
            num_sensors, num_channels, p_max);
    };
}

Policy dqn_policy(const dqn::Agent& agent, int num_sensors, double p_max) {
    return [&agent, num_sensors, p_max](const env::EnvState&, const Eigen::VectorXd& obs) {
        const int best = agent.greedy_action(obs);
        return dqn::oma_to_real(agent.actions.actions[best], num_sensors, p_max);
    };
}

Policy dqn_policy(std::shared_ptr<const dqn::Agent> agent, int num_sensors, double p_max) {
    return [agent = std::move(agent), num_sensors, p_max](const env::EnvState&,
                                                          const Eigen::VectorXd& obs) {
        const int best = agent->greedy_action(obs);
        return dqn::oma_to_real(agent->actions.actions[best], num_sensors, p_max);
    };
}

}  // namespace remest
