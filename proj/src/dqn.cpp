#include "remest/dqn.hpp"

#include <cmath>
#include <stdexcept>

namespace remest::dqn {

namespace {

void enumerate_recursive(int num_sensors, int num_channels, std::vector<int>& partial,
                         std::vector<char>& used, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(partial.size()) == num_channels) {
        out.push_back(partial);
        return;
    }
    for (int sensor = 0; sensor < num_sensors; ++sensor) {
        if (used[sensor]) continue;
        used[sensor] = 1;
        partial.push_back(sensor);
        enumerate_recursive(num_sensors, num_channels, partial, used, out);
        partial.pop_back();
        used[sensor] = 0;
    }
}

}  // namespace

OmaActionSpace enumerate_oma_actions(int num_sensors, int num_channels, long max_size) {
    if (num_channels >= num_sensors || num_channels < 1)
        throw std::invalid_argument("enumerate_oma_actions: requires 1 <= M < N");
    long count = 1;
    for (int k = 0; k < num_channels; ++k) {
        count *= num_sensors - k;
        if (count > max_size)
            throw std::invalid_argument(
                "enumerate_oma_actions: action space too large for the tabular benchmark");
    }
    OmaActionSpace space;
    space.num_sensors = num_sensors;
    space.num_channels = num_channels;
    space.actions.reserve(count);
    std::vector<int> partial;
    std::vector<char> used(num_sensors, 0);
    enumerate_recursive(num_sensors, num_channels, partial, used, space.actions);
    return space;
}

codec::RealAction oma_to_real(const std::vector<int>& channel_to_sensor, int num_sensors,
                              double p_max) {
    codec::RealAction action;
    action.selection.assign(num_sensors, 0);
    action.power.assign(num_sensors, 0.0);
    for (size_t m = 0; m < channel_to_sensor.size(); ++m) {
        action.selection[channel_to_sensor[m]] = static_cast<int>(m) + 1;
        action.power[channel_to_sensor[m]] = p_max;
    }
    return action;
}

double EpsilonSchedule::at(long step) const {
    return std::max(floor, initial * std::pow(decay, static_cast<double>(step)));
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    data_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::sample(int batch, Rng& rng) const {
    std::vector<const Transition*> out(batch);
    for (int i = 0; i < batch; ++i)
        out[i] = &data_[rng.uniform_int(static_cast<int>(data_.size()))];
    return out;
}

int epsilon_greedy(const Eigen::VectorXd& q_values, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0)
        throw std::invalid_argument("epsilon_greedy: epsilon must be in [0, 1]");
    if (rng.uniform() < epsilon) return rng.uniform_int(static_cast<int>(q_values.size()));
    int best = 0;
    for (int i = 1; i < q_values.size(); ++i)
        if (q_values(i) > q_values(best)) best = i;
    return best;
}

Eigen::VectorXd Agent::q_values(const Eigen::VectorXd& obs) const {
    return nn::forward(qnet, obs);
}

int Agent::greedy_action(const Eigen::VectorXd& obs) const {
    const Eigen::VectorXd q = q_values(obs);
    int best = 0;
    for (int i = 1; i < q.size(); ++i)
        if (q(i) > q(best)) best = i;
    return best;
}

double evaluate_agent_mse(const Agent& agent, const env::EnvConfig& env_cfg, long steps,
                          uint64_t seed) {
    env::Environment environment(env_cfg, seed);
    double total_cost = 0.0;
    Eigen::VectorXd obs = environment.observe();
    for (long t = 0; t < steps; ++t) {
        const int best = agent.greedy_action(obs);
        const env::StepResult result = environment.step(
            oma_to_real(agent.actions.actions[best], environment.num_sensors(), env_cfg.p_max));
        total_cost += -result.reward;
        obs = environment.observe();
    }
    return total_cost / static_cast<double>(steps);
}

TrainResult train_dqn(const env::EnvConfig& env_cfg, const DqnConfig& cfg, uint64_t env_seed,
                      uint64_t init_seed, uint64_t explore_seed) {
    env::Environment environment(env_cfg, env_seed);
    Rng init_rng(init_seed);
    Rng explore_rng(explore_seed);

    const int n = env_cfg.num_sensors;
    const int m = env_cfg.num_channels;
    OmaActionSpace space = enumerate_oma_actions(n, m);

    std::vector<int> sizes{environment.obs_dim()};
    const std::vector<int> hidden = nn::hidden_sizes(n, m);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(space.size());

    TrainResult result;
    result.agent.qnet = nn::Mlp::random(sizes, init_rng);
    result.agent.actions = space;
    nn::Mlp target = result.agent.qnet;
    nn::AdamState opt(result.agent.qnet.param_count(), cfg.lr);

    const long capacity = cfg.buffer_capacity > 0
                              ? cfg.buffer_capacity
                              : 1000L * n * m;
    ReplayBuffer buffer(static_cast<size_t>(capacity));

    const int episodes =
        cfg.episodes > 0 ? cfg.episodes : ppo::episode_count_formula(n, m);
    const uint64_t selection_seed = derive_seed(env_seed, 0xEBA1);

    std::vector<double> grad(result.agent.qnet.param_count());
    long global_step = 0;
    long updates = 0;
    result.best_eval_mse = std::numeric_limits<double>::infinity();
    result.curve.reserve(episodes);

    for (int episode = 0; episode < episodes; ++episode) {
        environment.reset();
        Eigen::VectorXd obs = environment.observe();
        double episode_return = 0.0;
        double loss_sum = 0.0;
        long loss_count = 0;
        double epsilon_now = cfg.epsilon.at(global_step);

        for (int t = 0; t < cfg.rollout_steps; ++t) {
            epsilon_now = cfg.epsilon.at(global_step);
            const int action =
                epsilon_greedy(result.agent.q_values(obs), epsilon_now, explore_rng);
            const env::StepResult step_result =
                environment.step(oma_to_real(space.actions[action], n, env_cfg.p_max));
            episode_return += step_result.reward;
            Eigen::VectorXd next_obs = environment.observe();
            buffer.push({obs, next_obs, action, step_result.reward});
            obs = std::move(next_obs);
            ++global_step;

            if (buffer.size() < static_cast<size_t>(cfg.minibatch) ||
                global_step % cfg.update_every != 0)
                continue;

            const auto batch = buffer.sample(cfg.minibatch, explore_rng);
            Eigen::MatrixXd obs_batch(environment.obs_dim(), cfg.minibatch);
            Eigen::MatrixXd next_batch(environment.obs_dim(), cfg.minibatch);
            for (int i = 0; i < cfg.minibatch; ++i) {
                obs_batch.col(i) = batch[i]->obs;
                next_batch.col(i) = batch[i]->next_obs;
            }
            const Eigen::MatrixXd next_q = nn::forward_batch(target, next_batch);
            nn::ForwardCache cache;
            const Eigen::MatrixXd q = nn::forward_batch(result.agent.qnet, obs_batch, &cache);

            // squared TD error on the taken actions only
            Eigen::MatrixXd out_grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
            double loss = 0.0;
            for (int i = 0; i < cfg.minibatch; ++i) {
                const double bootstrap = next_q.col(i).maxCoeff();
                const double target_value = batch[i]->reward + cfg.discount * bootstrap;
                const double residual = q(batch[i]->action, i) - target_value;
                loss += residual * residual;
                out_grad(batch[i]->action, i) = 2.0 * residual / cfg.minibatch;
            }
            loss /= cfg.minibatch;
            loss_sum += loss;
            ++loss_count;

            std::fill(grad.begin(), grad.end(), 0.0);
            nn::backward_batch(result.agent.qnet, cache, out_grad, grad);
            nn::adam_step(result.agent.qnet.params, grad, opt);
            ++updates;
            if (updates % cfg.target_refresh == 0) target = result.agent.qnet;
        }

        if (!std::isfinite(episode_return) ||
            (loss_count > 0 && !std::isfinite(loss_sum))) {
            result.diverged = true;
            break;
        }
        result.curve.push_back({episode_return, 0.0,
                                loss_count > 0 ? loss_sum / loss_count : 0.0, epsilon_now});

        if ((episode + 1) % cfg.eval_every == 0 || episode + 1 == episodes) {
            const double mse =
                evaluate_agent_mse(result.agent, env_cfg, cfg.eval_steps, selection_seed);
            if (mse < result.best_eval_mse) {
                result.best_eval_mse = mse;
                result.best_agent = result.agent;
            }
        }
    }
    if (!std::isfinite(result.best_eval_mse)) result.best_agent = result.agent;
    return result;
}

}  // namespace remest::dqn
