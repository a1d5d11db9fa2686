#include "remest/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace remest::ppo {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;  // ln(2*pi)/2

// Mean/std for a whole batch of head pre-activations (2d x B).
void heads_batch(const Eigen::MatrixXd& head_pre, Eigen::MatrixXd& mean, Eigen::MatrixXd& std) {
    const Eigen::Index d = head_pre.rows() / 2;
    mean = head_pre.topRows(d).array().tanh();
    std.resize(d, head_pre.cols());
    for (Eigen::Index j = 0; j < head_pre.cols(); ++j)
        for (Eigen::Index i = 0; i < d; ++i)
            std(i, j) = std::max(nn::softplus(head_pre(d + i, j)), nn::kStdFloor);
}

}  // namespace

int episode_count_formula(int num_sensors, int num_channels) {
    const double e = 250.0 * (static_cast<double>(num_sensors) / num_channels) *
                     std::sqrt(static_cast<double>(num_sensors) * num_channels);
    return static_cast<int>(std::ceil(e));
}

double gaussian_log_density(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std) {
    double logp = 0.0;
    for (Eigen::Index i = 0; i < action.size(); ++i) {
        const double z = (action(i) - mean(i)) / std(i);
        logp += -kHalfLog2Pi - std::log(std(i)) - 0.5 * z * z;
    }
    return logp;
}

double gaussian_entropy(const Eigen::VectorXd& std) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < std.size(); ++i)
        h += 0.5 + kHalfLog2Pi + std::log(std(i));
    return h;
}

nn::ActorOutput Agent::policy(const Eigen::VectorXd& obs) const {
    return nn::actor_heads(nn::forward(actor, obs));
}

double Agent::value(const Eigen::VectorXd& obs) const { return nn::forward(critic, obs)(0); }

Eigen::VectorXd Agent::deploy_action(const Eigen::VectorXd& obs) const {
    return policy(obs).mean;
}

Agent make_agent(int obs_dim, int act_dim, const std::vector<int>& hidden,
                 codec::CodecKind kind, Rng& init_rng) {
    std::vector<int> actor_sizes{obs_dim};
    actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
    actor_sizes.push_back(2 * act_dim);
    std::vector<int> critic_sizes{obs_dim};
    critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
    critic_sizes.push_back(1);

    Agent agent;
    agent.actor = nn::Mlp::random(std::move(actor_sizes), init_rng);
    agent.critic = nn::Mlp::random(std::move(critic_sizes), init_rng);
    agent.act_dim = act_dim;
    agent.codec = kind;
    return agent;
}

GaussianPolicySample sample_policy(const Agent& agent, const Eigen::VectorXd& obs, Rng& rng) {
    const nn::ActorOutput out = agent.policy(obs);
    GaussianPolicySample sample;
    sample.action.resize(out.mean.size());
    for (Eigen::Index i = 0; i < out.mean.size(); ++i)
        sample.action(i) = out.mean(i) + out.std(i) * rng.normal();
    sample.log_density = gaussian_log_density(sample.action, out.mean, out.std);
    sample.entropy = gaussian_entropy(out.std);
    return sample;
}

Rollout collect_rollout(env::Environment& environment, const Agent& agent, int steps, Rng& rng) {
    if (steps < 1) throw std::invalid_argument("collect_rollout: need at least one step");
    const int n = environment.num_sensors();
    const int m = environment.num_channels();
    const double p_max = environment.config().p_max;

    Rollout rollout;
    rollout.observations.resize(environment.obs_dim(), steps);
    rollout.actions.resize(agent.act_dim, steps);
    rollout.log_probs.resize(steps);
    rollout.rewards.resize(steps);
    rollout.values.resize(steps);
    rollout.entropies.resize(steps);

    environment.reset();
    Eigen::VectorXd obs = environment.observe();
    for (int t = 0; t < steps; ++t) {
        const GaussianPolicySample sample = sample_policy(agent, obs, rng);
        const codec::RealAction action = codec::decode_action(
            agent.codec, {sample.action.data(), static_cast<size_t>(sample.action.size())}, n, m,
            p_max);

        rollout.observations.col(t) = obs;
        rollout.actions.col(t) = sample.action;
        rollout.log_probs(t) = sample.log_density;
        rollout.entropies(t) = sample.entropy;
        rollout.values(t) = agent.value(obs);

        const env::StepResult result = environment.step(action);
        rollout.rewards(t) = result.reward;
        obs = environment.observe();
    }
    rollout.bootstrap_value = agent.value(obs);
    return rollout;
}

Eigen::VectorXd compute_advantages(const Rollout& rollout, double discount, double smoothing) {
    const int n = rollout.length();
    Eigen::VectorXd advantages(n);
    double next_adv = 0.0;
    for (int t = n - 1; t >= 0; --t) {
        const double next_value = t + 1 < n ? rollout.values(t + 1) : rollout.bootstrap_value;
        const double delta = rollout.rewards(t) + discount * next_value - rollout.values(t);
        next_adv = delta + discount * smoothing * next_adv;
        advantages(t) = next_adv;
    }
    return advantages;
}

Eigen::VectorXd compute_reward_to_go(const Rollout& rollout, double discount) {
    const int n = rollout.length();
    Eigen::VectorXd targets(n);
    for (int t = 0; t < n; ++t) {
        const double next_value = t + 1 < n ? rollout.values(t + 1) : rollout.bootstrap_value;
        targets(t) = rollout.rewards(t) + discount * next_value;
    }
    return targets;
}

Batch gather_batch(const Rollout& rollout, std::span<const int> indices,
                   const Eigen::VectorXd& advantages, const Eigen::VectorXd& targets) {
    const int b = static_cast<int>(indices.size());
    Batch batch;
    batch.observations.resize(rollout.observations.rows(), b);
    batch.actions.resize(rollout.actions.rows(), b);
    batch.log_probs_old.resize(b);
    batch.advantages.resize(b);
    batch.targets.resize(b);
    batch.entropies_old.resize(b);
    for (int i = 0; i < b; ++i) {
        const int t = indices[i];
        batch.observations.col(i) = rollout.observations.col(t);
        batch.actions.col(i) = rollout.actions.col(t);
        batch.log_probs_old(i) = rollout.log_probs(t);
        batch.advantages(i) = advantages(t);
        batch.targets(i) = targets(t);
        batch.entropies_old(i) = rollout.entropies(t);
    }
    return batch;
}

double critic_loss(const Agent& agent, const Batch& batch) {
    const Eigen::MatrixXd values = nn::forward_batch(agent.critic, batch.observations);
    return (batch.targets.transpose() - values.row(0)).squaredNorm() / batch.size();
}

double critic_loss_with_grad(const Agent& agent, const Batch& batch, std::span<double> grad) {
    nn::ForwardCache cache;
    const Eigen::MatrixXd values = nn::forward_batch(agent.critic, batch.observations, &cache);
    const Eigen::RowVectorXd residual = values.row(0) - batch.targets.transpose();
    const double loss = residual.squaredNorm() / batch.size();
    const Eigen::MatrixXd out_grad = residual * (2.0 / batch.size());
    nn::backward_batch(agent.critic, cache, out_grad, grad);
    return loss;
}

namespace {

// Shared loss/gradient path; grad may be empty for value-only evaluation.
double actor_loss_impl(const Agent& agent, const Batch& batch, double clip,
                       double entropy_weight, bool entropy_from_current,
                       std::span<double> grad) {
    const int b = batch.size();
    const Eigen::Index d = agent.act_dim;

    nn::ForwardCache cache;
    const bool want_grad = !grad.empty();
    const Eigen::MatrixXd head_pre =
        nn::forward_batch(agent.actor, batch.observations, want_grad ? &cache : nullptr);
    Eigen::MatrixXd mean, std;
    heads_batch(head_pre, mean, std);

    Eigen::MatrixXd mean_grad = Eigen::MatrixXd::Zero(d, b);
    Eigen::MatrixXd std_grad = Eigen::MatrixXd::Zero(d, b);

    double total = 0.0;
    for (int i = 0; i < b; ++i) {
        double logp = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double z = (batch.actions(k, i) - mean(k, i)) / std(k, i);
            logp += -kHalfLog2Pi - std::log(std(k, i)) - 0.5 * z * z;
        }
        const double ratio = std::exp(logp - batch.log_probs_old(i));
        const double advantage = batch.advantages(i);
        const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
        const double unclipped_term = ratio * advantage;
        const double clipped_term = clipped * advantage;
        total += std::min(unclipped_term, clipped_term);

        double entropy;
        if (entropy_from_current) {
            entropy = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) entropy += 0.5 + kHalfLog2Pi + std::log(std(k, i));
        } else {
            entropy = batch.entropies_old(i);
        }
        total += entropy_weight * entropy;

        if (want_grad) {
            // gradient flows through the ratio only when the unclipped branch
            // is the active minimum
            if (unclipped_term <= clipped_term) {
                const double coef = unclipped_term / b;  // d(total)/d(logp)
                for (Eigen::Index k = 0; k < d; ++k) {
                    const double diff = batch.actions(k, i) - mean(k, i);
                    const double s = std(k, i);
                    mean_grad(k, i) += coef * diff / (s * s);
                    std_grad(k, i) += coef * (diff * diff / (s * s * s) - 1.0 / s);
                }
            }
            if (entropy_from_current)
                for (Eigen::Index k = 0; k < d; ++k)
                    std_grad(k, i) += entropy_weight / (b * std(k, i));
        }
    }

    if (want_grad) {
        Eigen::MatrixXd pre_grad(2 * d, b);
        pre_grad.topRows(d) =
            mean_grad.cwiseProduct((1.0 - mean.array().square()).matrix());
        for (int i = 0; i < b; ++i)
            for (Eigen::Index k = 0; k < d; ++k) {
                const double z = head_pre(d + k, i);
                const bool floored = nn::softplus(z) < nn::kStdFloor;
                pre_grad(d + k, i) = floored ? 0.0 : std_grad(k, i) * nn::sigmoid(z);
            }
        nn::backward_batch(agent.actor, cache, pre_grad, grad);
    }
    return total / b;
}

}  // namespace

double actor_loss(const Agent& agent, const Batch& batch, double clip, double entropy_weight,
                  bool entropy_from_current) {
    return actor_loss_impl(agent, batch, clip, entropy_weight, entropy_from_current, {});
}

double actor_loss_with_grad(const Agent& agent, const Batch& batch, double clip,
                            double entropy_weight, bool entropy_from_current,
                            std::span<double> grad) {
    if (grad.size() != agent.actor.param_count())
        throw std::invalid_argument("actor_loss_with_grad: gradient buffer size mismatch");
    return actor_loss_impl(agent, batch, clip, entropy_weight, entropy_from_current, grad);
}

UpdateStats update(Agent& agent, nn::AdamState& actor_opt, nn::AdamState& critic_opt,
                   const Rollout& rollout, const PpoConfig& cfg, Rng& rng) {
    const int t_len = rollout.length();
    if (cfg.minibatch < 1 || cfg.minibatch > t_len)
        throw std::invalid_argument("update: minibatch must be in [1, rollout length]");

    const Eigen::VectorXd advantages =
        compute_advantages(rollout, cfg.discount, cfg.smoothing);
    Eigen::VectorXd targets = cfg.critic_target_plus_value
                                  ? (advantages + rollout.values).eval()
                                  : compute_reward_to_go(rollout, cfg.discount);

    std::vector<int> indices(t_len);
    std::iota(indices.begin(), indices.end(), 0);
    std::vector<double> actor_grad(agent.actor.param_count());
    std::vector<double> critic_grad(agent.critic.param_count());

    UpdateStats stats;
    for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
        for (int i = t_len - 1; i > 0; --i)  // Fisher-Yates
            std::swap(indices[i], indices[rng.uniform_int(i + 1)]);

        Batch batch = gather_batch(rollout, {indices.data(), static_cast<size_t>(cfg.minibatch)},
                                   advantages, targets);
        if (cfg.normalize_advantages && batch.size() > 1) {
            const double mean = batch.advantages.mean();
            const double var =
                (batch.advantages.array() - mean).square().sum() / batch.size();
            batch.advantages = (batch.advantages.array() - mean) / (std::sqrt(var) + 1e-8);
        }

        std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
        stats.critic_loss = critic_loss_with_grad(agent, batch, critic_grad);
        nn::adam_step(agent.critic.params, critic_grad, critic_opt);

        std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
        stats.actor_loss = actor_loss_with_grad(agent, batch, cfg.clip, cfg.entropy_weight,
                                                cfg.entropy_from_current, actor_grad);
        for (double& g : actor_grad) g = -g;  // ascend the objective
        nn::adam_step(agent.actor.params, actor_grad, actor_opt);

        if (!std::isfinite(stats.actor_loss) || !std::isfinite(stats.critic_loss))
            throw std::runtime_error("ppo::update: non-finite loss (epoch " +
                                     std::to_string(epoch) + ")");
    }
    return stats;
}

double evaluate_agent_mse(const Agent& agent, const env::EnvConfig& env_cfg, long steps,
                          uint64_t seed) {
    env::Environment environment(env_cfg, seed);
    const int n = environment.num_sensors();
    const int m = environment.num_channels();
    double total_cost = 0.0;
    Eigen::VectorXd obs = environment.observe();
    for (long t = 0; t < steps; ++t) {
        const Eigen::VectorXd action = agent.deploy_action(obs);
        const env::StepResult result = environment.step(codec::decode_action(
            agent.codec, {action.data(), static_cast<size_t>(action.size())}, n, m,
            env_cfg.p_max));
        total_cost += -result.reward;
        obs = environment.observe();
    }
    return total_cost / static_cast<double>(steps);
}

TrainResult train(const env::EnvConfig& env_cfg, const PpoConfig& cfg, codec::CodecKind kind,
                  uint64_t env_seed, uint64_t init_seed, uint64_t explore_seed) {
    env::Environment environment(env_cfg, env_seed);
    Rng init_rng(init_seed);
    Rng explore_rng(explore_seed);

    const int act_dim =
        codec::action_dim(kind, env_cfg.num_sensors, env_cfg.num_channels);
    Agent agent = make_agent(environment.obs_dim(), act_dim,
                             nn::hidden_sizes(env_cfg.num_sensors, env_cfg.num_channels), kind,
                             init_rng);
    nn::AdamState actor_opt(agent.actor.param_count(), cfg.actor_lr);
    nn::AdamState critic_opt(agent.critic.param_count(), cfg.critic_lr);

    const int episodes = cfg.episodes > 0
                             ? cfg.episodes
                             : episode_count_formula(env_cfg.num_sensors, env_cfg.num_channels);
    const uint64_t selection_seed = derive_seed(env_seed, 0xEBA1);

    TrainResult result;
    result.best_eval_mse = std::numeric_limits<double>::infinity();
    result.curve.reserve(episodes);
    for (int episode = 0; episode < episodes; ++episode) {
        const Rollout rollout = collect_rollout(environment, agent, cfg.rollout_steps, explore_rng);
        const double episode_return = rollout.rewards.sum();
        if (!std::isfinite(episode_return)) {
            result.diverged = true;
            break;
        }
        UpdateStats stats;
        try {
            stats = update(agent, actor_opt, critic_opt, rollout, cfg, explore_rng);
        } catch (const std::runtime_error&) {
            result.diverged = true;
            break;
        }
        result.curve.push_back(
            {episode_return, stats.actor_loss, stats.critic_loss, rollout.entropies.mean()});

        if ((episode + 1) % cfg.eval_every == 0 || episode + 1 == episodes) {
            const double mse = evaluate_agent_mse(agent, env_cfg, cfg.eval_steps, selection_seed);
            if (mse < result.best_eval_mse) {
                result.best_eval_mse = mse;
                result.best_agent = agent;
            }
        }
    }
    result.agent = agent;
    if (!std::isfinite(result.best_eval_mse)) result.best_agent = agent;
    return result;
}

}  // namespace remest::ppo
