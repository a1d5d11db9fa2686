#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "remest/codec.hpp"
#include "remest/env.hpp"
#include "remest/nn.hpp"
#include "remest/rng.hpp"

namespace remest::ppo {

struct PpoConfig {
    double discount = 0.95;        // lambda
    double smoothing = 0.95;       // alpha, advantage smoothing factor
    double clip = 0.2;             // omega
    double entropy_weight = 0.01;  // w
    int minibatch = 128;           // B
    int rollout_steps = 128;       // T, one episode
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    int update_epochs = 4;
    int episodes = 0;  // 0: use episode_count_formula
    bool normalize_advantages = true;
    // Entropy bonus from the snapshot policy's std (gradient-free, as the
    // objective is written); switch to the live policy's std for ablation.
    bool entropy_from_current = false;
    // Critic target A + V instead of the one-step bootstrap.
    bool critic_target_plus_value = false;
    int eval_every = 50;   // episodes between selection evaluations
    int eval_steps = 1000; // horizon of each selection evaluation
};

// ceil(250 * (N/M) * sqrt(N*M))
int episode_count_formula(int num_sensors, int num_channels);

// One on-policy trajectory under a fixed snapshot policy.
struct Rollout {
    Eigen::MatrixXd observations;  // obs_dim x T
    Eigen::MatrixXd actions;       // act_dim x T
    Eigen::VectorXd log_probs;     // under the snapshot policy
    Eigen::VectorXd rewards;
    Eigen::VectorXd values;        // V(s_t)
    Eigen::VectorXd entropies;     // policy entropy at each visited state
    double bootstrap_value = 0.0;  // V(s_T)

    int length() const { return static_cast<int>(rewards.size()); }
};

struct GaussianPolicySample {
    Eigen::VectorXd action;
    double log_density;
    double entropy;
};

double gaussian_log_density(const Eigen::VectorXd& action, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std);
double gaussian_entropy(const Eigen::VectorXd& std);

struct Agent {
    nn::Mlp actor;   // [obs, hidden..., 2 * act_dim]
    nn::Mlp critic;  // [obs, hidden..., 1]
    int act_dim = 0;
    codec::CodecKind codec = codec::CodecKind::Binary;

    nn::ActorOutput policy(const Eigen::VectorXd& obs) const;
    double value(const Eigen::VectorXd& obs) const;
    // Maximum-likelihood action for deployment: the policy mean, no sampling.
    Eigen::VectorXd deploy_action(const Eigen::VectorXd& obs) const;
};

Agent make_agent(int obs_dim, int act_dim, const std::vector<int>& hidden,
                 codec::CodecKind kind, Rng& init_rng);

GaussianPolicySample sample_policy(const Agent& agent, const Eigen::VectorXd& obs, Rng& rng);

// Resets the environment and runs T steps under the current (frozen) policy.
Rollout collect_rollout(env::Environment& environment, const Agent& agent, int steps, Rng& rng);

// A(t) = delta(t) + (discount * smoothing) A(t+1),
// delta(t) = r(t) + discount V(s_{t+1}) - V(s_t).
Eigen::VectorXd compute_advantages(const Rollout& rollout, double discount, double smoothing);

// One-step bootstrap target R(t) = r(t) + discount * V(s_{t+1}).
Eigen::VectorXd compute_reward_to_go(const Rollout& rollout, double discount);

// Minibatch materialized from a rollout.
struct Batch {
    Eigen::MatrixXd observations;
    Eigen::MatrixXd actions;
    Eigen::VectorXd log_probs_old;
    Eigen::VectorXd advantages;
    Eigen::VectorXd targets;
    Eigen::VectorXd entropies_old;

    int size() const { return static_cast<int>(log_probs_old.size()); }
};

Batch gather_batch(const Rollout& rollout, std::span<const int> indices,
                   const Eigen::VectorXd& advantages, const Eigen::VectorXd& targets);

// Mean squared error between targets and critic values.
double critic_loss(const Agent& agent, const Batch& batch);
double critic_loss_with_grad(const Agent& agent, const Batch& batch, std::span<double> grad);

// Clipped-surrogate objective plus entropy bonus; this is maximized. The
// *_with_grad variant fills the ascent gradient.
double actor_loss(const Agent& agent, const Batch& batch, double clip, double entropy_weight,
                  bool entropy_from_current = false);
double actor_loss_with_grad(const Agent& agent, const Batch& batch, double clip,
                            double entropy_weight, bool entropy_from_current,
                            std::span<double> grad);

struct UpdateStats {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
};

// update_epochs rounds of: draw a random minibatch, one Adam step on the
// critic, one on the actor. Advantages and targets come from the pre-update
// critic; the snapshot policy data lives in the rollout. Throws on NaN loss.
UpdateStats update(Agent& agent, nn::AdamState& actor_opt, nn::AdamState& critic_opt,
                   const Rollout& rollout, const PpoConfig& cfg, Rng& rng);

// Deterministic average sum-MSE of the deployed policy over the horizon.
double evaluate_agent_mse(const Agent& agent, const env::EnvConfig& env_cfg, long steps,
                          uint64_t seed);

struct EpisodeStats {
    double episode_return = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double entropy = 0.0;
};

struct TrainResult {
    Agent agent;
    Agent best_agent;  // lowest selection-evaluation MSE seen during training
    std::vector<EpisodeStats> curve;
    double best_eval_mse = 0.0;
    bool diverged = false;
};

TrainResult train(const env::EnvConfig& env_cfg, const PpoConfig& cfg, codec::CodecKind kind,
                  uint64_t env_seed, uint64_t init_seed, uint64_t explore_seed);

}  // namespace remest::ppo
