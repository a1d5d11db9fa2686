#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "remest/ppo.hpp"
#include "test_util.hpp"

using namespace remest;

namespace {

ppo::Rollout synthetic_rollout(int t_len, Rng& rng, double reward_const = std::nan(""),
                               double value_const = std::nan("")) {
    ppo::Rollout ro;
    ro.observations = Eigen::MatrixXd::Zero(2, t_len);
    ro.actions = Eigen::MatrixXd::Zero(1, t_len);
    ro.log_probs = Eigen::VectorXd::Zero(t_len);
    ro.entropies = Eigen::VectorXd::Zero(t_len);
    ro.rewards.resize(t_len);
    ro.values.resize(t_len);
    for (int t = 0; t < t_len; ++t) {
        ro.rewards(t) = std::isnan(reward_const) ? rng.normal() : reward_const;
        ro.values(t) = std::isnan(value_const) ? rng.normal() : value_const;
    }
    ro.bootstrap_value = std::isnan(value_const) ? rng.normal() : value_const;
    return ro;
}

// brute-force double sum of the advantage definition
Eigen::VectorXd brute_force_advantages(const ppo::Rollout& ro, double lambda, double alpha) {
    const int t_len = ro.length();
    Eigen::VectorXd out(t_len);
    for (int t = 0; t < t_len; ++t) {
        double sum = 0.0;
        for (int k = t; k < t_len; ++k) {
            const double next = k + 1 < t_len ? ro.values(k + 1) : ro.bootstrap_value;
            sum += std::pow(lambda * alpha, k - t) * (ro.rewards(k) + lambda * next - ro.values(k));
        }
        out(t) = sum;
    }
    return out;
}

ppo::Batch batch_from_rollout(const ppo::Rollout& ro, const Eigen::VectorXd& adv,
                              const Eigen::VectorXd& targets) {
    std::vector<int> idx(ro.length());
    std::iota(idx.begin(), idx.end(), 0);
    return ppo::gather_batch(ro, idx, adv, targets);
}

}  // namespace

TEST_CASE("advantages: single-step case is the one-step TD error") {
    Rng rng(1);
    const ppo::Rollout ro = synthetic_rollout(1, rng);
    const Eigen::VectorXd adv = ppo::compute_advantages(ro, 0.95, 0.95);
    const double expected = ro.rewards(0) + 0.95 * ro.bootstrap_value - ro.values(0);
    CHECK(adv(0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("advantages: geometric closed form for constant rewards and zero values") {
    const int t_len = 12;
    Rng rng(2);
    const double c = 1.7;
    const ppo::Rollout ro = synthetic_rollout(t_len, rng, c, 0.0);
    const double lambda = 0.95, alpha = 0.9;
    const Eigen::VectorXd adv = ppo::compute_advantages(ro, lambda, alpha);
    for (int t = 0; t < t_len; ++t) {
        const double q = lambda * alpha;
        const double closed = c * (1.0 - std::pow(q, t_len - t)) / (1.0 - q);
        CHECK(adv(t) == doctest::Approx(closed).epsilon(1e-12));
    }
    const Eigen::VectorXd brute = brute_force_advantages(ro, lambda, alpha);
    CHECK((adv - brute).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("advantages: recursion equals the brute-force double sum") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const int t_len = 1 + rng.uniform_int(10);
        const ppo::Rollout ro = synthetic_rollout(t_len, rng);
        const Eigen::VectorXd fast = ppo::compute_advantages(ro, 0.95, 0.95);
        const Eigen::VectorXd brute = brute_force_advantages(ro, 0.95, 0.95);
        CHECK((fast - brute).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("reward-to-go: bootstrap identities") {
    Rng rng(4);
    {
        const ppo::Rollout ro = synthetic_rollout(7, rng, std::nan(""), 0.0);
        const Eigen::VectorXd targets = ppo::compute_reward_to_go(ro, 0.95);
        for (int t = 0; t < 7; ++t) CHECK(targets(t) == ro.rewards(t));
    }
    {
        const ppo::Rollout ro = synthetic_rollout(7, rng, 0.0, 3.25);
        const Eigen::VectorXd targets = ppo::compute_reward_to_go(ro, 0.95);
        for (int t = 0; t < 7; ++t) CHECK(targets(t) == doctest::Approx(0.95 * 3.25).epsilon(1e-14));
    }
    {
        // alpha -> 0 collapses the advantage to delta(t) = R(t) - V(s_t)
        const ppo::Rollout ro = synthetic_rollout(9, rng);
        const Eigen::VectorXd adv = ppo::compute_advantages(ro, 0.95, 1e-12);
        const Eigen::VectorXd targets = ppo::compute_reward_to_go(ro, 0.95);
        for (int t = 0; t < 9; ++t)
            CHECK(targets(t) - adv(t) == doctest::Approx(ro.values(t)).epsilon(1e-9));
    }
}

TEST_CASE("gaussian density and entropy identities") {
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 1 + rng.uniform_int(6);
        Eigen::VectorXd action(d), mean(d), std(d);
        for (int i = 0; i < d; ++i) {
            action(i) = rng.normal();
            mean(i) = rng.normal();
            std(i) = 0.1 + rng.uniform();
        }
        const double total = ppo::gaussian_log_density(action, mean, std);
        double per_coordinate = 0.0;
        for (int i = 0; i < d; ++i)
            per_coordinate += ppo::gaussian_log_density(action.segment(i, 1), mean.segment(i, 1),
                                                        std.segment(i, 1));
        CHECK(total == doctest::Approx(per_coordinate).epsilon(1e-12));

        double entropy = 0.0;
        for (int i = 0; i < d; ++i) entropy += 0.5 * std::log(2.0 * M_PI * M_E) + std::log(std(i));
        CHECK(ppo::gaussian_entropy(std) == doctest::Approx(entropy).epsilon(1e-12));
    }
}

TEST_CASE("critic loss: perfect critic, constant targets, and gradient fidelity") {
    Rng rng(6);
    ppo::Agent agent = ppo::make_agent(3, 2, {8, 6}, codec::CodecKind::Binary, rng);

    Eigen::MatrixXd obs(3, 5);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 3; ++i) obs(i, j) = rng.normal();

    ppo::Batch batch;
    batch.observations = obs;
    batch.actions = Eigen::MatrixXd::Zero(2, 5);
    batch.log_probs_old = Eigen::VectorXd::Zero(5);
    batch.advantages = Eigen::VectorXd::Zero(5);
    batch.entropies_old = Eigen::VectorXd::Zero(5);
    batch.targets = nn::forward_batch(agent.critic, obs).row(0).transpose();
    CHECK(ppo::critic_loss(agent, batch) == doctest::Approx(0.0).epsilon(1e-15));

    ppo::Agent zero_agent = agent;
    zero_agent.critic = nn::Mlp::zeros(agent.critic.sizes);
    batch.targets = Eigen::VectorXd::Ones(5);
    CHECK(ppo::critic_loss(zero_agent, batch) == doctest::Approx(1.0).epsilon(1e-15));

    // finite differences through Eq.-style mean squared error
    for (int j = 0; j < 5; ++j) batch.targets(j) = rng.normal();
    std::vector<double> grad(agent.critic.param_count(), 0.0);
    ppo::critic_loss_with_grad(agent, batch, grad);
    auto loss = [&]() { return ppo::critic_loss(agent, batch); };
    const auto report = nn::gradient_check(agent.critic.params, grad, loss);
    CHECK(report.max_rel_error <= 1e-6);
}

TEST_CASE("actor loss: ratio one gives the mean advantage") {
    Rng rng(7);
    ppo::Agent agent = ppo::make_agent(3, 2, {8}, codec::CodecKind::Binary, rng);

    const int b = 6;
    ppo::Batch batch;
    batch.observations.resize(3, b);
    batch.actions.resize(2, b);
    batch.log_probs_old.resize(b);
    batch.advantages.resize(b);
    batch.entropies_old = Eigen::VectorXd::Zero(b);
    batch.targets = Eigen::VectorXd::Zero(b);
    for (int j = 0; j < b; ++j) {
        for (int i = 0; i < 3; ++i) batch.observations(i, j) = rng.normal();
        const nn::ActorOutput out = agent.policy(batch.observations.col(j));
        for (int i = 0; i < 2; ++i) batch.actions(i, j) = out.mean(i) + out.std(i) * rng.normal();
        batch.log_probs_old(j) =
            ppo::gaussian_log_density(batch.actions.col(j), out.mean, out.std);
        batch.advantages(j) = rng.normal();
    }
    const double loss = ppo::actor_loss(agent, batch, 0.2, 0.0);
    CHECK(loss == doctest::Approx(batch.advantages.mean()).epsilon(1e-12));
}

TEST_CASE("actor loss: positive advantage is capped at the clip ceiling") {
    Rng rng(8);
    ppo::Agent agent = ppo::make_agent(2, 1, {6}, codec::CodecKind::Binary, rng);

    ppo::Batch batch;
    batch.observations = Eigen::MatrixXd::Zero(2, 1);
    batch.observations << 0.3, -0.4;
    batch.actions = Eigen::MatrixXd::Zero(1, 1);
    const nn::ActorOutput out = agent.policy(batch.observations.col(0));
    batch.actions(0, 0) = out.mean(0) + 0.5 * out.std(0);
    const double logp_now =
        ppo::gaussian_log_density(batch.actions.col(0), out.mean, out.std);
    batch.log_probs_old = Eigen::VectorXd::Constant(1, logp_now - std::log(1.5));  // ratio 1.5
    batch.advantages = Eigen::VectorXd::Constant(1, 2.0);
    batch.entropies_old = Eigen::VectorXd::Constant(1, 0.7);
    batch.targets = Eigen::VectorXd::Zero(1);

    const double omega = 0.2, w = 0.01;
    const double loss = ppo::actor_loss(agent, batch, omega, w);
    CHECK(loss == doctest::Approx((1.0 + omega) * 2.0 + w * 0.7).epsilon(1e-12));
}

TEST_CASE("actor loss: bounded by the clip envelope on random instances") {
    Rng rng(9);
    ppo::Agent agent = ppo::make_agent(2, 2, {6}, codec::CodecKind::Binary, rng);
    for (int rep = 0; rep < 200; ++rep) {
        ppo::Batch batch;
        batch.observations.resize(2, 1);
        batch.observations << rng.normal(), rng.normal();
        const nn::ActorOutput out = agent.policy(batch.observations.col(0));
        batch.actions.resize(2, 1);
        for (int i = 0; i < 2; ++i) batch.actions(i, 0) = out.mean(i) + out.std(i) * rng.normal();
        const double logp = ppo::gaussian_log_density(batch.actions.col(0), out.mean, out.std);
        batch.log_probs_old = Eigen::VectorXd::Constant(1, logp + rng.uniform(-1.0, 1.0));
        batch.advantages = Eigen::VectorXd::Constant(1, rng.normal());
        batch.entropies_old = Eigen::VectorXd::Zero(1);
        batch.targets = Eigen::VectorXd::Zero(1);

        const double ratio = std::exp(logp - batch.log_probs_old(0));
        const double bound = std::max(ratio, 1.2) * std::abs(batch.advantages(0));
        CHECK(ppo::actor_loss(agent, batch, 0.2, 0.0) <= bound + 1e-12);
    }
}

TEST_CASE("actor loss: gradient matches finite differences") {
    Rng rng(10);
    ppo::Agent agent = ppo::make_agent(3, 2, {8}, codec::CodecKind::Binary, rng);

    const int b = 4;
    ppo::Batch batch;
    batch.observations.resize(3, b);
    batch.actions.resize(2, b);
    batch.log_probs_old.resize(b);
    batch.advantages.resize(b);
    batch.entropies_old.resize(b);
    batch.targets = Eigen::VectorXd::Zero(b);
    for (int j = 0; j < b; ++j) {
        for (int i = 0; i < 3; ++i) batch.observations(i, j) = rng.normal();
        const nn::ActorOutput out = agent.policy(batch.observations.col(j));
        for (int i = 0; i < 2; ++i) batch.actions(i, j) = out.mean(i) + out.std(i) * rng.normal();
        // offsets keep some ratios inside and some outside the clip band
        batch.log_probs_old(j) =
            ppo::gaussian_log_density(batch.actions.col(j), out.mean, out.std) +
            rng.uniform(-0.5, 0.5);
        batch.advantages(j) = rng.normal();
        batch.entropies_old(j) = rng.uniform(0.2, 0.8);
    }

    for (const bool entropy_from_current : {false, true}) {
        std::vector<double> grad(agent.actor.param_count(), 0.0);
        ppo::actor_loss_with_grad(agent, batch, 0.2, 0.01, entropy_from_current, grad);
        auto loss = [&]() { return ppo::actor_loss(agent, batch, 0.2, 0.01, entropy_from_current); };
        const auto report = nn::gradient_check(agent.actor.params, grad, loss);
        CHECK(report.max_rel_error <= 1e-6);
    }
}

TEST_CASE("collect_rollout: determinism, stored densities, episode length") {
    const env::EnvConfig cfg = testutil::make_env_config(3, 2, 200);
    Rng init(1);
    const ppo::Agent agent =
        ppo::make_agent(9, codec::action_dim(codec::CodecKind::Binary, 3, 2), {16, 8},
                        codec::CodecKind::Binary, init);

    env::Environment env_a(cfg, 42);
    env::Environment env_b(cfg, 42);
    Rng rng_a(9), rng_b(9);
    const ppo::Rollout a = ppo::collect_rollout(env_a, agent, 32, rng_a);
    const ppo::Rollout b = ppo::collect_rollout(env_b, agent, 32, rng_b);
    CHECK(a.length() == 32);
    CHECK(a.observations == b.observations);
    CHECK(a.actions == b.actions);
    CHECK(a.rewards == b.rewards);

    for (int t = 0; t < a.length(); ++t) {
        const nn::ActorOutput out = agent.policy(a.observations.col(t));
        const double recomputed =
            ppo::gaussian_log_density(a.actions.col(t), out.mean, out.std);
        CHECK(a.log_probs(t) == doctest::Approx(recomputed).epsilon(1e-12));
        CHECK(a.values(t) == doctest::Approx(agent.value(a.observations.col(t))).epsilon(1e-12));
    }

    CHECK(ppo::PpoConfig{}.rollout_steps == 128);
    CHECK(ppo::PpoConfig{}.minibatch == 128);
}

TEST_CASE("update: zero learning rates and zero advantages leave parameters fixed") {
    const env::EnvConfig cfg = testutil::make_env_config(3, 2, 201);
    Rng init(2);
    ppo::Agent agent =
        ppo::make_agent(9, codec::action_dim(codec::CodecKind::Binary, 3, 2), {12, 8},
                        codec::CodecKind::Binary, init);

    env::Environment environment(cfg, 5);
    Rng rng(3);
    const ppo::Rollout rollout = ppo::collect_rollout(environment, agent, 16, rng);

    ppo::PpoConfig cfg_zero_lr;
    cfg_zero_lr.minibatch = 16;
    cfg_zero_lr.rollout_steps = 16;
    cfg_zero_lr.actor_lr = 0.0;
    cfg_zero_lr.critic_lr = 0.0;
    {
        ppo::Agent copy = agent;
        nn::AdamState aopt(copy.actor.param_count(), 0.0), copt(copy.critic.param_count(), 0.0);
        Rng update_rng(4);
        ppo::update(copy, aopt, copt, rollout, cfg_zero_lr, update_rng);
        CHECK(copy.actor.params == agent.actor.params);
        CHECK(copy.critic.params == agent.critic.params);
    }
    {
        // a flat-zero value/reward rollout has zero advantages: with no entropy
        // gradient the actor must not move
        ppo::Rollout flat = rollout;
        flat.rewards.setZero();
        flat.values.setZero();
        flat.bootstrap_value = 0.0;
        ppo::Agent copy = agent;
        copy.critic = nn::Mlp::zeros(agent.critic.sizes);  // keeps values identically zero
        ppo::PpoConfig cfg_flat;
        cfg_flat.minibatch = 16;
        cfg_flat.rollout_steps = 16;
        cfg_flat.entropy_weight = 0.0;
        cfg_flat.normalize_advantages = false;
        const std::vector<double> before = copy.actor.params;
        nn::AdamState aopt(copy.actor.param_count(), 1e-3), copt(copy.critic.param_count(), 1e-3);
        Rng update_rng(5);
        ppo::update(copy, aopt, copt, flat, cfg_flat, update_rng);
        CHECK(copy.actor.params == before);
    }
    {
        ppo::PpoConfig bad;
        bad.minibatch = 64;  // larger than the rollout
        nn::AdamState aopt(agent.actor.param_count(), 1e-3), copt(agent.critic.param_count(), 1e-3);
        Rng update_rng(6);
        CHECK_THROWS(ppo::update(agent, aopt, copt, rollout, bad, update_rng));
    }
}

TEST_CASE("deploy_action: deterministic mean, bounded, std head ignored") {
    Rng init(11);
    ppo::Agent agent = ppo::make_agent(4, 3, {10, 6}, codec::CodecKind::Binary, init);
    Rng obs_rng(12);
    for (int rep = 0; rep < 50; ++rep) {
        Eigen::VectorXd obs(4);
        for (int i = 0; i < 4; ++i) obs(i) = obs_rng.normal();
        const Eigen::VectorXd a = agent.deploy_action(obs);
        const Eigen::VectorXd b = agent.deploy_action(obs);
        CHECK(a == b);
        for (int i = 0; i < 3; ++i) {
            CHECK(a(i) >= -1.0);
            CHECK(a(i) <= 1.0);
        }
        // perturbing the std half of the output layer leaves the mean untouched
        ppo::Agent tweaked = agent;
        const int last = tweaked.actor.num_layers() - 1;
        tweaked.actor.bias(last).tail(3).setConstant(5.0);
        CHECK(tweaked.deploy_action(obs) == a);
    }
}

TEST_CASE("train: smoke run is deterministic and sized correctly") {
    CHECK(ppo::episode_count_formula(6, 3) == 2122);

    const env::EnvConfig cfg = testutil::make_env_config(2, 1, 202);
    ppo::PpoConfig pcfg;
    pcfg.episodes = 3;
    pcfg.rollout_steps = 16;
    pcfg.minibatch = 16;
    pcfg.eval_every = 2;
    pcfg.eval_steps = 20;

    const ppo::TrainResult a = ppo::train(cfg, pcfg, codec::CodecKind::Binary, 7, 8, 9);
    const ppo::TrainResult b = ppo::train(cfg, pcfg, codec::CodecKind::Binary, 7, 8, 9);
    CHECK(a.curve.size() == 3);
    CHECK_FALSE(a.diverged);
    for (size_t e = 0; e < a.curve.size(); ++e) {
        CHECK(a.curve[e].episode_return == b.curve[e].episode_return);
        CHECK(a.curve[e].actor_loss == b.curve[e].actor_loss);
        CHECK(a.curve[e].critic_loss == b.curve[e].critic_loss);
        CHECK(a.curve[e].entropy == b.curve[e].entropy);
    }
    CHECK(a.agent.actor.params == b.agent.actor.params);
    CHECK(std::isfinite(a.best_eval_mse));

    // naive codec trains against the same surface with its own action size
    const ppo::TrainResult naive = ppo::train(cfg, pcfg, codec::CodecKind::Naive, 7, 8, 9);
    CHECK(naive.agent.act_dim == codec::naive_action_dim(2));
    CHECK_FALSE(naive.diverged);
}
