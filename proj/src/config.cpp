#include "remest/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace remest::harness {

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

namespace {

nlohmann::json ppo_to_json(const ppo::PpoConfig& p) {
    return {{"discount", p.discount},
            {"smoothing", p.smoothing},
            {"clip", p.clip},
            {"entropy_weight", p.entropy_weight},
            {"minibatch", p.minibatch},
            {"rollout_steps", p.rollout_steps},
            {"actor_lr", p.actor_lr},
            {"critic_lr", p.critic_lr},
            {"update_epochs", p.update_epochs},
            {"episodes", p.episodes},
            {"normalize_advantages", p.normalize_advantages},
            {"entropy_from_current", p.entropy_from_current},
            {"critic_target_plus_value", p.critic_target_plus_value},
            {"eval_every", p.eval_every},
            {"eval_steps", p.eval_steps}};
}

ppo::PpoConfig ppo_from_json(const nlohmann::json& j) {
    ppo::PpoConfig p;
    p.discount = j.value("discount", p.discount);
    p.smoothing = j.value("smoothing", p.smoothing);
    p.clip = j.value("clip", p.clip);
    p.entropy_weight = j.value("entropy_weight", p.entropy_weight);
    p.minibatch = j.value("minibatch", p.minibatch);
    p.rollout_steps = j.value("rollout_steps", p.rollout_steps);
    p.actor_lr = j.value("actor_lr", p.actor_lr);
    p.critic_lr = j.value("critic_lr", p.critic_lr);
    p.update_epochs = j.value("update_epochs", p.update_epochs);
    p.episodes = j.value("episodes", p.episodes);
    p.normalize_advantages = j.value("normalize_advantages", p.normalize_advantages);
    p.entropy_from_current = j.value("entropy_from_current", p.entropy_from_current);
    p.critic_target_plus_value = j.value("critic_target_plus_value", p.critic_target_plus_value);
    p.eval_every = j.value("eval_every", p.eval_every);
    p.eval_steps = j.value("eval_steps", p.eval_steps);
    if (p.discount <= 0.0 || p.discount >= 1.0)
        throw std::invalid_argument("config: ppo.discount must lie in (0, 1)");
    if (p.smoothing <= 0.0 || p.smoothing >= 1.0)
        throw std::invalid_argument("config: ppo.smoothing must lie in (0, 1)");
    if (p.clip <= 0.0) throw std::invalid_argument("config: ppo.clip must be positive");
    return p;
}

nlohmann::json dqn_to_json(const dqn::DqnConfig& d) {
    return {{"lr", d.lr},
            {"discount", d.discount},
            {"epsilon_initial", d.epsilon.initial},
            {"epsilon_decay", d.epsilon.decay},
            {"epsilon_min", d.epsilon.floor},
            {"minibatch", d.minibatch},
            {"buffer_capacity", d.buffer_capacity},
            {"target_refresh", d.target_refresh},
            {"update_every", d.update_every},
            {"episodes", d.episodes},
            {"rollout_steps", d.rollout_steps},
            {"eval_every", d.eval_every},
            {"eval_steps", d.eval_steps}};
}

dqn::DqnConfig dqn_from_json(const nlohmann::json& j) {
    dqn::DqnConfig d;
    d.lr = j.value("lr", d.lr);
    d.discount = j.value("discount", d.discount);
    d.epsilon.initial = j.value("epsilon_initial", d.epsilon.initial);
    d.epsilon.decay = j.value("epsilon_decay", d.epsilon.decay);
    d.epsilon.floor = j.value("epsilon_min", d.epsilon.floor);
    d.minibatch = j.value("minibatch", d.minibatch);
    d.buffer_capacity = j.value("buffer_capacity", d.buffer_capacity);
    d.target_refresh = j.value("target_refresh", d.target_refresh);
    d.update_every = j.value("update_every", d.update_every);
    d.episodes = j.value("episodes", d.episodes);
    d.rollout_steps = j.value("rollout_steps", d.rollout_steps);
    d.eval_every = j.value("eval_every", d.eval_every);
    d.eval_steps = j.value("eval_steps", d.eval_steps);
    return d;
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json env{{"sensors", cfg.sensors},
                       {"channels", cfg.channels},
                       {"persistence", cfg.persistence},
                       {"aoi_cap", cfg.aoi_cap},
                       {"plant",
                        {{"state_dim", cfg.plant.state_dim},
                         {"meas_dim", cfg.plant.meas_dim},
                         {"radius_min", cfg.plant.radius_lo},
                         {"radius_max", cfg.plant.radius_hi}}}};
    if (!cfg.gain_levels.empty()) env["gain_levels"] = cfg.gain_levels;
    if (cfg.env_seed) env["seed"] = *cfg.env_seed;

    nlohmann::json agent{{"algorithm", cfg.algorithm},
                         {"ppo", ppo_to_json(cfg.ppo)},
                         {"dqn", dqn_to_json(cfg.dqn)}};
    if (cfg.agent_seed) agent["seed"] = *cfg.agent_seed;
    if (cfg.explore_seed) agent["explore_seed"] = *cfg.explore_seed;

    nlohmann::json eval{{"steps", cfg.eval_steps}};
    if (cfg.eval_seed) eval["seed"] = *cfg.eval_seed;

    return {{"version", cfg.version},
            {"seed", cfg.seed},
            {"env", env},
            {"code",
             {{"code_rate", cfg.code_rate},
              {"blocklength", cfg.blocklength},
              {"noise_power_dbm", cfg.noise_power_dbm},
              {"p_max_dbm", cfg.p_max_dbm}}},
            {"agent", agent},
            {"eval", eval}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.version = j.value("version", 1);
    if (cfg.version != 1)
        throw std::invalid_argument("config: unsupported schema version " +
                                    std::to_string(cfg.version));
    cfg.seed = j.value("seed", cfg.seed);

    if (!j.contains("env")) throw std::invalid_argument("config: missing env block");
    const auto& env = j.at("env");
    cfg.sensors = env.at("sensors").get<int>();
    cfg.channels = env.at("channels").get<int>();
    if (cfg.sensors <= cfg.channels || cfg.channels < 1)
        throw std::invalid_argument("config: requires sensors > channels >= 1");
    cfg.persistence = env.value("persistence", cfg.persistence);
    cfg.aoi_cap = env.value("aoi_cap", cfg.aoi_cap);
    if (env.contains("gain_levels")) cfg.gain_levels = env.at("gain_levels").get<std::vector<double>>();
    if (env.contains("seed")) cfg.env_seed = env.at("seed").get<uint64_t>();
    if (env.contains("plant")) {
        const auto& plant = env.at("plant");
        cfg.plant.state_dim = plant.value("state_dim", cfg.plant.state_dim);
        cfg.plant.meas_dim = plant.value("meas_dim", cfg.plant.meas_dim);
        cfg.plant.radius_lo = plant.value("radius_min", cfg.plant.radius_lo);
        cfg.plant.radius_hi = plant.value("radius_max", cfg.plant.radius_hi);
    }

    if (j.contains("code")) {
        const auto& code = j.at("code");
        cfg.code_rate = code.value("code_rate", cfg.code_rate);
        cfg.blocklength = code.value("blocklength", cfg.blocklength);
        cfg.noise_power_dbm = code.value("noise_power_dbm", cfg.noise_power_dbm);
        cfg.p_max_dbm = code.value("p_max_dbm", cfg.p_max_dbm);
    }

    if (j.contains("agent")) {
        const auto& agent = j.at("agent");
        cfg.algorithm = agent.value("algorithm", cfg.algorithm);
        if (agent.contains("ppo")) cfg.ppo = ppo_from_json(agent.at("ppo"));
        if (agent.contains("dqn")) cfg.dqn = dqn_from_json(agent.at("dqn"));
        if (agent.contains("seed")) cfg.agent_seed = agent.at("seed").get<uint64_t>();
        if (agent.contains("explore_seed"))
            cfg.explore_seed = agent.at("explore_seed").get<uint64_t>();
    }
    const bool known = cfg.algorithm == "ppo-binary" || cfg.algorithm == "ppo-naive" ||
                       cfg.algorithm == "dqn-oma" || cfg.algorithm == "random" ||
                       cfg.algorithm == "round-robin";
    if (!known) throw std::invalid_argument("config: unknown algorithm '" + cfg.algorithm + "'");

    if (j.contains("eval")) {
        const auto& eval = j.at("eval");
        cfg.eval_steps = eval.value("steps", cfg.eval_steps);
        if (eval.contains("seed")) cfg.eval_seed = eval.at("seed").get<uint64_t>();
    }
    if (cfg.eval_steps < 1) throw std::invalid_argument("config: eval.steps must be positive");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config file: " + path);
    out << to_json(cfg).dump(2) << "\n";
}

uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string canonical = to_json(cfg).dump();
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

env::EnvConfig build_env_config(const ExperimentConfig& cfg) {
    Rng rng(derive_seed(cfg.resolved_env_seed(), 0x6E9));

    env::EnvConfig out;
    out.num_sensors = cfg.sensors;
    out.num_channels = cfg.channels;
    out.aoi_cap = cfg.aoi_cap;
    out.p_max = dbm_to_watt(cfg.p_max_dbm);
    out.code = link::CodeParams{cfg.code_rate, cfg.blocklength, dbm_to_watt(cfg.noise_power_dbm)};

    for (int i = 0; i < cfg.sensors; ++i) {
        out.plants.push_back(plant::generate_random_plant(
            cfg.plant.state_dim, cfg.plant.meas_dim, cfg.plant.radius_lo, cfg.plant.radius_hi, rng));
        out.covariances.push_back(plant::solve_steady_state_covariance(out.plants.back()));
    }

    Eigen::VectorXd levels;
    if (cfg.gain_levels.empty()) {
        levels = channel::default_gain_levels();
    } else {
        levels = Eigen::Map<const Eigen::VectorXd>(cfg.gain_levels.data(),
                                                   static_cast<Eigen::Index>(cfg.gain_levels.size()));
    }
    out.channel_model = channel::generate_random_channel_model(cfg.sensors, cfg.channels, levels,
                                                               cfg.persistence, rng);
    return out;
}

}  // namespace remest::harness
