#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "remest/dqn.hpp"
#include "remest/env.hpp"
#include "remest/ppo.hpp"

#include <json.hpp>

namespace remest::harness {

struct PlantGenConfig {
    int state_dim = 2;
    int meas_dim = 2;
    double radius_lo = 1.0;
    double radius_hi = 1.3;
};

// Complete description of one experiment; serialized as versioned JSON.
struct ExperimentConfig {
    int version = 1;
    uint64_t seed = 1;  // master seed; stream seeds derive from it unless overridden

    // environment block
    int sensors = 6;
    int channels = 3;
    std::vector<double> gain_levels;  // empty: default eight-decade set
    double persistence = 0.5;
    PlantGenConfig plant;
    int aoi_cap = 200;
    std::optional<uint64_t> env_seed;

    // code block
    double code_rate = 2.0;
    int blocklength = 200;
    double noise_power_dbm = -60.0;
    double p_max_dbm = 23.0;

    // agent block
    std::string algorithm = "ppo-binary";  // ppo-binary | ppo-naive | dqn-oma | random | round-robin
    ppo::PpoConfig ppo;
    dqn::DqnConfig dqn;
    std::optional<uint64_t> agent_seed;
    std::optional<uint64_t> explore_seed;

    // eval block
    long eval_steps = 10000;
    std::optional<uint64_t> eval_seed;

    uint64_t resolved_env_seed() const { return env_seed.value_or(derive_seed(seed, 1)); }
    uint64_t resolved_agent_seed() const { return agent_seed.value_or(derive_seed(seed, 2)); }
    uint64_t resolved_explore_seed() const { return explore_seed.value_or(derive_seed(seed, 3)); }
    uint64_t resolved_eval_seed() const { return eval_seed.value_or(derive_seed(seed, 4)); }
};

double dbm_to_watt(double dbm);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

// FNV-1a over the canonical serialization; stable across formatting changes.
uint64_t config_hash(const ExperimentConfig& cfg);

// Generates plants, covariances, and the channel model from the environment
// stream seed.
env::EnvConfig build_env_config(const ExperimentConfig& cfg);

}  // namespace remest::harness
