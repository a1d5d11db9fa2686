#pragma once

#include <optional>
#include <string>

#include "remest/dqn.hpp"
#include "remest/ppo.hpp"

namespace remest::checkpoint {

// Checkpoints hold flat little-endian 64-bit float arrays plus a JSON shape
// manifest, so they load identically across platforms.

void save_ppo_agent(const ppo::Agent& agent, int sensors, int channels,
                    const std::string& algorithm, const std::string& path);
void save_dqn_agent(const dqn::Agent& agent, int sensors, int channels, const std::string& path);

struct LoadedCheckpoint {
    std::string algorithm;
    int sensors = 0;
    int channels = 0;
    std::optional<ppo::Agent> ppo_agent;
    std::optional<dqn::Agent> dqn_agent;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace remest::checkpoint
