#include "remest/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace remest::checkpoint {

namespace {

constexpr char kMagic[8] = {'R', 'S', 'E', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[i]) << (8 * i);
    return v;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    for (double d : values) {
        const auto u = std::bit_cast<uint64_t>(d);
        char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xff);
        out.write(bytes, 8);
    }
}

std::vector<double> read_doubles(std::istream& in, size_t count) {
    std::vector<double> values(count);
    for (size_t k = 0; k < count; ++k) {
        unsigned char bytes[8];
        in.read(reinterpret_cast<char*>(bytes), 8);
        uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(bytes[i]) << (8 * i);
        values[k] = std::bit_cast<double>(u);
    }
    return values;
}

nlohmann::json net_manifest(const std::string& name, const nn::Mlp& net) {
    return {{"name", name},
            {"sizes", net.sizes},
            {"relu_output", net.relu_output},
            {"count", net.param_count()}};
}

void write_file(const std::string& path, const nlohmann::json& header,
                const std::vector<const std::vector<double>*>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    const std::string header_str = header.dump();
    write_u32(out, static_cast<uint32_t>(header_str.size()));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto* arr : payload) write_doubles(out, *arr);
    if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

nn::Mlp read_net(const nlohmann::json& manifest, std::istream& in) {
    nn::Mlp net = nn::Mlp::zeros(manifest.at("sizes").get<std::vector<int>>(),
                                 manifest.value("relu_output", false));
    const auto count = manifest.at("count").get<size_t>();
    if (count != net.param_count())
        throw std::runtime_error("checkpoint manifest count does not match the layer sizes");
    net.params = read_doubles(in, count);
    return net;
}

}  // namespace

void save_ppo_agent(const ppo::Agent& agent, int sensors, int channels,
                    const std::string& algorithm, const std::string& path) {
    nlohmann::json header{
        {"version", 1},
        {"algorithm", algorithm},
        {"sensors", sensors},
        {"channels", channels},
        {"act_dim", agent.act_dim},
        {"codec", agent.codec == codec::CodecKind::Binary ? "binary" : "naive"},
        {"arrays",
         nlohmann::json::array(
             {net_manifest("actor", agent.actor), net_manifest("critic", agent.critic)})}};
    write_file(path, header, {&agent.actor.params, &agent.critic.params});
}

void save_dqn_agent(const dqn::Agent& agent, int sensors, int channels, const std::string& path) {
    nlohmann::json header{{"version", 1},
                          {"algorithm", "dqn-oma"},
                          {"sensors", sensors},
                          {"channels", channels},
                          {"arrays", nlohmann::json::array({net_manifest("qnet", agent.qnet)})}};
    write_file(path, header, {&agent.qnet.params});
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || !std::equal(magic, magic + 8, kMagic))
        throw std::runtime_error("not a checkpoint file: " + path);
    const uint32_t header_len = read_u32(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), header_len);
    const nlohmann::json header = nlohmann::json::parse(header_str);
    if (header.value("version", 0) != 1)
        throw std::runtime_error("unsupported checkpoint version in " + path);

    LoadedCheckpoint loaded;
    loaded.algorithm = header.at("algorithm").get<std::string>();
    loaded.sensors = header.at("sensors").get<int>();
    loaded.channels = header.at("channels").get<int>();

    if (loaded.algorithm == "dqn-oma") {
        dqn::Agent agent;
        agent.qnet = read_net(header.at("arrays").at(0), in);
        agent.actions = dqn::enumerate_oma_actions(loaded.sensors, loaded.channels);
        if (agent.qnet.output_dim() != agent.actions.size())
            throw std::runtime_error("checkpoint q-network does not match the action space");
        loaded.dqn_agent = std::move(agent);
    } else {
        ppo::Agent agent;
        agent.actor = read_net(header.at("arrays").at(0), in);
        agent.critic = read_net(header.at("arrays").at(1), in);
        agent.act_dim = header.at("act_dim").get<int>();
        agent.codec = header.value("codec", "binary") == "naive" ? codec::CodecKind::Naive
                                                                 : codec::CodecKind::Binary;
        loaded.ppo_agent = std::move(agent);
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return loaded;
}

}  // namespace remest::checkpoint
