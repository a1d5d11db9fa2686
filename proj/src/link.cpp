#include "remest/link.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace remest::link {

namespace {

constexpr double kGammaMin = 1e-12;  // below this, error probability is 1
constexpr double kLog2E = 1.4426950408889634073599246810019;

bool transmits(std::span<const int> assignments, std::span<const double> powers, int n) {
    return assignments[n] > 0 && powers[n] > 0.0;
}

void check_inputs(std::span<const int> assignments, std::span<const double> powers) {
    if (assignments.size() != powers.size())
        throw std::invalid_argument("link: assignments/powers size mismatch");
    for (size_t n = 0; n < powers.size(); ++n) {
        if (powers[n] < 0.0) throw std::invalid_argument("link: negative received power");
        if (assignments[n] < 0) throw std::invalid_argument("link: negative channel index");
    }
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x * 0.70710678118654752440084436210485); }

double packet_error_prob(double gamma, const CodeParams& code) {
    if (gamma < 0.0) throw std::invalid_argument("packet_error_prob: gamma must be >= 0");
    if (code.blocklength < 1 || code.bits_per_symbol <= 0.0 || code.noise_power <= 0.0)
        throw std::invalid_argument("packet_error_prob: bad code parameters");
    if (gamma <= kGammaMin) return 1.0;

    const double capacity = std::log2(1.0 + gamma);
    const double inv = 1.0 / (1.0 + gamma);
    const double dispersion = (1.0 - inv * inv) * kLog2E * kLog2E;
    const double z = (capacity - code.bits_per_symbol) /
                     std::sqrt(dispersion / static_cast<double>(code.blocklength));
    return q_function(z);
}

std::vector<int> sic_order(std::span<const double> received_powers,
                           std::span<const int> assignments) {
    check_inputs(assignments, received_powers);
    std::vector<int> order;
    for (size_t n = 0; n < received_powers.size(); ++n)
        if (transmits(assignments, received_powers, static_cast<int>(n)))
            order.push_back(static_cast<int>(n));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (received_powers[a] != received_powers[b])
            return received_powers[a] > received_powers[b];
        return a < b;  // deterministic tie-break
    });
    return order;
}

double sinr(int sensor, std::span<const int> order, std::span<const int> assignments,
            std::span<const double> received_powers, double noise_power) {
    double interference = 0.0;
    bool past_sensor = false;
    for (int i : order) {
        if (i == sensor) {
            past_sensor = true;
            continue;
        }
        if (past_sensor && assignments[i] == assignments[sensor])
            interference += received_powers[i];
    }
    if (!past_sensor) throw std::invalid_argument("sinr: sensor not in decoding order");
    return received_powers[sensor] / (interference + noise_power);
}

DecodeOutcome decode_failure_probs(std::span<const int> assignments,
                                   std::span<const double> received_powers,
                                   const CodeParams& code) {
    check_inputs(assignments, received_powers);
    const int n_sensors = static_cast<int>(assignments.size());

    DecodeOutcome out;
    out.failure_probs = Eigen::VectorXd::Ones(n_sensors);
    out.sinrs = Eigen::VectorXd::Zero(n_sensors);
    out.order = sic_order(received_powers, assignments);

    int max_channel = 0;
    for (int a : assignments) max_channel = std::max(max_channel, a);

    // Per channel, the chance that the decoder reaches and decodes sensor n is
    // the product of own-decode successes of every stronger co-channel sensor
    // and of n itself.
    std::vector<double> prefix_success(static_cast<size_t>(max_channel) + 1, 1.0);
    for (int n : out.order) {
        const double g = sinr(n, out.order, assignments, received_powers, code.noise_power);
        out.sinrs(n) = g;
        const double own_success = 1.0 - packet_error_prob(g, code);
        double& channel_prefix = prefix_success[assignments[n]];
        channel_prefix *= own_success;
        out.failure_probs(n) = 1.0 - channel_prefix;
    }
    return out;
}

std::vector<uint8_t> sample_receptions(std::span<const int> assignments,
                                       std::span<const double> received_powers,
                                       const CodeParams& code, Rng& rng) {
    check_inputs(assignments, received_powers);
    const int n_sensors = static_cast<int>(assignments.size());
    std::vector<uint8_t> success(n_sensors, 0);

    int max_channel = 0;
    for (int a : assignments) max_channel = std::max(max_channel, a);

    const std::vector<int> order = sic_order(received_powers, assignments);
    std::vector<uint8_t> channel_blocked(static_cast<size_t>(max_channel) + 1, 0);
    for (int n : order) {
        uint8_t& blocked = channel_blocked[assignments[n]];
        if (blocked) continue;  // decoder already stopped on this channel
        const double g = sinr(n, order, assignments, received_powers, code.noise_power);
        const double eps = packet_error_prob(g, code);
        if (rng.bernoulli(1.0 - eps)) {
            success[n] = 1;
        } else {
            blocked = 1;
        }
    }
    return success;
}

}  // namespace remest::link
