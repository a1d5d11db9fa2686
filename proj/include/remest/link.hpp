#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "remest/rng.hpp"

namespace remest::link {

// Short-packet coding parameters.
struct CodeParams {
    double bits_per_symbol = 2.0;  // code rate b/l
    int blocklength = 200;         // l, symbols per packet
    double noise_power = 1e-9;     // sigma^2, linear W
};

// Per-slot decoding result for all sensors. Non-transmitting sensors carry
// failure probability 1 and SINR 0.
struct DecodeOutcome {
    Eigen::VectorXd failure_probs;
    Eigen::VectorXd sinrs;
    std::vector<int> order;  // transmitting sensors, decreasing received power
};

// Gaussian Q-function, Q(x) = P[N(0,1) > x].
double q_function(double x);

// Finite-blocklength decoding failure probability at SNR gamma:
// Q((C(gamma) - b/l) / sqrt(V(gamma)/l)) with C = log2(1+gamma) and
// V = (1 - (1+gamma)^-2) (log2 e)^2. Returns 1 for gamma below 1e-12.
double packet_error_prob(double gamma, const CodeParams& code);

// Global decoding order: transmitting sensors by decreasing received power,
// ties broken by ascending sensor index. assignments[n] in {0..M}, 0 = idle.
std::vector<int> sic_order(std::span<const double> received_powers,
                           std::span<const int> assignments);

// SINR for decoding the given sensor: interference from co-channel sensors
// that come later in the order.
double sinr(int sensor, std::span<const int> order, std::span<const int> assignments,
            std::span<const double> received_powers, double noise_power);

// Analytic per-sensor failure probabilities under sequential SIC: a packet is
// lost when any stronger co-channel packet is lost (no cancellation possible)
// or its own decode at SINR gamma_n fails.
DecodeOutcome decode_failure_probs(std::span<const int> assignments,
                                   std::span<const double> received_powers,
                                   const CodeParams& code);

// Stochastic reception consistent with decode_failure_probs: per channel, walk
// the SIC order drawing Bernoulli(1 - eps(gamma)) successes; the first failure
// in a channel fails every later co-channel sensor.
std::vector<uint8_t> sample_receptions(std::span<const int> assignments,
                                       std::span<const double> received_powers,
                                       const CodeParams& code, Rng& rng);

}  // namespace remest::link
