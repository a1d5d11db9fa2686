#pragma once

#include <span>
#include <vector>

namespace remest::codec {

// Hybrid environment action: per-sensor channel choice (0 = idle) and
// transmit power in [0, p_max]. Idle sensors always carry power 0.
struct RealAction {
    std::vector<int> selection;
    std::vector<double> power;
};

enum class CodecKind { Binary, Naive };

// Bits needed to address M+1 channel choices.
int selection_bits(int num_channels);

// Binary codec action length: N * (selection_bits(M) + 1).
int virtual_action_dim(int num_sensors, int num_channels);

// Naive codec action length: one selection scalar plus one power scalar per sensor.
int naive_action_dim(int num_sensors);

int action_dim(CodecKind kind, int num_sensors, int num_channels);

// Sign-binary decoding, most significant bit first: coord > 0 reads as bit 1.
// Codes beyond M are reduced modulo M+1 so the mapping is total.
int decode_selection(std::span<const double> coords, int num_channels);

// Canonical +-1 pattern with decode_selection(encode_selection(c)) == c.
std::vector<double> encode_selection(int choice, int num_channels);

// p_max * (clamp(p, -1, 1) + 1) / 2
double decode_power(double p_virtual, double p_max);

// Binary codec: per sensor, selection_bits(M) sign coordinates followed by one
// power coordinate.
RealAction decode_virtual_action(std::span<const double> v, int num_sensors,
                                 int num_channels, double p_max);

// Baseline scalar codec: clamp to [-1, 1] and split into M+1 equal bins,
// boundaries assigned to the lower bin.
int naive_decode(double scalar, int num_channels);

// Naive codec: per sensor, one selection scalar followed by one power scalar.
RealAction decode_naive_action(std::span<const double> v, int num_sensors,
                               int num_channels, double p_max);

RealAction decode_action(CodecKind kind, std::span<const double> v, int num_sensors,
                         int num_channels, double p_max);

}  // namespace remest::codec
