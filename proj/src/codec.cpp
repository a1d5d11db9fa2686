#include "remest/codec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace remest::codec {

int selection_bits(int num_channels) {
    if (num_channels < 1) throw std::invalid_argument("selection_bits: need at least 1 channel");
    int bits = 0;
    while ((1 << bits) < num_channels + 1) ++bits;
    return bits;
}

int virtual_action_dim(int num_sensors, int num_channels) {
    return num_sensors * (selection_bits(num_channels) + 1);
}

int naive_action_dim(int num_sensors) { return 2 * num_sensors; }

int action_dim(CodecKind kind, int num_sensors, int num_channels) {
    return kind == CodecKind::Binary ? virtual_action_dim(num_sensors, num_channels)
                                     : naive_action_dim(num_sensors);
}

int decode_selection(std::span<const double> coords, int num_channels) {
    const int bits = selection_bits(num_channels);
    if (static_cast<int>(coords.size()) != bits)
        throw std::invalid_argument("decode_selection: wrong coordinate count");
    int value = 0;
    for (int j = 0; j < bits; ++j) {
        value <<= 1;
        if (coords[j] > 0.0) value |= 1;  // coordinate exactly 0 reads as bit 0
    }
    return value % (num_channels + 1);
}

std::vector<double> encode_selection(int choice, int num_channels) {
    if (choice < 0 || choice > num_channels)
        throw std::invalid_argument("encode_selection: choice out of range");
    const int bits = selection_bits(num_channels);
    std::vector<double> coords(bits);
    for (int j = 0; j < bits; ++j)
        coords[j] = (choice >> (bits - 1 - j)) & 1 ? 1.0 : -1.0;
    return coords;
}

double decode_power(double p_virtual, double p_max) {
    const double clamped = std::clamp(p_virtual, -1.0, 1.0);
    return p_max * (clamped + 1.0) / 2.0;
}

RealAction decode_virtual_action(std::span<const double> v, int num_sensors,
                                 int num_channels, double p_max) {
    const int bits = selection_bits(num_channels);
    const int per_sensor = bits + 1;
    if (static_cast<int>(v.size()) != num_sensors * per_sensor)
        throw std::invalid_argument("decode_virtual_action: wrong action length");

    RealAction action;
    action.selection.resize(num_sensors);
    action.power.resize(num_sensors);
    for (int n = 0; n < num_sensors; ++n) {
        const auto coords = v.subspan(static_cast<size_t>(n) * per_sensor, bits);
        const int choice = decode_selection(coords, num_channels);
        action.selection[n] = choice;
        action.power[n] =
            choice == 0 ? 0.0 : decode_power(v[static_cast<size_t>(n) * per_sensor + bits], p_max);
    }
    return action;
}

int naive_decode(double scalar, int num_channels) {
    const double x = std::clamp(scalar, -1.0, 1.0);
    const double width = 2.0 / (num_channels + 1);
    if (x <= -1.0) return 0;
    const int bin = static_cast<int>(std::ceil((x + 1.0) / width)) - 1;
    return std::clamp(bin, 0, num_channels);
}

RealAction decode_naive_action(std::span<const double> v, int num_sensors,
                               int num_channels, double p_max) {
    if (static_cast<int>(v.size()) != naive_action_dim(num_sensors))
        throw std::invalid_argument("decode_naive_action: wrong action length");
    RealAction action;
    action.selection.resize(num_sensors);
    action.power.resize(num_sensors);
    for (int n = 0; n < num_sensors; ++n) {
        const int choice = naive_decode(v[2 * static_cast<size_t>(n)], num_channels);
        action.selection[n] = choice;
        action.power[n] = choice == 0 ? 0.0 : decode_power(v[2 * static_cast<size_t>(n) + 1], p_max);
    }
    return action;
}

RealAction decode_action(CodecKind kind, std::span<const double> v, int num_sensors,
                         int num_channels, double p_max) {
    return kind == CodecKind::Binary
               ? decode_virtual_action(v, num_sensors, num_channels, p_max)
               : decode_naive_action(v, num_sensors, num_channels, p_max);
}

}  // namespace remest::codec
