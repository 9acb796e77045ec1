#pragma once

#include <span>

namespace aoi::fbc {

// Per-subchannel physical layer description. All quantities linear SI units.
struct ChannelModel {
    double path_loss_exponent = 3.0;
    double noise_power = 1e-9;          // W
    double frame_duration = 0.1;        // s
    double subchannel_bandwidth = 1e5;  // Hz
    int blocklength = 400;              // channel uses per codeword
    double message_bits = 100.0;        // log2(M)

    // Throws std::domain_error naming the first violated invariant.
    void validate() const;
};

struct Position {
    double x = 0.0;
    double y = 0.0;
};

struct LinkState {
    Position position;
    double fading_gain = 1.0;     // |h|^2
    double transmit_power = 0.0;  // W

    double distance() const;
};

// Signal power at the receiver: P d^-path_loss |h|^2.
double received_power(const LinkState& link, double path_loss_exponent);

double sinr(const LinkState& target, std::span<const LinkState> interferers, const ChannelModel& model);

// Shannon capacity in bits per channel use.
double capacity(double snr);

// Channel dispersion of the AWGN channel, in [0, 1).
double dispersion(double snr);

// Gaussian tail P(Z > x).
double q_function(double x);

// Normal-approximation block error rate of an (n, M) code at the given SINR.
// Zero SINR with a positive rate is a certain failure.
double decode_error(double snr, int blocklength, double message_bits);

// Whole codewords that fit in one frame on this subchannel.
int rb_count(const ChannelModel& model);

}  // namespace aoi::fbc
