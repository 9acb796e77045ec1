#include "aoi/fbc_channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aoi::fbc {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::domain_error(what);
}

}  // namespace

void ChannelModel::validate() const {
    require(path_loss_exponent > 0.0, "path_loss_exponent must be > 0");
    require(noise_power > 0.0, "noise_power must be > 0");
    require(frame_duration > 0.0, "frame_duration must be > 0");
    require(subchannel_bandwidth > 0.0, "subchannel_bandwidth must be > 0");
    require(blocklength >= 1, "blocklength must be >= 1");
    require(message_bits > 0.0, "message_bits must be > 0");
}

double LinkState::distance() const {
    return std::hypot(position.x, position.y);
}

double received_power(const LinkState& link, double path_loss_exponent) {
    const double d = link.distance();
    require(d > 0.0, "link distance must be > 0");
    require(link.fading_gain >= 0.0, "fading gain must be >= 0");
    require(link.transmit_power >= 0.0, "transmit power must be >= 0");
    return link.transmit_power * std::pow(d, -path_loss_exponent) * link.fading_gain;
}

double sinr(const LinkState& target, std::span<const LinkState> interferers, const ChannelModel& model) {
    require(model.noise_power > 0.0, "noise power must be > 0");
    double interference = 0.0;
    for (const auto& j : interferers) interference += received_power(j, model.path_loss_exponent);
    return received_power(target, model.path_loss_exponent) / (interference + model.noise_power);
}

double capacity(double snr) {
    require(snr >= 0.0, "SINR must be >= 0");
    return std::log2(1.0 + snr);
}

double dispersion(double snr) {
    require(snr >= 0.0, "SINR must be >= 0");
    const double a = 1.0 + snr;
    return 1.0 - 1.0 / (a * a);
}

double q_function(double x) {
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double decode_error(double snr, int blocklength, double message_bits) {
    require(snr >= 0.0, "SINR must be >= 0");
    require(blocklength >= 1, "blocklength must be >= 1");
    require(message_bits > 0.0, "message_bits must be > 0");
    if (snr == 0.0) return 1.0;

    const double n = static_cast<double>(blocklength);
    const double v = dispersion(snr);
    // dispersion underflows only for denormal SINR; the argument is then -inf.
    if (v <= 0.0) return 1.0;
    const double arg = (capacity(snr) - message_bits / n) / std::sqrt(v / n);
    const double eps = q_function(arg);
    return eps < 0.0 ? 0.0 : (eps > 1.0 ? 1.0 : eps);
}

int rb_count(const ChannelModel& model) {
    model.validate();
    const double uses = model.frame_duration * model.subchannel_bandwidth;
    // 1e-9 absorbs representation error in products like 0.3 * 1e5.
    const double blocks = std::floor(uses / model.blocklength + 1e-9);
    if (blocks < 1.0)
        throw std::domain_error("frame carries fewer channel uses (" + std::to_string(uses) +
                                ") than one codeword (" + std::to_string(model.blocklength) + ")");
    return static_cast<int>(blocks);
}

}  // namespace aoi::fbc
