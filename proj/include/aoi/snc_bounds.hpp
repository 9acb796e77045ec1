#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string_view>

namespace aoi::snc {

// Natural-log factor that converts a service increment measured in bits into
// the exponent of the Mellin domain. With it, an error-free link has an
// effective capacity equal to its coding rate.
inline constexpr double kScaling = 0.69314718055994530942;

// How lambda enters the interarrival transform.
//   mean  lambda is the mean interarrival time (transform 1/(1 - lambda theta))
//   rate  lambda is the arrival rate (transform 1/(1 - theta / lambda))
enum class InterarrivalParam { mean, rate };

// Units of the arrival transform in the delay kernel.
//   literal  e^{theta} per packet, as in the closed form
//   matched  each packet counts message_bits, the same unit as the service
enum class ArrivalUnits { literal, matched };

InterarrivalParam parse_interarrival_param(std::string_view name);
std::string_view to_string(InterarrivalParam p);
ArrivalUnits parse_arrival_units(std::string_view name);
std::string_view to_string(ArrivalUnits u);

// Expected packets per frame under the given parameterization.
double arrivals_per_frame(double lambda, double frame_duration, InterarrivalParam param);

struct MellinEval {
    double value = 1.0;
    bool stable = true;
};

struct BoundResult {
    double bound = 1.0;  // clamped to [0, 1]; 1 when unstable
    double raw = std::numeric_limits<double>::infinity();
    double exponent = 0.0;
    bool stable = false;
};

struct QoSBudget {
    double peak_aoi_threshold = 10.0;  // s
    int delay_bound = 5;               // frames
    double ec_threshold = 0.0;         // bits per channel use
    double aoi_exponent = 0.01;
    double delay_exponent = 0.1;
    double lagrange_multiplier = 0.0;

    void validate() const;
};

struct SearchOptions {
    int grid_points = 256;
    double tolerance = 1e-9;  // absolute, on the exponent
    double span = 1e-6;       // grid starts at span * upper end of the stable interval
    double cap = 1e3;         // upper end when the stable interval is unbounded
};

struct Tightened {
    double exponent = 0.0;
    BoundResult result;
};

// Interarrival transform. sign = +1 gives E[e^{theta I}], sign = -1 gives
// E[e^{-theta I}]. Only the +1 form can be unstable.
MellinEval mellin_interarrival(double lambda, double theta, int sign = +1,
                               InterarrivalParam param = InterarrivalParam::mean);

// Geometric number of frames with per-frame continuation probability p_o.
MellinEval mellin_service_time(double p_o, double frame_duration, double theta);

// Peak-AoI tail bound assembled from the three transforms.
BoundResult peak_aoi_bound_from_transforms(const MellinEval& inter_plus, const MellinEval& inter_minus,
                                           const MellinEval& service_plus, double theta, double threshold);

// Closed form of the same bound.
BoundResult peak_aoi_bound(double lambda, double p_o, double frame_duration, double theta,
                           double threshold, InterarrivalParam param = InterarrivalParam::mean);

Tightened tighten_peak_aoi_bound(double lambda, double p_o, double frame_duration, double threshold,
                                 InterarrivalParam param = InterarrivalParam::mean,
                                 const SearchOptions& opts = {});

// M_S(1 - theta) of the two-point service process.
MellinEval mellin_service_process(double eps_bar, double message_bits, double theta_t);

double effective_capacity(double eps_bar, double message_bits, int blocklength, double theta_t);

MellinEval mellin_arrival(double lambda, double mu, double theta_t);

struct DelayModel {
    double eps_bar = 0.0;
    double message_bits = 100.0;
    double lambda = 0.0;  // packets per frame
    double mu = 1.0;
    ArrivalUnits units = ArrivalUnits::literal;
};

BoundResult delay_kernel(const DelayModel& m, double theta_t, int delay_bound);

// Kernel written in terms of the effective capacity; identical to delay_kernel
// when ec = effective_capacity(eps_bar, message_bits, blocklength, theta_t).
BoundResult delay_kernel_from_ec(double ec, int blocklength, const DelayModel& m, double theta_t,
                                 int delay_bound);

Tightened delay_violation_bound(const DelayModel& m, int delay_bound, const SearchOptions& opts = {});

// <= 0 iff the effective capacity meets ec_threshold.
double c1_constraint_value(double eps_bar, double message_bits, int blocklength, double theta_t,
                           double ec_threshold);

// Decode error averaged over Rayleigh fading with the given mean SNR.
double mean_decode_error(double mean_snr, int blocklength, double message_bits,
                         int samples = 100000, std::uint64_t seed = 0);

// Infimum of eval(theta).raw over the stable interval. `log_stability` is convex with a
// zero at 0; the stable set is where it is negative. `hard_limit` bounds the
// domain of the transforms (infinity when none). Exposed for testing.
Tightened minimize_bound(const std::function<BoundResult(double)>& eval,
                         const std::function<double(double)>& log_stability, double slope_at_zero,
                         double hard_limit, const SearchOptions& opts);

}  // namespace aoi::snc
