#include "aoi/snc_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "aoi/fbc_channel.hpp"
#include "aoi/rng.hpp"

namespace aoi::snc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoundResult unstable(double exponent) {
    BoundResult r;
    r.exponent = exponent;
    return r;
}

BoundResult from_log_raw(double log_raw, double exponent) {
    BoundResult r;
    r.exponent = exponent;
    r.stable = true;
    r.raw = std::exp(log_raw);
    r.bound = std::clamp(r.raw, 0.0, 1.0);
    return r;
}

// Coefficient a such that the interarrival transform is 1/(1 -+ a theta).
double interarrival_coeff(double lambda, InterarrivalParam param) {
    if (param == InterarrivalParam::mean) {
        if (!(lambda >= 0.0)) throw std::domain_error("interarrival mean must be >= 0");
        return lambda;
    }
    if (!(lambda > 0.0)) throw std::domain_error("arrival rate must be > 0");
    return 1.0 / lambda;
}

// log M_S(1 - theta) with x = theta * bits * ln 2, accurate near eps_bar = 0.
double log_service_process(double eps_bar, double x) {
    if (eps_bar >= 1.0) return 0.0;
    if (eps_bar <= 0.0) return -x;
    if (x < 700.0) return -x + std::log1p(eps_bar * std::expm1(x));
    return std::log(eps_bar + (1.0 - eps_bar) * std::exp(-x));
}

void check_eps(double eps_bar) {
    if (!(eps_bar >= 0.0 && eps_bar <= 1.0)) throw std::domain_error("eps_bar must lie in [0, 1]");
}

double arrival_unit(const DelayModel& m) {
    return m.units == ArrivalUnits::matched ? m.message_bits * kScaling : 1.0;
}

// log M_A(1 + theta) in the chosen units.
double log_arrival(const DelayModel& m, double theta_t) {
    return m.mu * m.lambda * std::expm1(theta_t * arrival_unit(m));
}

}  // namespace

InterarrivalParam parse_interarrival_param(std::string_view name) {
    if (name == "mean") return InterarrivalParam::mean;
    if (name == "rate") return InterarrivalParam::rate;
    throw std::invalid_argument("unknown interarrival_param '" + std::string(name) + "' (expected mean or rate)");
}

std::string_view to_string(InterarrivalParam p) {
    return p == InterarrivalParam::mean ? "mean" : "rate";
}

ArrivalUnits parse_arrival_units(std::string_view name) {
    if (name == "literal") return ArrivalUnits::literal;
    if (name == "matched") return ArrivalUnits::matched;
    throw std::invalid_argument("unknown arrival_units '" + std::string(name) + "' (expected literal or matched)");
}

std::string_view to_string(ArrivalUnits u) {
    return u == ArrivalUnits::literal ? "literal" : "matched";
}

double arrivals_per_frame(double lambda, double frame_duration, InterarrivalParam param) {
    if (!(lambda > 0.0)) throw std::domain_error("arrival parameter must be > 0");
    return param == InterarrivalParam::mean ? frame_duration / lambda : lambda * frame_duration;
}

void QoSBudget::validate() const {
    if (!(peak_aoi_threshold > 0.0)) throw std::domain_error("peak_aoi_threshold must be > 0");
    if (delay_bound < 0) throw std::domain_error("delay_bound must be >= 0");
    if (!(ec_threshold >= 0.0)) throw std::domain_error("ec_threshold must be >= 0");
    if (!(aoi_exponent > 0.0)) throw std::domain_error("aoi_exponent must be > 0");
    if (!(delay_exponent > 0.0)) throw std::domain_error("delay_exponent must be > 0");
    if (!(lagrange_multiplier >= 0.0)) throw std::domain_error("lagrange_multiplier must be >= 0");
}

MellinEval mellin_interarrival(double lambda, double theta, int sign, InterarrivalParam param) {
    if (!(theta >= 0.0)) throw std::domain_error("theta must be >= 0");
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    const double x = interarrival_coeff(lambda, param) * theta;
    if (sign < 0) return {1.0 / (1.0 + x), true};
    if (x >= 1.0) return {kInf, false};
    return {1.0 / (1.0 - x), true};
}

MellinEval mellin_service_time(double p_o, double frame_duration, double theta) {
    if (!(p_o >= 0.0 && p_o <= 1.0)) throw std::domain_error("p_o must lie in [0, 1]");
    if (!(frame_duration > 0.0)) throw std::domain_error("frame_duration must be > 0");
    if (!(theta >= 0.0)) throw std::domain_error("theta must be >= 0");
    const double growth = std::exp(theta * frame_duration);
    const double x = p_o * growth;
    if (!(x < 1.0)) return {kInf, false};
    return {(1.0 - p_o) * growth / (1.0 - x), true};
}

BoundResult peak_aoi_bound_from_transforms(const MellinEval& inter_plus, const MellinEval& inter_minus,
                                           const MellinEval& service_plus, double theta, double threshold) {
    if (!inter_plus.stable || !inter_minus.stable || !service_plus.stable) return unstable(theta);
    const double rho = inter_minus.value * service_plus.value;
    if (!(rho < 1.0)) return unstable(theta);
    return from_log_raw(-theta * threshold + std::log(inter_plus.value) + std::log(service_plus.value) -
                            std::log1p(-rho),
                        theta);
}

BoundResult peak_aoi_bound(double lambda, double p_o, double frame_duration, double theta, double threshold,
                           InterarrivalParam param) {
    if (!(theta > 0.0)) throw std::domain_error("theta must be > 0");
    if (!(p_o >= 0.0 && p_o <= 1.0)) throw std::domain_error("p_o must lie in [0, 1]");
    if (!(frame_duration > 0.0)) throw std::domain_error("frame_duration must be > 0");
    const double a = interarrival_coeff(lambda, param);
    const double growth = std::exp(theta * frame_duration);
    const double pe = p_o * growth;
    if (!(a * theta < 1.0) || !(pe < 1.0)) return unstable(theta);
    const double numerator =
        (1.0 - p_o) * growth * std::exp(-theta * threshold) / ((1.0 - a * theta) * (1.0 - pe));
    const double denominator = 1.0 - (1.0 - p_o) * growth / ((1.0 + a * theta) * (1.0 - pe));
    if (!(denominator > 0.0)) return unstable(theta);
    BoundResult r;
    r.exponent = theta;
    r.stable = true;
    r.raw = numerator / denominator;
    r.bound = std::clamp(r.raw, 0.0, 1.0);
    return r;
}

Tightened minimize_bound(const std::function<BoundResult(double)>& eval,
                         const std::function<double(double)>& log_stability, double slope_at_zero,
                         double hard_limit, const SearchOptions& opts) {
    Tightened out;
    if (!(slope_at_zero < 0.0)) return out;
    auto stable = [&](double t) { return log_stability(t) < 0.0; };

    double hi = 0.0;
    double upper = 0.0;
    if (std::isfinite(hard_limit)) {
        hi = hard_limit;
        const double inside = hard_limit * (1.0 - 1e-12);
        if (stable(inside)) upper = inside;
    } else {
        hi = 1.0;
        while (stable(hi) && hi < opts.cap) hi *= 2.0;
        if (stable(hi)) upper = hi;
    }
    if (upper == 0.0) {
        double lo = hi;
        for (int i = 0; i < 2000 && !stable(lo); ++i) lo *= 0.5;
        if (!stable(lo)) return out;
        for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (stable(mid) ? lo : hi) = mid;
        }
        upper = lo;
    }
    upper = std::min(upper, opts.cap);

    const int g = std::max(opts.grid_points, 3);
    std::vector<double> grid(g);
    for (int i = 0; i < g; ++i) grid[i] = upper * std::pow(opts.span, 1.0 - static_cast<double>(i) / (g - 1));
    grid.back() = upper;

    auto score = [&](double t) {
        const BoundResult r = eval(t);
        return r.stable && std::isfinite(r.raw) ? r.raw : kInf;
    };
    int best = -1;
    double best_val = kInf;
    for (int i = 0; i < g; ++i) {
        const double v = score(grid[i]);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best < 0) return out;

    double a = grid[std::max(best - 1, 0)];
    double b = grid[std::min(best + 1, g - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = score(c);
    double fd = score(d);
    while (b - a > opts.tolerance) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = score(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = score(d);
        }
    }
    double theta = grid[best];
    const double mid = 0.5 * (a + b);
    if (score(mid) < best_val) theta = mid;
    out.exponent = theta;
    out.result = eval(theta);
    return out;
}

Tightened tighten_peak_aoi_bound(double lambda, double p_o, double frame_duration, double threshold,
                                 InterarrivalParam param, const SearchOptions& opts) {
    const double a = interarrival_coeff(lambda, param);
    const double mean_interarrival = param == InterarrivalParam::mean ? lambda : 1.0 / lambda;
    if (!(p_o < 1.0)) return {};
    const double slope = frame_duration / (1.0 - p_o) - mean_interarrival;
    double hard = kInf;
    if (a > 0.0) hard = 1.0 / a;
    if (p_o > 0.0) hard = std::min(hard, -std::log(p_o) / frame_duration);
    auto log_stab = [&](double t) {
        const MellinEval s = mellin_service_time(p_o, frame_duration, t);
        if (!s.stable) return kInf;
        return std::log(s.value) - std::log1p(a * t);
    };
    auto eval = [&](double t) { return peak_aoi_bound(lambda, p_o, frame_duration, t, threshold, param); };
    return minimize_bound(eval, log_stab, slope, hard, opts);
}

MellinEval mellin_service_process(double eps_bar, double message_bits, double theta_t) {
    check_eps(eps_bar);
    if (!(theta_t >= 0.0)) throw std::domain_error("theta_tilde must be >= 0");
    return {std::exp(log_service_process(eps_bar, theta_t * message_bits * kScaling)), true};
}

double effective_capacity(double eps_bar, double message_bits, int blocklength, double theta_t) {
    check_eps(eps_bar);
    if (blocklength < 1) throw std::domain_error("blocklength must be >= 1");
    if (!(theta_t > 0.0)) throw std::domain_error("theta_tilde must be > 0");
    const double x = theta_t * message_bits * kScaling;
    const double rate = message_bits / blocklength;
    if (eps_bar <= 0.0) return rate;
    if (eps_bar >= 1.0) return 0.0;
    const double ec = -log_service_process(eps_bar, x) / (blocklength * theta_t * kScaling);
    return std::max(ec, 0.0);
}

MellinEval mellin_arrival(double lambda, double mu, double theta_t) {
    if (!(lambda >= 0.0)) throw std::domain_error("lambda must be >= 0");
    if (!(mu >= 1.0)) throw std::domain_error("mu must be >= 1");
    if (!(theta_t >= 0.0)) throw std::domain_error("theta_tilde must be >= 0");
    return {std::exp(mu * lambda * std::expm1(theta_t)), true};
}

BoundResult delay_kernel(const DelayModel& m, double theta_t, int delay_bound) {
    check_eps(m.eps_bar);
    if (delay_bound < 0) throw std::domain_error("delay_bound must be >= 0");
    const double log_ms = log_service_process(m.eps_bar, theta_t * m.message_bits * kScaling);
    const double log_rho = log_arrival(m, theta_t) + log_ms;
    if (!(log_rho < 0.0)) return unstable(theta_t);
    return from_log_raw(delay_bound * log_ms - std::log(-std::expm1(log_rho)), theta_t);
}

BoundResult delay_kernel_from_ec(double ec, int blocklength, const DelayModel& m, double theta_t,
                                 int delay_bound) {
    const double log_ms = -blocklength * theta_t * ec * kScaling;
    const double log_rho = log_arrival(m, theta_t) + log_ms;
    if (!(log_rho < 0.0)) return unstable(theta_t);
    return from_log_raw(delay_bound * log_ms - std::log(-std::expm1(log_rho)), theta_t);
}

Tightened delay_violation_bound(const DelayModel& m, int delay_bound, const SearchOptions& opts) {
    check_eps(m.eps_bar);
    const double slope = m.mu * m.lambda * arrival_unit(m) - (1.0 - m.eps_bar) * m.message_bits * kScaling;
    auto log_stab = [&](double t) {
        return log_arrival(m, t) + log_service_process(m.eps_bar, t * m.message_bits * kScaling);
    };
    auto eval = [&](double t) { return delay_kernel(m, t, delay_bound); };
    return minimize_bound(eval, log_stab, slope, kInf, opts);
}

double c1_constraint_value(double eps_bar, double message_bits, int blocklength, double theta_t,
                           double ec_threshold) {
    if (blocklength < 1) throw std::domain_error("blocklength must be >= 1");
    const MellinEval ms = mellin_service_process(eps_bar, message_bits, theta_t);
    return ms.value - std::exp(-theta_t * blocklength * ec_threshold * kScaling);
}

double mean_decode_error(double mean_snr, int blocklength, double message_bits, int samples,
                         std::uint64_t seed) {
    if (!(mean_snr >= 0.0)) throw std::domain_error("mean_snr must be >= 0");
    if (samples < 1) throw std::domain_error("samples must be >= 1");
    Rng rng = make_stream(seed, "mean_decode_error");
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double gain = -std::log1p(-uniform01(rng));
        sum += fbc::decode_error(mean_snr * gain, blocklength, message_bits);
    }
    return sum / samples;
}

}  // namespace aoi::snc
