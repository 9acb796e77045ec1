#include "aoi/experiment/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "aoi/drl/network.hpp"
#include "aoi/experiment/commands.hpp"
#include "aoi/experiment/io.hpp"
#include "aoi/random_access.hpp"
#include "aoi/rng.hpp"

namespace aoi::experiment {
namespace {

constexpr double kFrame = 0.1;

double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

template <class F>
CheckResult timed(const std::string& name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// Sampling-based moment check shared by the transform checks. `point` draws
// parameters and returns {analytical, sampler}; the sampler yields e^{theta X}.
template <class Point>
void sampling_check(CheckResult& r, const ValidationOptions& opts, const std::string& stream, Point&& point) {
    double worst = 0.0;
    int failures = 0;
    for (int i = 0; i < opts.mellin_points; ++i) {
        Rng params = make_stream(opts.seed, stream + "_params", i);
        Rng draws = make_stream(opts.seed, stream, i);
        auto [analytical, sample] = point(params);
        double sum = 0.0;
        for (int s = 0; s < opts.mellin_samples; ++s) sum += sample(draws);
        const double err = std::isfinite(analytical) ? relative_error(analytical, sum / opts.mellin_samples)
                                                     : std::numeric_limits<double>::infinity();
        worst = std::max(worst, err);
        if (!(err <= opts.mellin_tolerance)) ++failures;
    }
    r.passed = failures == 0;
    r.detail = fmt::format("{} points, {} samples, worst relative error {:.3g} (limit {:.3g})", opts.mellin_points,
                           opts.mellin_samples, worst, opts.mellin_tolerance);
}

drl::NetworkSpec random_spec(Rng& rng, bool dueling, bool recurrent) {
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1)); };
    drl::NetworkSpec s;
    s.input_size = pick(2, 6);
    s.window = pick(1, 3);
    s.hidden.assign(pick(1, 2), 0);
    for (int& h : s.hidden) h = pick(3, 8);
    s.outputs = pick(2, 5);
    s.activation = uniform01(rng) < 0.5 ? drl::Activation::tanh : drl::Activation::relu;
    s.dueling = dueling;
    if (dueling) {
        if (uniform01(rng) < 0.5) s.value_hidden = {pick(2, 6)};
        if (uniform01(rng) < 0.5) s.advantage_hidden = {pick(2, 6)};
    }
    if (recurrent) s.recurrent_size = pick(2, 5);
    return s;
}

void gradient_check_batch(CheckResult& r, const ValidationOptions& opts, const std::string& stream, bool dueling,
                          bool recurrent) {
    double worst = 0.0;
    for (int i = 0; i < opts.gradient_networks; ++i) {
        Rng rng = make_stream(opts.seed, stream, i);
        drl::Network net(random_spec(rng, dueling, recurrent));
        net.initialize(rng);
        const int batch = 3;
        Eigen::MatrixXd x(net.spec().input_rows(), batch);
        Eigen::MatrixXd w(net.spec().outputs, batch);
        for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = 2.0 * uniform01(rng) - 1.0;
        for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = 2.0 * uniform01(rng) - 1.0;
        Eigen::MatrixXd h0;
        if (recurrent) {
            h0.resize(net.spec().recurrent_size, batch);
            for (Eigen::Index j = 0; j < h0.size(); ++j) h0.data()[j] = uniform01(rng) - 0.5;
        }
        worst = std::max(worst, drl::gradient_check(net, x, w, 1e-5, h0));
    }
    r.passed = worst < 1e-4;
    r.detail = fmt::format("{} networks, worst relative error {:.3g} (limit 1e-4)", opts.gradient_networks, worst);
}

snc::MellinEval service_time_wrong_sign(double p_o, double frame_duration, double theta) {
    const double shrink = std::exp(-theta * frame_duration);
    return {(1.0 - p_o) * shrink / (1.0 - p_o * shrink), true};
}

}  // namespace

ValidationHooks default_hooks() {
    ValidationHooks h;
    h.interarrival = [](double lambda, double theta, int sign) {
        return snc::mellin_interarrival(lambda, theta, sign, snc::InterarrivalParam::mean);
    };
    h.service_time = snc::mellin_service_time;
    h.service_process = snc::mellin_service_process;
    h.arrival = snc::mellin_arrival;
    return h;
}

std::vector<std::string> mutation_names() { return {"service-time-sign"}; }

ValidationHooks mutated_hooks(std::string_view mutation) {
    ValidationHooks h = default_hooks();
    if (mutation == "service-time-sign") {
        h.service_time = service_time_wrong_sign;
        return h;
    }
    throw std::invalid_argument("unknown mutation '" + std::string(mutation) + "'; known: service-time-sign");
}

ValidityCase make_validity_case(std::uint64_t seed, int index, long updates) {
    Rng rng = make_stream(seed, "validity_case", static_cast<std::uint64_t>(index));
    ValidityCase c;
    c.index = index;
    auto& s = c.scenario;
    s.devices = 1 + static_cast<int>(uniform01(rng) * 4);
    s.subchannels = 1;
    const int n = 200 + 100 * static_cast<int>(uniform01(rng) * 4);
    const int rb = 1 + static_cast<int>(uniform01(rng) * 5);
    s.blocklength = {n};
    s.bandwidth = {rb * n / kFrame + 1.0};
    s.frame_duration = kFrame;
    s.message_bits = 100;
    s.mean_snr_db = 10.0 * uniform01(rng);
    s.p_access = {0.3 + 0.7 * uniform01(rng)};
    s.po_semantics = access::PoSemantics::frame_failure;
    s.arrival_units = snc::ArrivalUnits::matched;
    s.record_queues = false;
    s.frames = 1000L * updates;
    s.target_updates = updates;
    s.seed = derive_seed(seed, "validity_sim", static_cast<std::uint64_t>(index));

    // Offered load between 0.15 and 0.4 of the per-frame delivery probability.
    const double eps = snc::mean_decode_error(std::pow(10.0, *s.mean_snr_db / 10.0), n, s.message_bits, 20000,
                                              derive_seed(seed, "validity_eps", index));
    const double q = s.p_access[0] * access::access_success_prob({s.p_access[0], rb, s.devices}) * (1.0 - eps);
    s.arrival = {(1.5 + 2.5 * uniform01(rng)) * kFrame / q};

    sim::Simulator probe(s, s.seed);
    c.links = scenario_links(s, probe, 20000, derive_seed(seed, "validity_links", index));

    // Smallest A_th whose worst per-link bound is at most 0.1.
    double lo = 1e-3;
    double hi = 1e4;
    for (int i = 0; i < 80; ++i) {
        const double mid = std::sqrt(lo * hi);
        double worst = 0.0;
        for (const auto& l : c.links)
            worst = std::max(worst, snc::tighten_peak_aoi_bound(l.lambda, l.p_o, kFrame, mid).result.bound);
        (worst > 0.1 ? lo : hi) = mid;
    }
    s.qos.peak_aoi_threshold = hi;

    // Smallest D_th whose worst per-link delay bound is at most 0.2.
    int d = 0;
    for (; d < 200; ++d) {
        double worst = 0.0;
        for (const auto& l : c.links) {
            snc::DelayModel m{l.delay_eps, s.message_bits, l.arrivals_per_frame, 1.0, s.arrival_units};
            worst = std::max(worst, snc::delay_violation_bound(m, d).result.bound);
        }
        if (worst <= 0.2) break;
    }
    s.qos.delay_bound = d;
    for (const auto& l : c.links) c.bounds.push_back(link_bounds(s, l, 1.0));
    return c;
}

ValidityCase run_validity_case(std::uint64_t seed, int index, long updates) {
    ValidityCase c = make_validity_case(seed, index, updates);
    const auto trace = sim::run(c.scenario, c.scenario.seed);
    c.mixture = mixture_bounds(trace, c.links, c.bounds);
    if (trace.records.empty()) return c;
    c.aoi = sim::empirical_peak_aoi_violation(trace, c.scenario.qos.peak_aoi_threshold);
    c.delay = sim::empirical_delay_violation(trace, c.scenario.qos.delay_bound);
    c.aoi_ok = c.aoi.value <= c.mixture.aoi + 3.0 * c.aoi.std_error;
    c.delay_ok = c.delay.value <= c.mixture.delay + 3.0 * c.delay.std_error;
    return c;
}

std::vector<CheckResult> run_validation(const ValidationOptions& opts, const ValidationHooks& hooks) {
    std::vector<CheckResult> out;

    out.push_back(timed("access_binomial_identity", [&](CheckResult& r) {
        Rng rng = make_stream(opts.seed, "check_access_grid");
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            access::AccessConfig a;
            a.p_access = uniform01(rng);
            a.rb_count = 1 + static_cast<int>(uniform01(rng) * 20);
            a.contenders = 1 + static_cast<int>(uniform01(rng) * 200);
            worst = std::max(worst, std::abs(access::access_success_prob(a) - access::access_success_prob_sum(a)));
        }
        r.passed = worst <= 1e-12;
        r.detail = fmt::format("1000 points, worst absolute difference {:.3g}", worst);
    }));

    out.push_back(timed("access_monte_carlo", [&](CheckResult& r) {
        const access::AccessConfig points[] = {{0.2, 1, 5}, {0.5, 3, 10}, {1.0, 4, 3}, {0.7, 2, 8}, {0.05, 1, 50}};
        const int trials = 100000;
        double worst_z = 0.0;
        for (int i = 0; i < 5; ++i) {
            const auto& a = points[i];
            Rng rng = make_stream(opts.seed, "check_access_mc", i);
            long solo = 0;
            for (int t = 0; t < trials; ++t) {
                const int mine = static_cast<int>(uniform01(rng) * a.rb_count);
                bool clash = false;
                for (int k = 1; k < a.contenders; ++k) {
                    const bool attempts = uniform01(rng) < a.p_access;
                    const int rb = static_cast<int>(uniform01(rng) * a.rb_count);
                    clash = clash || (attempts && rb == mine);
                }
                solo += clash ? 0 : 1;
            }
            const double closed = access::access_success_prob(a);
            const double se = std::sqrt(closed * (1.0 - closed) / trials);
            const double diff = std::abs(static_cast<double>(solo) / trials - closed);
            worst_z = std::max(worst_z, se > 0.0 ? diff / se : (diff > 0.0 ? 1e9 : 0.0));
        }
        r.passed = worst_z <= 3.0;
        r.detail = fmt::format("5 points, {} trials, worst |z| {:.2f}", trials, worst_z);
    }));

    out.push_back(timed("access_simulator_saturated", [&](CheckResult& r) {
        sim::ScenarioConfig s;
        s.devices = 6;
        s.subchannels = 1;
        s.blocklength = {400};
        s.bandwidth = {3 * 400 / kFrame + 1.0};
        s.p_access = {0.6};
        s.arrival = {0.5};
        s.decode_error_override = 0.0;
        s.initial_backlog = 100000;
        s.record_queues = false;
        s.frames = 20000;
        const auto trace = sim::run(s, derive_seed(opts.seed, "check_access_sim"));
        const auto e = sim::empirical_access_success(trace, 0);
        const double closed = trace.tagged[0].expected_sum / trace.tagged[0].attempts;
        const double z = std::abs(e.value - closed) / e.std_error;
        r.passed = z <= 3.0;
        r.detail = fmt::format("{} tagged attempts, empirical {:.5f} vs closed form {:.5f}, |z| {:.2f}", e.count,
                               e.value, closed, z);
    }));

    out.push_back(timed("mellin_interarrival_sampling", [&](CheckResult& r) {
        sampling_check(r, opts, "check_mellin_interarrival", [&](Rng& p) {
            const double lambda = 0.05 + 1.95 * uniform01(p);
            const double theta = (0.05 + 0.25 * uniform01(p)) / lambda;
            const int sign = uniform01(p) < 0.5 ? 1 : -1;
            const auto m = hooks.interarrival(lambda, theta, sign);
            auto sample = [lambda, theta, sign](Rng& g) {
                return std::exp(sign * theta * (-lambda * std::log1p(-uniform01(g))));
            };
            return std::pair{m.stable ? m.value : std::numeric_limits<double>::infinity(),
                             std::function<double(Rng&)>(sample)};
        });
    }));

    out.push_back(timed("mellin_service_time_sampling", [&](CheckResult& r) {
        sampling_check(r, opts, "check_mellin_service_time", [&](Rng& p) {
            const double p_o = 0.05 + 0.65 * uniform01(p);
            const double theta = (0.2 + 0.8 * uniform01(p)) * std::log(0.8 / p_o) / (2.0 * kFrame);
            const auto m = hooks.service_time(p_o, kFrame, theta);
            auto sample = [p_o, theta, dist = std::geometric_distribution<long>(1.0 - p_o)](Rng& g) mutable {
                return std::exp(theta * kFrame * static_cast<double>(1 + dist(g)));
            };
            return std::pair{m.stable ? m.value : std::numeric_limits<double>::infinity(),
                             std::function<double(Rng&)>(sample)};
        });
    }));

    out.push_back(timed("mellin_service_process_sampling", [&](CheckResult& r) {
        sampling_check(r, opts, "check_mellin_service_process", [&](Rng& p) {
            const double eps = 0.2 + 0.7 * uniform01(p);
            const double bits = 50.0 + 150.0 * uniform01(p);
            const double theta_t = 0.001 + 0.049 * uniform01(p);
            const auto m = hooks.service_process(eps, bits, theta_t);
            auto sample = [eps, bits, theta_t](Rng& g) {
                const double served = uniform01(g) < eps ? 0.0 : bits;
                return std::exp(-theta_t * served * std::log(2.0));
            };
            return std::pair{m.value, std::function<double(Rng&)>(sample)};
        });
    }));

    out.push_back(timed("mellin_arrival_sampling", [&](CheckResult& r) {
        sampling_check(r, opts, "check_mellin_arrival", [&](Rng& p) {
            const double lambda = 0.1 + 1.0 * uniform01(p);
            const double mu = 1.0 + uniform01(p);
            const double theta_t = 0.05 + 0.35 * uniform01(p);
            const auto m = hooks.arrival(lambda, mu, theta_t);
            auto sample = [theta_t, dist = std::poisson_distribution<long>(mu * lambda)](Rng& g) mutable {
                return std::exp(theta_t * static_cast<double>(dist(g)));
            };
            return std::pair{m.value, std::function<double(Rng&)>(sample)};
        });
    }));

    out.push_back(timed("peak_aoi_composition", [&](CheckResult& r) {
        Rng rng = make_stream(opts.seed, "check_peak_aoi_composition");
        double worst = 0.0;
        int mismatched = 0;
        for (int i = 0; i < 200; ++i) {
            const double lambda = 0.05 + 2.0 * uniform01(rng);
            const double p_o = 0.9 * uniform01(rng);
            const double theta = 0.01 + 5.0 * uniform01(rng);
            const double threshold = 0.5 + 20.0 * uniform01(rng);
            const auto closed = snc::peak_aoi_bound(lambda, p_o, kFrame, theta, threshold);
            const auto composed = snc::peak_aoi_bound_from_transforms(
                hooks.interarrival(lambda, theta, 1), hooks.interarrival(lambda, theta, -1),
                hooks.service_time(p_o, kFrame, theta), theta, threshold);
            if (closed.stable != composed.stable) {
                ++mismatched;
                continue;
            }
            if (closed.stable) worst = std::max(worst, relative_error(closed.raw, composed.raw));
        }
        r.passed = mismatched == 0 && worst <= 1e-10;
        r.detail = fmt::format("200 points, {} stability mismatches, worst relative error {:.3g}", mismatched, worst);
    }));

    out.push_back(timed("effective_capacity_anchors", [&](CheckResult& r) {
        bool ok = true;
        for (int n : {100, 250, 400, 600})
            for (double t : {1e-3, 0.05, 1.0}) {
                ok = ok && snc::effective_capacity(0.0, 100.0, n, t) == 100.0 / n;
                ok = ok && snc::effective_capacity(1.0, 100.0, n, t) == 0.0;
                double prev = std::numeric_limits<double>::infinity();
                for (int i = 0; i <= 50; ++i) {
                    const double ec = snc::effective_capacity(0.01 + 0.98 * i / 50.0, 100.0, n, t);
                    ok = ok && ec < prev;
                    prev = ec;
                }
            }
        r.passed = ok;
        r.detail = "eps=0 gives bits/n exactly, eps=1 gives 0, strictly decreasing on a 51-point grid";
    }));

    // Both simulator checks share the runs; their cost is charged to the first.
    std::vector<ValidityCase> cases(opts.validity_configs);
    out.push_back(timed("bound_vs_simulator_peak_aoi", [&](CheckResult& r) {
        for (std::size_t i = 0; i < cases.size(); ++i)
            cases[i] = run_validity_case(opts.seed, static_cast<int>(i), opts.validity_updates);
        int ok = 0;
        double slack = std::numeric_limits<double>::infinity();
        for (const auto& c : cases) {
            ok += c.aoi_ok ? 1 : 0;
            slack = std::min(slack, c.mixture.aoi + 3.0 * c.aoi.std_error - c.aoi.value);
        }
        r.passed = ok == static_cast<int>(cases.size());
        r.detail = fmt::format("{}/{} configurations, {} updates each, smallest margin {:.3g}", ok, cases.size(),
                               opts.validity_updates, slack);
    }));
    out.push_back(timed("bound_vs_simulator_delay", [&](CheckResult& r) {
        int ok = 0;
        double slack = std::numeric_limits<double>::infinity();
        for (const auto& c : cases) {
            ok += c.delay_ok ? 1 : 0;
            slack = std::min(slack, c.mixture.delay + 3.0 * c.delay.std_error - c.delay.value);
        }
        r.passed = ok == static_cast<int>(cases.size());
        r.detail = fmt::format("{}/{} configurations, {} updates each, smallest margin {:.3g}", ok, cases.size(),
                               opts.validity_updates, slack);
    }));

    out.push_back(timed("gradient_feedforward",
                        [&](CheckResult& r) { gradient_check_batch(r, opts, "check_grad_ff", false, false); }));
    out.push_back(timed("gradient_dueling",
                        [&](CheckResult& r) { gradient_check_batch(r, opts, "check_grad_dueling", true, false); }));
    out.push_back(timed("gradient_recurrent",
                        [&](CheckResult& r) { gradient_check_batch(r, opts, "check_grad_gru", false, true); }));

    out.push_back(timed("dueling_combine_zero_mean", [&](CheckResult& r) {
        Rng rng = make_stream(opts.seed, "check_dueling_combine");
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd a(2 + i % 7);
            for (Eigen::Index j = 0; j < a.size(); ++j) a[j] = 10.0 * uniform01(rng) - 5.0;
            const double v = 4.0 * uniform01(rng) - 2.0;
            worst = std::max(worst, std::abs(drl::dueling_combine(v, a).mean() - v));
        }
        r.passed = worst <= 1e-12;
        r.detail = fmt::format("100 draws, worst |mean(Q) - V| {:.3g}", worst);
    }));
    return out;
}

std::string format_report(const std::vector<CheckResult>& results) {
    std::size_t width = 5;
    for (const auto& r : results) width = std::max(width, r.name.size());
    std::string s = fmt::format("{:<{}}  {:<6}  {:>8}  {}\n", "check", width, "result", "seconds", "detail");
    int passed = 0;
    for (const auto& r : results) {
        passed += r.passed ? 1 : 0;
        s += fmt::format("{:<{}}  {:<6}  {:>8.2f}  {}\n", r.name, width, r.passed ? "PASS" : "FAIL", r.seconds,
                         r.detail);
    }
    s += fmt::format("{}/{} checks passed\n", passed, results.size());
    return s;
}

int run_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    ValidationOptions vo;
    if (opts.seed) vo.seed = *opts.seed;
    if (opts.mutations.size() > 1) throw std::invalid_argument("at most one --mutate may be given");
    const ValidationHooks hooks = opts.mutations.empty() ? default_hooks() : mutated_hooks(opts.mutations.front());
    const auto results = run_validation(vo, hooks);
    const std::string report = format_report(results);
    out << report;
    if (opts.out || std::getenv("AOI_OUT_DIR")) {
        const auto dir = resolve_output_dir(opts.out);
        CsvTable t({"check", "passed", "detail"});
        for (const auto& r : results) t.add_row({r.name, r.passed ? "1" : "0", r.detail});
        write_text(dir / "validation.csv", t.str());
    }
    const bool all = std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
    if (!all) err << "one or more checks failed\n";
    return all ? 0 : 1;
}

}  // namespace aoi::experiment
