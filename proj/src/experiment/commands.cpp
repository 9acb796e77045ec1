#include "aoi/experiment/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "aoi/errors.hpp"
#include "aoi/experiment/analysis.hpp"
#include "aoi/experiment/io.hpp"
#include "aoi/mdp_env.hpp"

namespace aoi::experiment {
namespace {

ExperimentConfig load_for_command(const CommandOptions& opts) {
    if (opts.config_path.empty()) throw std::invalid_argument("--config is required");
    ExperimentConfig cfg = load_config(opts.config_path);
    if (opts.seed) {
        cfg.seed = *opts.seed;
        cfg.scenario.seed = *opts.seed;
    }
    return cfg;
}

Json nullable(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json estimate_json(const sim::Estimate& e) {
    return {{"value", e.value}, {"std_error", e.std_error}, {"count", e.count}};
}

std::vector<drl::Algorithm> parse_algos(const std::string& s) {
    if (s == "both") return {drl::Algorithm::ddqn, drl::Algorithm::dueling};
    return {drl::parse_algorithm(s)};
}

std::string file_tag(drl::Algorithm algo, std::uint64_t seed) {
    return fmt::format("{}_seed{}", drl::to_string(algo), seed);
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

double bounds_mean_snr(const ExperimentConfig& cfg) {
    const auto& s = cfg.scenario;
    if (s.mean_snr_db) return std::pow(10.0, *s.mean_snr_db / 10.0);
    return s.configured_power(0, 0) * std::pow(cfg.bounds.reference_distance, -s.path_loss_exponent) * s.fading_mean /
           s.noise_power;
}

double bounds_eps_bar(const ExperimentConfig& cfg) {
    const auto& s = cfg.scenario;
    if (s.decode_error_override) return *s.decode_error_override;
    return snc::mean_decode_error(bounds_mean_snr(cfg), s.blocklength_of(0), s.message_bits, cfg.bounds.eps_samples,
                                  derive_seed(cfg.seed, "eps_bar"));
}

BoundRow evaluate_bound_point(const ExperimentConfig& cfg, std::optional<double> eps_bar) {
    cfg.validate();
    sim::ScenarioConfig s = cfg.scenario;
    if (eps_bar) s.decode_error_override = *eps_bar;
    BoundRow r;
    const double snr = bounds_mean_snr(cfg);
    const LinkInputs in = make_link_inputs(s, 0, 0, cfg.bound_contenders(), s.p_access_of(0), snr,
                                           cfg.bounds.eps_samples, derive_seed(cfg.seed, "eps_bar"));
    r.theta = s.qos.aoi_exponent;
    r.aoi_threshold = s.qos.peak_aoi_threshold;
    r.blocklength = in.blocklength;
    r.mean_snr_db = 10.0 * std::log10(snr);
    r.arrival = in.lambda;
    r.p_access = in.p_access;
    r.contenders = in.contenders;
    r.delay_bound = s.qos.delay_bound;
    r.theta_tilde = s.qos.delay_exponent;
    r.message_bits = s.message_bits;
    r.rb_count = in.rb_count;
    r.eps_bar = in.eps_bar;
    r.p_succ = in.p_succ;
    r.p_o = in.p_o;
    r.aoi = snc::peak_aoi_bound(in.lambda, in.p_o, s.frame_duration, r.theta, r.aoi_threshold, s.interarrival_param);
    r.aoi_inf = snc::tighten_peak_aoi_bound(in.lambda, in.p_o, s.frame_duration, r.aoi_threshold,
                                            s.interarrival_param, cfg.bounds.search);
    snc::DelayModel m;
    m.eps_bar = in.delay_eps;
    m.message_bits = s.message_bits;
    m.lambda = in.arrivals_per_frame;
    m.mu = cfg.bounds.mu;
    m.units = s.arrival_units;
    r.delay_kernel = snc::delay_kernel(m, r.theta_tilde, r.delay_bound);
    r.delay_inf = snc::delay_violation_bound(m, r.delay_bound, cfg.bounds.search);
    r.effective_capacity = snc::effective_capacity(in.delay_eps, s.message_bits, in.blocklength, r.theta_tilde);
    r.ec_threshold = s.qos.ec_threshold;
    r.c1_value = snc::c1_constraint_value(in.delay_eps, s.message_bits, in.blocklength, r.theta_tilde,
                                          r.ec_threshold);
    return r;
}

std::vector<BoundRow> bounds_sweep(const ExperimentConfig& base, const std::vector<SweepSpec>& sweeps, int workers) {
    std::set<std::string> names;
    for (const auto& s : sweeps) {
        if (!names.insert(s.name).second) throw std::invalid_argument("parameter '" + s.name + "' swept twice");
        if (base.scenario.mean_snr_db && (s.name == "transmit_power" || s.name == "reference_distance"))
            throw std::invalid_argument("sweeping " + s.name +
                                        " has no effect while scenario.mean_snr_db is set; remove one of them");
    }
    std::size_t total = 1;
    for (const auto& s : sweeps) total *= s.values.size();

    std::vector<ExperimentConfig> points(total, base);
    std::vector<std::string> params(total), values(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rest = i;
        std::vector<std::size_t> idx(sweeps.size());
        for (std::size_t d = sweeps.size(); d-- > 0;) {
            idx[d] = rest % sweeps[d].values.size();
            rest /= sweeps[d].values.size();
        }
        for (std::size_t d = 0; d < sweeps.size(); ++d) {
            const double v = sweeps[d].values[idx[d]];
            apply_sweep_value(points[i], sweeps[d].name, v);
            params[i] += (d ? ";" : "") + sweeps[d].name;
            values[i] += (d ? ";" : "") + format_number(v);
        }
    }
    // The fading average only depends on SNR, blocklength and message size,
    // so points sharing those reuse one Monte-Carlo estimate.
    using EpsKey = std::tuple<double, int, double, std::uint64_t>;
    std::map<EpsKey, std::size_t> first_of;
    std::vector<std::size_t> eps_index(total);
    std::vector<std::size_t> unique;
    for (std::size_t i = 0; i < total; ++i) {
        const auto& c = points[i];
        c.validate();
        const EpsKey key{bounds_mean_snr(c), c.scenario.blocklength_of(0), c.scenario.message_bits, c.seed};
        const auto [it, fresh] = first_of.emplace(key, unique.size());
        if (fresh) unique.push_back(i);
        eps_index[i] = it->second;
    }
    std::vector<double> eps(unique.size());
    parallel_for(unique.size(), workers, [&](std::size_t u) { eps[u] = bounds_eps_bar(points[unique[u]]); });
    std::vector<BoundRow> rows(total);
    parallel_for(total, workers, [&](std::size_t i) {
        rows[i] = evaluate_bound_point(points[i], eps[eps_index[i]]);
        rows[i].params = params[i];
        rows[i].values = values[i];
    });
    return rows;
}

std::string bounds_csv(const std::vector<BoundRow>& rows) {
    CsvTable t({"index",           "param",          "value",          "theta",
                "aoi_threshold",   "blocklength",    "mean_snr_db",    "arrival",
                "p_access",        "contenders",     "delay_bound",    "theta_tilde",
                "message_bits",    "rb_count",       "eps_bar",        "p_succ",
                "p_o",             "aoi_bound",      "aoi_bound_raw",  "aoi_stable",
                "theta_star",      "aoi_bound_inf",  "delay_kernel",   "delay_stable",
                "theta_tilde_star", "delay_bound_inf", "delay_bound_stable", "effective_capacity",
                "ec_threshold",    "c1_value"});
    auto b = [](bool v) { return std::string(v ? "1" : "0"); };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        t.add_row({std::to_string(i),
                   r.params,
                   r.values,
                   format_number(r.theta),
                   format_number(r.aoi_threshold),
                   std::to_string(r.blocklength),
                   format_number(r.mean_snr_db),
                   format_number(r.arrival),
                   format_number(r.p_access),
                   std::to_string(r.contenders),
                   std::to_string(r.delay_bound),
                   format_number(r.theta_tilde),
                   format_number(r.message_bits),
                   std::to_string(r.rb_count),
                   format_number(r.eps_bar),
                   format_number(r.p_succ),
                   format_number(r.p_o),
                   format_number(r.aoi.bound),
                   format_number(r.aoi.raw),
                   b(r.aoi.stable),
                   format_number(r.aoi_inf.exponent),
                   format_number(r.aoi_inf.result.bound),
                   format_number(r.delay_kernel.raw),
                   b(r.delay_kernel.stable),
                   format_number(r.delay_inf.exponent),
                   format_number(r.delay_inf.result.bound),
                   b(r.delay_inf.result.stable),
                   format_number(r.effective_capacity),
                   format_number(r.ec_threshold),
                   format_number(r.c1_value)});
    }
    return t.str();
}

SimulationResult simulate(const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto& s = cfg.scenario;
    sim::Simulator simulator(s, seed);
    const auto links = scenario_links(s, simulator, cfg.bounds.eps_samples, derive_seed(seed, "eps_bar"));
    std::vector<LinkBounds> bounds;
    for (const auto& l : links) bounds.push_back(link_bounds(s, l, cfg.bounds.mu, cfg.bounds.search));

    const sim::FrameAction action = sim::static_action(s);
    while (simulator.frame() < s.frames) {
        simulator.step(action);
        if (s.target_updates > 0 && static_cast<long>(simulator.trace().records.size()) >= s.target_updates) break;
    }
    SimulationResult res;
    res.trace = simulator.take_trace();
    const auto& trace = res.trace;
    const MixtureBounds mix = mixture_bounds(trace, links, bounds);

    Json j;
    j["seed"] = seed;
    j["frames"] = trace.frames;
    j["updates"] = trace.records.size();

    bool conserved = true;
    Json devices = Json::array();
    for (std::size_t k = 0; k < trace.devices.size(); ++k) {
        const auto& c = trace.devices[k];
        conserved = conserved && c.arrivals == c.deliveries + trace.final_queue[k];
        Json d = {{"device", k},
                  {"arrivals", c.arrivals},
                  {"deliveries", c.deliveries},
                  {"final_queue", trace.final_queue[k]},
                  {"backlogged_frames", c.backlogged_frames},
                  {"attempts", c.attempts},
                  {"solo", c.solo},
                  {"collisions", c.collisions},
                  {"decode_failures", c.decode_failures}};
        for (std::size_t i = 0; i < links.size(); ++i) {
            if (links[i].device != static_cast<int>(k)) continue;
            const auto& l = links[i];
            d["link"] = {{"subchannel", l.subchannel},
                         {"mean_snr_db", 10.0 * std::log10(l.mean_snr)},
                         {"eps_bar", l.eps_bar},
                         {"p_succ", l.p_succ},
                         {"p_o", l.p_o},
                         {"delay_service_error", l.delay_eps},
                         {"theta_star", bounds[i].aoi.exponent},
                         {"aoi_bound", bounds[i].aoi.result.bound},
                         {"theta_tilde_star", bounds[i].delay.exponent},
                         {"delay_bound", bounds[i].delay.result.bound}};
        }
        devices.push_back(d);
    }
    j["conservation"] = conserved;

    Json access = Json::array();
    for (int l = 0; l < s.subchannels; ++l) {
        const auto& t = trace.tagged[l];
        Json a = {{"subchannel", l}, {"attempts", t.attempts}};
        if (t.attempts > 0) {
            const auto e = sim::empirical_access_success(trace, l);
            const double closed = t.expected_sum / t.attempts;
            const double z = e.std_error > 0.0 ? (e.value - closed) / e.std_error : 0.0;
            a["empirical"] = e.value;
            a["std_error"] = e.std_error;
            a["closed_form"] = closed;
            a["z"] = z;
            a["within_3_sigma"] = std::abs(e.value - closed) <= 3.0 * e.std_error + 1e-12;
        }
        access.push_back(a);
    }
    j["access"] = access;

    res.valid = !trace.records.empty();
    if (!trace.records.empty()) {
        const auto aoi = sim::empirical_peak_aoi_violation(trace, s.qos.peak_aoi_threshold);
        const auto delay = sim::empirical_delay_violation(trace, s.qos.delay_bound);
        const bool aoi_ok = aoi.value <= mix.aoi + 3.0 * aoi.std_error;
        const bool delay_ok = delay.value <= mix.delay + 3.0 * delay.std_error;
        j["peak_aoi"] = {{"threshold", s.qos.peak_aoi_threshold},
                         {"empirical", estimate_json(aoi)},
                         {"bound", mix.aoi},
                         {"valid", aoi_ok}};
        j["delay"] = {{"delay_bound", s.qos.delay_bound},
                      {"arrival_units", snc::to_string(s.arrival_units)},
                      {"empirical", estimate_json(delay)},
                      {"bound", mix.delay},
                      {"valid", delay_ok}};
        res.valid = aoi_ok && delay_ok;
    } else {
        j["peak_aoi"] = nullptr;
        j["delay"] = nullptr;
    }
    j["validity_passed"] = res.valid;
    j["devices"] = devices;
    j["config"] = to_json(cfg);
    res.summary = std::move(j);
    return res;
}

TrainRun train_one(const ExperimentConfig& cfg, drl::Algorithm algo, std::uint64_t seed) {
    mdp::MdpEnv env(cfg.scenario, cfg.actions);
    TrainRun run;
    run.algorithm = algo;
    run.seed = seed;
    run.result = drl::train(env, cfg.train, algo, seed);
    return run;
}

std::vector<std::uint64_t> final_window_seeds(const ExperimentConfig& cfg, std::uint64_t seed) {
    const int episodes = cfg.train.episodes;
    const int w = std::min(cfg.train.final_window, episodes);
    std::vector<std::uint64_t> out;
    for (int i = episodes - w; i < episodes; ++i) out.push_back(drl::episode_seed(seed, i));
    return out;
}

std::vector<drl::EpisodeLog> random_baseline(const ExperimentConfig& cfg, std::uint64_t seed) {
    mdp::MdpEnv env(cfg.scenario, cfg.actions);
    return drl::random_policy(env, cfg.train, final_window_seeds(cfg, seed), seed);
}

double sign_test_p_value(int wins, int trials) {
    if (trials <= 0) return 1.0;
    double p = 0.0;
    for (int k = wins; k <= trials; ++k)
        p += std::exp(std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0) -
                      trials * std::log(2.0));
    return std::min(p, 1.0);
}

int run_bounds(const CommandOptions& opts, std::ostream& out, std::ostream&) {
    const ExperimentConfig cfg = load_for_command(opts);
    std::vector<SweepSpec> sweeps;
    for (const auto& s : opts.sweeps) sweeps.push_back(parse_sweep(s));
    const auto rows = bounds_sweep(cfg, sweeps, opts.workers);
    const auto dir = resolve_output_dir(opts.out);
    write_text(dir / "bounds.csv", bounds_csv(rows));
    Json meta = {{"command", "bounds"}, {"seed", cfg.seed}, {"sweeps", opts.sweeps}, {"rows", rows.size()}};
    meta["config"] = to_json(cfg);
    write_json(dir / "bounds.json", meta);
    out << fmt::format("wrote {} rows to {}\n", rows.size(), (dir / "bounds.csv").string());
    return 0;
}

int run_simulate(const CommandOptions& opts, std::ostream& out, std::ostream&) {
    const ExperimentConfig cfg = load_for_command(opts);
    const SimulationResult res = simulate(cfg, cfg.seed);
    const auto dir = resolve_output_dir(opts.out);
    const std::string tag = fmt::format("seed{}", cfg.seed);
    write_text(dir / ("trace_" + tag + ".csv"), trace_csv(res.trace));
    write_json(dir / ("summary_" + tag + ".json"), res.summary);
    out << fmt::format("{} updates over {} frames; validity {}\n", res.trace.records.size(), res.trace.frames,
                       res.valid ? "PASS" : "FAIL");
    if (!res.summary["peak_aoi"].is_null()) {
        out << fmt::format("peak AoI violation {:.6g} (se {:.3g}) vs bound {:.6g}\n",
                           res.summary["peak_aoi"]["empirical"]["value"].get<double>(),
                           res.summary["peak_aoi"]["empirical"]["std_error"].get<double>(),
                           res.summary["peak_aoi"]["bound"].get<double>());
        out << fmt::format("delay violation {:.6g} (se {:.3g}) vs bound {:.6g}\n",
                           res.summary["delay"]["empirical"]["value"].get<double>(),
                           res.summary["delay"]["empirical"]["std_error"].get<double>(),
                           res.summary["delay"]["bound"].get<double>());
    }
    return 0;
}

int run_train(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load_for_command(opts);
    const auto algos = parse_algos(opts.algo);
    const std::vector<std::uint64_t> seeds = opts.seed ? std::vector<std::uint64_t>{*opts.seed} : cfg.train_seeds;
    const auto dir = resolve_output_dir(opts.out);

    const std::size_t runs = algos.size() * seeds.size();
    std::vector<TrainRun> results(runs);
    std::vector<std::vector<drl::EpisodeLog>> baselines(seeds.size());
    parallel_for(runs + seeds.size(), opts.workers, [&](std::size_t i) {
        if (i < runs)
            results[i] = train_one(cfg, algos[i / seeds.size()], seeds[i % seeds.size()]);
        else
            baselines[i - runs] = random_baseline(cfg, seeds[i - runs]);
    });

    const int window = cfg.train.final_window;
    CsvTable table({"seed", "algorithm", "final_return", "random_final_return", "beats_random", "diverged"});
    Json report = {{"command", "train"}, {"final_window", window}, {"seeds", seeds}};
    bool any_diverged = false;
    std::vector<std::vector<double>> finals(algos.size());
    for (std::size_t i = 0; i < runs; ++i) {
        const auto& r = results[i];
        const std::size_t si = i % seeds.size();
        const std::string tag = file_tag(r.algorithm, r.seed);
        write_text(dir / ("curve_" + tag + ".csv"), curve_csv(r.result.curve));
        write_json(dir / ("checkpoint_" + tag + ".json"),
                   checkpoint_json(r.result.network, r.algorithm, r.seed, cfg, r.result.diverged));
        const double baseline = drl::final_window_mean(baselines[si], window);
        const double final =
            r.result.curve.empty() ? -std::numeric_limits<double>::infinity() : drl::final_window_mean(r.result.curve, window);
        finals[i / seeds.size()].push_back(final);
        any_diverged = any_diverged || r.result.diverged;
        if (r.result.diverged) err << fmt::format("{}: {}\n", tag, r.result.diagnostic);
        table.add_row({std::to_string(r.seed), std::string(drl::to_string(r.algorithm)), format_number(final),
                       format_number(baseline), final > baseline ? "1" : "0", r.result.diverged ? "1" : "0"});
    }
    Json per_algo = Json::object();
    for (std::size_t a = 0; a < algos.size(); ++a) {
        double mean = 0.0;
        int beats = 0;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            mean += finals[a][s] / seeds.size();
            if (finals[a][s] > drl::final_window_mean(baselines[s], window)) ++beats;
        }
        per_algo[std::string(drl::to_string(algos[a]))] = {{"mean_final_return", nullable(mean)},
                                                          {"final_returns", finals[a]},
                                                          {"beats_random", beats}};
    }
    std::vector<double> random_finals;
    double random_mean = 0.0;
    for (const auto& b : baselines) {
        random_finals.push_back(drl::final_window_mean(b, window));
        random_mean += random_finals.back() / baselines.size();
    }
    per_algo["random"] = {{"mean_final_return", random_mean}, {"final_returns", random_finals}};
    report["algorithms"] = per_algo;
    if (algos.size() == 2) {
        int wins = 0;
        int ties = 0;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            if (finals[1][s] > finals[0][s]) ++wins;
            if (finals[1][s] == finals[0][s]) ++ties;
        }
        const int trials = static_cast<int>(seeds.size()) - ties;
        const double ddqn_mean = per_algo["ddqn"]["mean_final_return"].is_null()
                                     ? -std::numeric_limits<double>::infinity()
                                     : per_algo["ddqn"]["mean_final_return"].get<double>();
        const double dueling_mean = per_algo["dueling"]["mean_final_return"].is_null()
                                        ? -std::numeric_limits<double>::infinity()
                                        : per_algo["dueling"]["mean_final_return"].get<double>();
        report["dueling_vs_ddqn"] = {{"dueling_wins", wins},
                                     {"ties", ties},
                                     {"sign_test_p_value", sign_test_p_value(wins, trials)},
                                     {"dueling_mean_ge_ddqn", dueling_mean >= ddqn_mean}};
    }
    report["config"] = to_json(cfg);
    write_text(dir / "comparison.csv", table.str());
    write_json(dir / "comparison.json", report);
    out << table.str();
    if (any_diverged) {
        err << "training diverged; partial curves and last valid checkpoints were written\n";
        return 3;
    }
    return 0;
}

int run_evaluate(const CommandOptions& opts, std::ostream& out, std::ostream&) {
    if (!opts.checkpoint) throw std::invalid_argument("--checkpoint is required for evaluate");
    const ExperimentConfig cfg = load_for_command(opts);
    const Checkpoint ck = load_checkpoint(*opts.checkpoint);
    mdp::MdpEnv env(cfg.scenario, cfg.actions);
    const auto& spec = ck.network.spec();
    if (spec.input_size != env.observation_size() || spec.outputs != env.action_count())
        throw std::invalid_argument("checkpoint network does not match the configured environment");
    drl::TrainConfig tc = cfg.train;
    tc.history = spec.window;
    const std::uint64_t seed = opts.seed ? *opts.seed : ck.seed;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < cfg.train.final_window; ++i)
        seeds.push_back(derive_seed(seed, "evaluation", static_cast<std::uint64_t>(i)));
    const auto greedy = drl::evaluate(env, ck.network, tc, seeds);
    const auto random = drl::random_policy(env, tc, seeds, seed);
    const auto dir = resolve_output_dir(opts.out);
    const std::string tag = file_tag(ck.algorithm, seed);
    write_text(dir / ("evaluation_" + tag + ".csv"), curve_csv(greedy));
    double violation = 0.0;
    for (const auto& e : greedy) violation += e.metric / greedy.size();
    const double mean = drl::final_window_mean(greedy, static_cast<int>(greedy.size()));
    const double random_mean = drl::final_window_mean(random, static_cast<int>(random.size()));
    Json j = {{"command", "evaluate"},
              {"checkpoint", *opts.checkpoint},
              {"algorithm", drl::to_string(ck.algorithm)},
              {"seed", seed},
              {"episodes", seeds.size()},
              {"mean_return", mean},
              {"random_mean_return", random_mean},
              {"mean_peak_aoi_violation", violation}};
    j["config"] = to_json(cfg);
    write_json(dir / ("evaluation_" + tag + ".json"), j);
    out << fmt::format("greedy mean return {:.6g}, random {:.6g}, peak-AoI violation {:.4g}\n", mean, random_mean,
                       violation);
    return 0;
}

}  // namespace aoi::experiment
