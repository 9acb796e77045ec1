#include "aoi/experiment/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aoi/errors.hpp"

namespace aoi::experiment {
namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Typed reads from one JSON object; remembers which keys were consumed so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const Json& root, const std::string& key, std::string parent = "")
        : path_(join(parent, key)) {
        if (!root.contains(key)) return;
        node_ = &root.at(key);
        if (!node_->is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const char* key) const { return node_ && node_->contains(key); }

    void read(const char* key, double& out) { if (const Json* v = take(key)) out = number(*v, key); }
    void read(const char* key, int& out) { if (const Json* v = take(key)) out = static_cast<int>(integer(*v, key)); }
    void read(const char* key, long& out) { if (const Json* v = take(key)) out = integer(*v, key); }
    void read(const char* key, std::size_t& out) {
        if (const Json* v = take(key)) {
            const long x = integer(*v, key);
            if (x < 0) throw ConfigError(field(key), "must be >= 0");
            out = static_cast<std::size_t>(x);
        }
    }
    void read(const char* key, bool& out) {
        if (const Json* v = take(key)) {
            if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
            out = v->get<bool>();
        }
    }
    void read(const char* key, std::string& out) {
        if (const Json* v = take(key)) {
            if (!v->is_string()) throw ConfigError(field(key), "expected a string");
            out = v->get<std::string>();
        }
    }
    void read(const char* key, std::optional<double>& out) {
        if (const Json* v = take(key)) out = v->is_null() ? std::nullopt : std::optional<double>(number(*v, key));
    }
    void read(const char* key, std::vector<double>& out) {
        if (const Json* v = take(key)) {
            out.clear();
            if (v->is_array()) {
                for (const auto& e : *v) out.push_back(number(e, key));
            } else {
                out.push_back(number(*v, key));
            }
        }
    }
    void read(const char* key, std::vector<int>& out) {
        if (const Json* v = take(key)) {
            out.clear();
            if (v->is_array()) {
                for (const auto& e : *v) out.push_back(static_cast<int>(integer(e, key)));
            } else {
                out.push_back(static_cast<int>(integer(*v, key)));
            }
        }
    }
    void read(const char* key, std::vector<std::uint64_t>& out) {
        if (const Json* v = take(key)) {
            if (!v->is_array()) throw ConfigError(field(key), "expected an array of seeds");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_integer() || e.get<long long>() < 0)
                    throw ConfigError(field(key), "expected non-negative integers");
                out.push_back(e.get<std::uint64_t>());
            }
        }
    }
    template <typename Enum, typename Parser>
    void read_enum(const char* key, Enum& out, Parser parse) {
        std::string s;
        if (!has(key)) return;
        read(key, s);
        try {
            out = parse(s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(field(key), e.what());
        }
    }

    void require(const char* key) const {
        if (!has(key)) throw ConfigError(field(key), "required field is missing");
    }

    void finish() const {
        if (!node_) return;
        for (auto it = node_->begin(); it != node_->end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key().c_str()), "unknown key");
    }

    std::string field(const char* key) const { return join(path_, key); }

private:
    const Json* take(const char* key) {
        if (!has(key)) return nullptr;
        seen_.insert(key);
        return &node_->at(key);
    }
    double number(const Json& v, const char* key) const {
        if (!v.is_number()) throw ConfigError(field(key), "expected a number");
        return v.get<double>();
    }
    long integer(const Json& v, const char* key) const {
        if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
        return v.get<long>();
    }

    std::string path_;
    const Json* node_ = nullptr;
    std::set<std::string> seen_;
};

template <typename F>
void rethrow_as(const std::string& field, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
    }
}

Json scalar_or_array(const std::vector<double>& v) {
    return v.size() == 1 ? Json(v.front()) : Json(v);
}

Json scalar_or_array(const std::vector<int>& v) {
    return v.size() == 1 ? Json(v.front()) : Json(v);
}

}  // namespace

void ExperimentConfig::validate() const {
    scenario.validate();
    rethrow_as("actions", [&] { actions.validate(); });
    rethrow_as("train", [&] { train.validate(); });
    if (!(bounds.reference_distance > 0.0)) throw ConfigError("bounds.reference_distance", "must be > 0");
    if (bounds.contenders < 0) throw ConfigError("bounds.contenders", "must be >= 0");
    if (bounds.eps_samples < 1) throw ConfigError("bounds.eps_samples", "must be >= 1");
    if (!(bounds.mu >= 1.0)) throw ConfigError("bounds.mu", "must be >= 1");
    if (bounds.search.grid_points < 3) throw ConfigError("bounds.grid_points", "must be >= 3");
    if (!(bounds.search.tolerance > 0.0)) throw ConfigError("bounds.tolerance", "must be > 0");
    if (train_seeds.empty()) throw ConfigError("train.seeds", "must not be empty");
}

int ExperimentConfig::bound_contenders() const {
    if (bounds.contenders > 0) return bounds.contenders;
    return (scenario.devices + scenario.subchannels - 1) / scenario.subchannels;
}

ExperimentConfig parse_config(const Json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    ExperimentConfig c;
    static const std::set<std::string> top{"seed", "scenario", "qos", "policy", "simulation",
                                           "bounds", "actions", "train"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!top.count(it.key())) throw ConfigError(it.key(), "unknown key");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0)
            throw ConfigError("seed", "expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }

    auto& s = c.scenario;
    Section sc(j, "scenario");
    sc.require("message_bits");
    sc.read("devices", s.devices);
    sc.read("subchannels", s.subchannels);
    sc.read("episode_frames", s.episode_frames);
    sc.read("message_bits", s.message_bits);
    sc.read("frame_duration", s.frame_duration);
    sc.read("bandwidth", s.bandwidth);
    sc.read("blocklength", s.blocklength);
    sc.read("path_loss_exponent", s.path_loss_exponent);
    sc.read("noise_power", s.noise_power);
    sc.read("fading_mean", s.fading_mean);
    sc.read("cell_radius", s.cell_radius);
    sc.read("transmit_power", s.transmit_power);
    sc.read("power_cap", s.power_cap);
    sc.read("mean_snr_db", s.mean_snr_db);
    sc.read("arrival", s.arrival);
    sc.read_enum("interarrival_param", s.interarrival_param, snc::parse_interarrival_param);
    sc.read_enum("arrival_units", s.arrival_units, snc::parse_arrival_units);
    sc.read_enum("po_semantics", s.po_semantics, access::parse_po_semantics);
    sc.finish();

    Section q(j, "qos");
    q.read("peak_aoi_threshold", s.qos.peak_aoi_threshold);
    q.read("delay_bound", s.qos.delay_bound);
    q.read("ec_threshold", s.qos.ec_threshold);
    q.read("aoi_exponent", s.qos.aoi_exponent);
    q.read("delay_exponent", s.qos.delay_exponent);
    q.read("lagrange_multiplier", s.qos.lagrange_multiplier);
    q.finish();

    Section p(j, "policy");
    p.read("assignment", s.assignment);
    p.read("p_access", s.p_access);
    p.finish();

    Section sim(j, "simulation");
    sim.read("frames", s.frames);
    sim.read("target_updates", s.target_updates);
    sim.read("decode_error_override", s.decode_error_override);
    sim.read("initial_backlog", s.initial_backlog);
    sim.read("record_queues", s.record_queues);
    sim.finish();

    Section b(j, "bounds");
    b.read("reference_distance", c.bounds.reference_distance);
    b.read("contenders", c.bounds.contenders);
    b.read("eps_samples", c.bounds.eps_samples);
    b.read("mu", c.bounds.mu);
    b.read("grid_points", c.bounds.search.grid_points);
    b.read("tolerance", c.bounds.search.tolerance);
    b.finish();

    auto& a = c.actions;
    Section ac(j, "actions");
    ac.read_enum("mode", a.mode, mdp::parse_action_mode);
    ac.read("p_grid", a.p_grid);
    ac.read("per_subchannel_threshold", a.per_subchannel_threshold);
    ac.read("require_assignment", a.require_assignment);
    ac.read("candidate_cap", a.candidate_cap);
    ac.read("power_levels", a.power_levels);
    ac.read("candidate_seed", a.candidate_seed);
    ac.finish();

    auto& t = c.train;
    Section tr(j, "train");
    tr.read("beta", t.beta);
    tr.read("learning_rate", t.learning_rate);
    tr.read("tau", t.tau);
    tr.read("tau_final", t.tau_final);
    tr.read("tau_decay_episodes", t.tau_decay_episodes);
    tr.read("psi", t.psi);
    tr.read("episodes", t.episodes);
    tr.read("replay_capacity", t.replay_capacity);
    tr.read("batch_size", t.batch_size);
    tr.read("warmup", t.warmup);
    tr.read("train_every", t.train_every);
    tr.read("history", t.history);
    tr.read("hidden", t.hidden);
    tr.read_enum("activation", t.activation, drl::parse_activation);
    tr.read("value_hidden", t.value_hidden);
    tr.read("advantage_hidden", t.advantage_hidden);
    tr.read("recurrent_size", t.recurrent_size);
    tr.read_enum("recurrent_reset", t.recurrent_reset, drl::parse_recurrent_reset);
    tr.read("grad_clip", t.grad_clip);
    tr.read("final_window", t.final_window);
    tr.read("seeds", c.train_seeds);
    tr.finish();

    s.seed = c.seed;
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
    const auto& s = c.scenario;
    Json j;
    j["seed"] = c.seed;
    j["scenario"] = {
        {"devices", s.devices},
        {"subchannels", s.subchannels},
        {"episode_frames", s.episode_frames},
        {"message_bits", s.message_bits},
        {"frame_duration", s.frame_duration},
        {"bandwidth", scalar_or_array(s.bandwidth)},
        {"blocklength", scalar_or_array(s.blocklength)},
        {"path_loss_exponent", s.path_loss_exponent},
        {"noise_power", s.noise_power},
        {"fading_mean", s.fading_mean},
        {"cell_radius", s.cell_radius},
        {"transmit_power", scalar_or_array(s.transmit_power)},
        {"power_cap", s.power_cap},
        {"mean_snr_db", s.mean_snr_db ? Json(*s.mean_snr_db) : Json(nullptr)},
        {"arrival", scalar_or_array(s.arrival)},
        {"interarrival_param", snc::to_string(s.interarrival_param)},
        {"arrival_units", snc::to_string(s.arrival_units)},
        {"po_semantics", access::to_string(s.po_semantics)},
    };
    j["qos"] = {
        {"peak_aoi_threshold", s.qos.peak_aoi_threshold}, {"delay_bound", s.qos.delay_bound},
        {"ec_threshold", s.qos.ec_threshold},             {"aoi_exponent", s.qos.aoi_exponent},
        {"delay_exponent", s.qos.delay_exponent},         {"lagrange_multiplier", s.qos.lagrange_multiplier},
    };
    j["policy"] = {{"assignment", s.resolved_assignment()}, {"p_access", scalar_or_array(s.p_access)}};
    j["simulation"] = {
        {"frames", s.frames},
        {"target_updates", s.target_updates},
        {"decode_error_override", s.decode_error_override ? Json(*s.decode_error_override) : Json(nullptr)},
        {"initial_backlog", s.initial_backlog},
        {"record_queues", s.record_queues},
    };
    j["bounds"] = {
        {"reference_distance", c.bounds.reference_distance}, {"contenders", c.bounds.contenders},
        {"eps_samples", c.bounds.eps_samples},               {"mu", c.bounds.mu},
        {"grid_points", c.bounds.search.grid_points},        {"tolerance", c.bounds.search.tolerance},
    };
    const auto& a = c.actions;
    j["actions"] = {
        {"mode", mdp::to_string(a.mode)},
        {"p_grid", a.p_grid},
        {"per_subchannel_threshold", a.per_subchannel_threshold},
        {"require_assignment", a.require_assignment},
        {"candidate_cap", a.candidate_cap},
        {"power_levels", a.power_levels},
        {"candidate_seed", a.candidate_seed},
    };
    const auto& t = c.train;
    j["train"] = {
        {"beta", t.beta},
        {"learning_rate", t.learning_rate},
        {"tau", t.tau},
        {"tau_final", t.tau_final},
        {"tau_decay_episodes", t.tau_decay_episodes},
        {"psi", t.psi},
        {"episodes", t.episodes},
        {"replay_capacity", t.replay_capacity},
        {"batch_size", t.batch_size},
        {"warmup", t.warmup},
        {"train_every", t.train_every},
        {"history", t.history},
        {"hidden", t.hidden},
        {"activation", drl::to_string(t.activation)},
        {"value_hidden", t.value_hidden},
        {"advantage_hidden", t.advantage_hidden},
        {"recurrent_size", t.recurrent_size},
        {"recurrent_reset", drl::to_string(t.recurrent_reset)},
        {"grad_clip", t.grad_clip},
        {"final_window", t.final_window},
        {"seeds", c.train_seeds},
    };
    return j;
}

const std::vector<std::string>& sweepable_names() {
    static const std::vector<std::string> names{
        "theta",        "aoi_threshold", "blocklength",    "transmit_power", "mean_snr_db",
        "arrival_rate", "p_access",      "contenders",     "delay_bound",    "delay_exponent",
        "message_bits", "ec_threshold",  "reference_distance"};
    return names;
}

namespace {

std::string usage_names() {
    std::string out;
    for (const auto& n : sweepable_names()) out += (out.empty() ? "" : ", ") + n;
    return out;
}

double parse_double(std::string_view s, std::string_view spec) {
    const std::string str(s);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(str, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != str.size() || str.empty())
        throw std::invalid_argument("bad number '" + str + "' in sweep '" + std::string(spec) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

SweepSpec parse_sweep(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
        throw std::invalid_argument("sweep must look like name=v1,v2 or name=lo:hi:n[:log]");
    SweepSpec spec;
    spec.name = std::string(text.substr(0, eq));
    const auto& names = sweepable_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end())
        throw std::invalid_argument("unknown sweep parameter '" + spec.name + "'; sweepable: " + usage_names());
    const std::string_view body = text.substr(eq + 1);
    if (body.find(':') != std::string_view::npos) {
        const auto parts = split(body, ':');
        if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "log"))
            throw std::invalid_argument("range sweep must be lo:hi:n or lo:hi:n:log");
        const double lo = parse_double(parts[0], text);
        const double hi = parse_double(parts[1], text);
        const double nd = parse_double(parts[2], text);
        const int n = static_cast<int>(nd);
        if (n < 1 || n != nd) throw std::invalid_argument("range sweep point count must be a positive integer");
        const bool log = parts.size() == 4;
        if (log && !(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("log sweep needs positive endpoints");
        for (int i = 0; i < n; ++i) {
            const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
            spec.values.push_back(log ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
        }
        if (n > 1) spec.values.back() = hi;
    } else {
        for (auto part : split(body, ',')) spec.values.push_back(parse_double(part, text));
    }
    if (spec.values.empty()) throw std::invalid_argument("sweep has no values");
    return spec;
}

void apply_sweep_value(ExperimentConfig& cfg, const std::string& name, double v) {
    auto& s = cfg.scenario;
    auto as_int = [&](double x) {
        if (x != std::floor(x)) throw std::invalid_argument(name + " takes integer values");
        return static_cast<int>(x);
    };
    if (name == "theta") s.qos.aoi_exponent = v;
    else if (name == "aoi_threshold") s.qos.peak_aoi_threshold = v;
    else if (name == "blocklength") s.blocklength = {as_int(v)};
    else if (name == "transmit_power") s.transmit_power = {v};
    else if (name == "mean_snr_db") s.mean_snr_db = v;
    else if (name == "arrival_rate") s.arrival = {v};
    else if (name == "p_access") s.p_access = {v};
    else if (name == "contenders") cfg.bounds.contenders = as_int(v);
    else if (name == "delay_bound") s.qos.delay_bound = as_int(v);
    else if (name == "delay_exponent") s.qos.delay_exponent = v;
    else if (name == "message_bits") s.message_bits = v;
    else if (name == "ec_threshold") s.qos.ec_threshold = v;
    else if (name == "reference_distance") cfg.bounds.reference_distance = v;
    else throw std::invalid_argument("unknown sweep parameter '" + name + "'; sweepable: " + usage_names());
}

}  // namespace aoi::experiment
