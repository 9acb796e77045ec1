#include "aoi/experiment/io.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace aoi::experiment {

std::string format_number(double v) {
    return fmt::format("{:.17g}", v);
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag) {
    std::filesystem::path dir;
    if (flag) {
        dir = *flag;
    } else if (const char* env = std::getenv("AOI_OUT_DIR"); env && *env) {
        dir = env;
    } else {
        dir = "out";
    }
    std::filesystem::create_directories(dir);
    return dir;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::logic_error("CSV row width does not match header");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            const std::string& c = cells[i];
            if (c.find_first_of(",\"\n") == std::string::npos) {
                out += c;
                continue;
            }
            out += '"';
            for (char ch : c) {
                if (ch == '"') out += '"';
                out += ch;
            }
            out += '"';
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const Json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string trace_csv(const sim::SimTrace& trace) {
    CsvTable t({"device", "subchannel", "generation_time", "delivery_time", "service_frames", "delay_frames",
                "interarrival", "peak_aoi"});
    for (const auto& r : trace.records) {
        t.add_row({std::to_string(r.device), std::to_string(r.subchannel), format_number(r.generation_time),
                   format_number(r.delivery_time), std::to_string(r.service_frames), std::to_string(r.delay_frames),
                   format_number(r.interarrival), format_number(r.peak_aoi)});
    }
    return t.str();
}

std::string curve_csv(const std::vector<drl::EpisodeLog>& curve) {
    CsvTable t({"episode", "return", "peak_aoi_violation", "loss", "reward_sum"});
    for (const auto& e : curve) {
        t.add_row({std::to_string(e.episode), format_number(e.ret), format_number(e.metric), format_number(e.loss),
                   format_number(e.reward_sum)});
    }
    return t.str();
}

Json checkpoint_json(const drl::Network& net, drl::Algorithm algo, std::uint64_t seed, const ExperimentConfig& cfg,
                     bool diverged) {
    const auto& s = net.spec();
    Json j;
    j["format"] = "aoi-checkpoint";
    j["version"] = 1;
    j["algorithm"] = drl::to_string(algo);
    j["seed"] = seed;
    j["diverged"] = diverged;
    j["network"] = {
        {"input_size", s.input_size},
        {"window", s.window},
        {"hidden", s.hidden},
        {"outputs", s.outputs},
        {"activation", drl::to_string(s.activation)},
        {"dueling", s.dueling},
        {"value_hidden", s.value_hidden},
        {"advantage_hidden", s.advantage_hidden},
        {"recurrent_size", s.recurrent_size},
    };
    j["params"] = std::vector<double>(net.params().data(), net.params().data() + net.params().size());
    j["config"] = to_json(cfg);
    return j;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    const Json j = Json::parse(in);
    if (j.value("format", "") != "aoi-checkpoint" || j.value("version", 0) != 1)
        throw std::runtime_error("unsupported checkpoint format in " + path.string());
    const Json& n = j.at("network");
    drl::NetworkSpec spec;
    spec.input_size = n.at("input_size").get<int>();
    spec.window = n.at("window").get<int>();
    spec.hidden = n.at("hidden").get<std::vector<int>>();
    spec.outputs = n.at("outputs").get<int>();
    spec.activation = drl::parse_activation(n.at("activation").get<std::string>());
    spec.dueling = n.at("dueling").get<bool>();
    spec.value_hidden = n.at("value_hidden").get<std::vector<int>>();
    spec.advantage_hidden = n.at("advantage_hidden").get<std::vector<int>>();
    spec.recurrent_size = n.at("recurrent_size").get<int>();
    Checkpoint c;
    c.network = drl::Network(spec);
    const auto params = j.at("params").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != c.network.parameter_count())
        throw std::runtime_error("checkpoint parameter count does not match its network spec");
    c.network.params() = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
    c.algorithm = drl::parse_algorithm(j.at("algorithm").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

}  // namespace aoi::experiment
