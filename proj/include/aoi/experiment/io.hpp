#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aoi/drl/trainer.hpp"
#include "aoi/experiment/config.hpp"
#include "aoi/simulator.hpp"

namespace aoi::experiment {

// Round-trip decimal form used in every CSV.
std::string format_number(double v);

// --out if given, else $AOI_OUT_DIR, else ./out. The directory is created.
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::vector<std::string> row);
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

std::string trace_csv(const sim::SimTrace& trace);
std::string curve_csv(const std::vector<drl::EpisodeLog>& curve);

Json checkpoint_json(const drl::Network& net, drl::Algorithm algo, std::uint64_t seed, const ExperimentConfig& cfg,
                     bool diverged);
struct Checkpoint {
    drl::Network network;
    drl::Algorithm algorithm = drl::Algorithm::ddqn;
    std::uint64_t seed = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aoi::experiment
