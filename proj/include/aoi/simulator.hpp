#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "aoi/fbc_channel.hpp"
#include "aoi/random_access.hpp"
#include "aoi/rng.hpp"
#include "aoi/snc_bounds.hpp"

namespace aoi::sim {

// Vector-valued fields accept one entry (broadcast) or the full length noted.
struct ScenarioConfig {
    int devices = 1;
    int subchannels = 1;
    int episode_frames = 50;   // decision epochs per episode
    long frames = 1000;        // simulation length for run()
    long target_updates = 0;   // stop run() early once this many updates are delivered; 0 disables

    double message_bits = 100.0;
    double frame_duration = 0.1;
    std::vector<double> bandwidth{1e5};  // per subchannel
    std::vector<int> blocklength{400};   // per subchannel
    double path_loss_exponent = 3.0;
    double noise_power = 1e-9;
    double fading_mean = 1.0;
    double cell_radius = 500.0;

    std::vector<double> transmit_power{0.1};  // per device-subchannel, row major
    double power_cap = 0.0;                   // 0 disables the check
    std::optional<double> mean_snr_db;        // per-device power inversion to this mean SNR

    std::vector<double> arrival{1.0};  // lambda per device-subchannel, row major
    snc::InterarrivalParam interarrival_param = snc::InterarrivalParam::mean;
    snc::ArrivalUnits arrival_units = snc::ArrivalUnits::literal;
    access::PoSemantics po_semantics = access::PoSemantics::literal;
    snc::QoSBudget qos;

    std::vector<int> assignment;           // per device, -1 unassigned; empty means k mod L
    std::vector<double> p_access{1.0};     // per subchannel

    std::optional<double> decode_error_override;
    int initial_backlog = 0;
    bool record_queues = true;
    std::uint64_t seed = 1;

    void validate() const;

    fbc::ChannelModel channel(int l) const;
    int rb_count(int l) const;
    int blocklength_of(int l) const;
    double lambda(int k, int l) const;
    // Lambda a device uses when it holds no subchannel.
    double lambda_unassigned(int k) const;
    double configured_power(int k, int l) const;
    double mean_snr_linear() const;
    std::vector<int> resolved_assignment() const;
    double p_access_of(int l) const;
};

struct FrameAction {
    std::vector<int> assignment;    // per device, -1 for none
    std::vector<double> p_access;   // per subchannel
    double power_scale = 1.0;
};

FrameAction static_action(const ScenarioConfig& cfg);

struct UpdateRecord {
    int device = 0;
    int subchannel = -1;
    double generation_time = 0.0;  // s
    double delivery_time = 0.0;    // s, end of the delivering frame
    int service_frames = 0;        // frames at head of line, including the successful one
    int delay_frames = 0;          // delivering frame minus first eligible frame
    double interarrival = 0.0;     // s, since the previous update of the same device
    double peak_aoi = 0.0;         // s, interarrival plus service time
};

struct DeviceCounters {
    long arrivals = 0;
    long deliveries = 0;
    long backlogged_frames = 0;
    long attempts = 0;
    long solo = 0;
    long collisions = 0;
    long decode_failures = 0;
};

// Attempts by the lowest-index device on a subchannel in frames where every
// other device on that subchannel was backlogged. Under that condition the
// collision-free probability has the closed form; `expected_sum` accumulates
// it per counted attempt.
struct TaggedAccess {
    long attempts = 0;
    long solo = 0;
    double expected_sum = 0.0;
};

struct SimTrace {
    std::uint64_t seed = 0;
    long frames = 0;
    std::vector<UpdateRecord> records;
    std::vector<int> collisions_per_frame;
    std::vector<int> queue_lengths;  // frames x devices, row major; empty unless recorded
    std::vector<DeviceCounters> devices;
    std::vector<TaggedAccess> tagged;  // per subchannel
    std::vector<long> final_queue;
};

struct DeviceOutcome {
    bool backlogged = false;
    bool attempted = false;
    bool solo = false;
    bool delivered = false;
    double snr = 0.0;
    double decode_error = 1.0;
};

struct FrameOutcome {
    long frame = 0;
    int collisions = 0;
    std::vector<DeviceOutcome> devices;
    std::vector<UpdateRecord> delivered;
};

class Simulator {
public:
    Simulator(ScenarioConfig cfg, std::uint64_t seed);

    const ScenarioConfig& config() const { return cfg_; }
    long frame() const { return frame_; }
    const std::vector<fbc::Position>& positions() const { return positions_; }
    // Fading gain for the upcoming frame.
    double gain(int k, int l) const { return gains_[static_cast<std::size_t>(k) * cfg_.subchannels + l]; }
    double power(int k, int l) const { return power_[static_cast<std::size_t>(k) * cfg_.subchannels + l]; }
    double snr(int k, int l, double power_scale = 1.0) const;
    double decode_error(int k, int l, double power_scale = 1.0) const;
    long backlog(int k) const { return static_cast<long>(queues_[k].size()); }

    // Throws std::invalid_argument when the action violates the allocation constraints.
    FrameOutcome step(const FrameAction& action);
    void validate_action(const FrameAction& action) const;

    const SimTrace& trace() const { return trace_; }
    SimTrace take_trace() { return std::move(trace_); }

private:
    struct Packet {
        double generation_time;
        long eligible_frame;
    };

    void draw_gains();
    double arrival_rate(int k, int l) const;

    ScenarioConfig cfg_;
    std::vector<int> rb_;
    Rng fading_rng_, arrivals_rng_, acb_rng_, rb_rng_, decode_rng_;
    std::vector<fbc::Position> positions_;
    std::vector<double> gains_;
    std::vector<double> power_;
    std::vector<std::deque<Packet>> queues_;
    std::vector<double> last_generation_;
    std::vector<long> last_delivery_;
    long frame_ = 0;
    SimTrace trace_;
};

using Policy = std::function<FrameAction(const Simulator&)>;

// Runs cfg.frames frames (or until cfg.target_updates deliveries).
SimTrace run(const ScenarioConfig& cfg, const Policy& policy, std::uint64_t seed);
SimTrace run(const ScenarioConfig& cfg, std::uint64_t seed);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long count = 0;
};

// Throws std::domain_error on an empty trace.
Estimate empirical_peak_aoi_violation(const SimTrace& trace, double threshold);
Estimate empirical_delay_violation(const SimTrace& trace, int delay_bound);
Estimate empirical_access_success(const SimTrace& trace, int subchannel);
Estimate binomial_estimate(long hits, long n);

}  // namespace aoi::sim
