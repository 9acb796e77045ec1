#pragma once

#include <string_view>

namespace aoi::access {

struct AccessConfig {
    double p_access = 1.0;  // ACB threshold broadcast on the subchannel
    int rb_count = 1;
    int contenders = 1;     // devices sharing the subchannel, including the tagged one

    void validate() const;
};

// Probability that the tagged device's RB is not picked by any of the other
// contenders, each of which attempts with probability p_access.
double access_success_prob(const AccessConfig& cfg);

// Same quantity by explicit summation over the number of other attempting
// devices. Kept as an independent cross-check of the closed form.
double access_success_prob_sum(const AccessConfig& cfg);

// How the decode factor enters the per-frame probability p_o fed to the
// service-time transform.
//   literal        p_succ * p_access * eps
//   complement     p_succ * p_access * (1 - eps)
//   frame_failure  1 - p_succ * p_access * (1 - eps), the probability that a
//                  frame does not deliver the head-of-line update
enum class PoSemantics { literal, complement, frame_failure };

PoSemantics parse_po_semantics(std::string_view name);
std::string_view to_string(PoSemantics s);

double overall_success_prob(double p_succ, double p_access, double eps,
                            PoSemantics semantics = PoSemantics::literal);

}  // namespace aoi::access
