#include "aoi/random_access.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aoi::access {
namespace {

void require_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

void AccessConfig::validate() const {
    require_probability(p_access, "p_access");
    if (rb_count < 1) throw std::domain_error("rb_count must be >= 1");
    if (contenders < 1) throw std::domain_error("contenders must be >= 1");
}

double access_success_prob(const AccessConfig& cfg) {
    cfg.validate();
    return std::pow(1.0 - cfg.p_access / cfg.rb_count, cfg.contenders - 1);
}

double access_success_prob_sum(const AccessConfig& cfg) {
    cfg.validate();
    const int others = cfg.contenders - 1;
    const double p = cfg.p_access;
    const double miss = 1.0 - 1.0 / cfg.rb_count;  // one attempting device avoids the tagged RB

    // Degenerate endpoints have a single nonzero term; log-space would hit log(0).
    if (others == 0 || p == 0.0) return 1.0;
    if (p == 1.0) return std::pow(miss, others);
    if (miss == 0.0) return std::pow(1.0 - p, others);

    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double log_miss = std::log(miss);
    const double lg_n = std::lgamma(others + 1.0);
    double sum = 0.0;
    for (int k = 0; k <= others; ++k) {
        const double log_choose = lg_n - std::lgamma(k + 1.0) - std::lgamma(others - k + 1.0);
        sum += std::exp(log_choose + k * (log_p + log_miss) + (others - k) * log_q);
    }
    return sum;
}

PoSemantics parse_po_semantics(std::string_view name) {
    if (name == "literal") return PoSemantics::literal;
    if (name == "complement") return PoSemantics::complement;
    if (name == "frame_failure") return PoSemantics::frame_failure;
    throw std::invalid_argument("unknown po_semantics '" + std::string(name) +
                                "' (expected literal, complement or frame_failure)");
}

std::string_view to_string(PoSemantics s) {
    switch (s) {
        case PoSemantics::literal: return "literal";
        case PoSemantics::complement: return "complement";
        case PoSemantics::frame_failure: return "frame_failure";
    }
    return "literal";
}

double overall_success_prob(double p_succ, double p_access, double eps, PoSemantics semantics) {
    require_probability(p_succ, "p_succ");
    require_probability(p_access, "p_access");
    require_probability(eps, "eps");
    switch (semantics) {
        case PoSemantics::literal: return p_succ * p_access * eps;
        case PoSemantics::complement: return p_succ * p_access * (1.0 - eps);
        case PoSemantics::frame_failure: return 1.0 - p_succ * p_access * (1.0 - eps);
    }
    return p_succ * p_access * eps;
}

}  // namespace aoi::access
