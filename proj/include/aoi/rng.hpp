#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aoi {

using Rng = std::mt19937_64;

// All randomness flows from one master seed. Each consumer draws from a named
// sub-stream so that adding draws in one component never shifts another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index);

inline Rng make_stream(std::uint64_t master, std::string_view stream) {
    return Rng{derive_seed(master, stream)};
}

inline Rng make_stream(std::uint64_t master, std::string_view stream, std::uint64_t index) {
    return Rng{derive_seed(master, stream, index)};
}

// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
    return std::generate_canonical<double, 53>(rng);
}

}  // namespace aoi
