#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fuelsim {

/// Malformed input file (trace CSV, campaign CSV, model file, ...).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad pipeline configuration or unknown fixture; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Follower reached a non-positive gap; carries the offending step index.
struct SimulationError : std::runtime_error {
    SimulationError(const std::string& what, std::size_t step_index)
        : std::runtime_error(what), step(step_index) {}
    std::size_t step;
};

}  // namespace fuelsim
