#pragma once

#include <stdexcept>
#include <string>

namespace rbm {

/// Invalid configuration: bad keys, broken invariants (p | N, CFL, ...).
/// Maps to process exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical abort: non-finite state, divergence, singular covariance.
/// Maps to process exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
    NumericError(const std::string& msg, long particle, long step)
        : std::runtime_error(msg), particle_index(particle), step_index(step) {}

    long particle_index = -1;
    long step_index = -1;
};

} // namespace rbm
