#pragma once

#include <stdexcept>
#include <string>

namespace mrisk {

// Bad inputs: malformed config files, inconsistent model specs, scheme
// mismatches. Maps to CLI exit code 1.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Failures while generating or post-processing paths. Maps to CLI exit code 3.
struct simulation_error : std::runtime_error {
    explicit simulation_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mrisk
