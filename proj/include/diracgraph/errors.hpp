#pragma once

#include <stdexcept>
#include <string>

namespace diracgraph {

/// Invalid input documents, parameters out of range, unknown ids.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, singular systems, coarse meshes.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace diracgraph
