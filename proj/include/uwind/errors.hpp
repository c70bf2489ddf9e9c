#pragma once

#include <stdexcept>
#include <string>

namespace uwind {

/// Bad configuration or parameters (CLI exit code 2).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or missing data: datasets, files, domain violations (CLI exit code 3).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure: undefined error norms, non-convergence (CLI exit code 4).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace uwind
