#pragma once

#include <stdexcept>
#include <string>

namespace aufd {

// Error taxonomy shared across the library. Each carries a plain message;
// callers that need machine-parseable output prefix the kind name.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MetricError : std::runtime_error {
    explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace aufd
