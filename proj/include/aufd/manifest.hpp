#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aufd/config.hpp"

namespace aufd {

inline constexpr const char* kCodeVersion = "aufd 1.0.0";

// Everything needed to reproduce a run bit-exactly: the exact argv, the fully
// resolved config, the seed, and the declared input/output paths. Written as
// run_manifest.json beside each command's outputs.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    ModelConfig config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, double> metrics;
    double wall_seconds = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

// Recovers the argv needed to re-run the command.
std::vector<std::string> manifest_argv(const std::filesystem::path& manifest_path);

} // namespace aufd
