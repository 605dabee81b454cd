#include "aufd/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "aufd/errors.hpp"
#include "aufd/harness.hpp"

namespace aufd {

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["argv"] = manifest.argv;
    j["seed"] = manifest.seed;
    j["config"] = manifest.config.to_map();
    j["config_hash"] = config_hash(manifest.config);
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["metrics"] = manifest.metrics;
    j["code_version"] = kCodeVersion;
    j["wall_seconds"] = manifest.wall_seconds;
    const auto path = dir / "run_manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << j.dump(2) << "\n";
}

std::vector<std::string> manifest_argv(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    nlohmann::json j;
    in >> j;
    if (!j.contains("argv")) throw FormatError(manifest_path.string() + ": manifest has no argv");
    return j["argv"].get<std::vector<std::string>>();
}

} // namespace aufd
