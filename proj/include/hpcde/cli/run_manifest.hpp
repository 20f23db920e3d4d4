#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hpcde::cli {

/// Everything needed to rerun a command: written as <out>/manifest.json.
struct RunManifest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    /// Input role ("train", "test", "data", "checkpoint") to SHA-256 of its bytes.
    std::map<std::string, std::string> fingerprints;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> artifacts;
    std::string started_at;
    std::string finished_at;
    std::string version;
    nlohmann::json result = nlohmann::json::object();

    [[nodiscard]] nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    void write(const std::filesystem::path& dir) const;
};

/// UTC wall-clock time as YYYY-MM-DDTHH:MM:SSZ.
[[nodiscard]] std::string utc_timestamp();
[[nodiscard]] std::string library_version();

}  // namespace hpcde::cli
