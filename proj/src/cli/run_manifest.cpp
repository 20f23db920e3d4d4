#include "hpcde/cli/run_manifest.hpp"

#include "hpcde/data/dataset_io.hpp"

#include <chrono>
#include <ctime>

namespace hpcde::cli {

nlohmann::json RunManifest::to_json() const {
    return {
        {"command", command},   {"config", config},           {"seed", seed},
        {"inputs", inputs},     {"fingerprints", fingerprints}, {"artifacts", artifacts},
        {"started_at", started_at}, {"finished_at", finished_at}, {"version", version},
        {"result", result},
    };
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.value("config", nlohmann::json::object());
    m.seed = j.value("seed", std::uint64_t{0});
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.fingerprints = j.value("fingerprints", std::map<std::string, std::string>{});
    m.artifacts = j.value("artifacts", std::vector<std::string>{});
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.version = j.value("version", "");
    m.result = j.value("result", nlohmann::json::object());
    return m;
}

void RunManifest::write(const std::filesystem::path& dir) const {
    data::write_json_file(to_json(), dir / "manifest.json");
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string library_version() { return HPCDE_VERSION; }

}  // namespace hpcde::cli
