#pragma once

#include "hpcde/data/event_sequence.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hpcde::data {

struct LoadOptions {
    /// Every time is divided by this constant after parsing. 1 leaves raw times.
    double time_scale = 1.0;
    /// When positive, an event whose time equals its predecessor's is moved to
    /// predecessor + jitter. Decreasing times are still rejected.
    double jitter = 0.0;
    /// Drop malformed sequences with a diagnostic instead of failing the load.
    bool skip_invalid = false;
};

struct LoadReport {
    std::size_t rejected = 0;
    std::size_t jittered = 0;
    std::vector<std::string> diagnostics;
};

/// Parses {"dim_process": K, "sequences": [[{"k": 1..K, "t": float}, ...], ...]}.
/// Empty sequences are dropped with a diagnostic. Out-of-range types always throw.
[[nodiscard]] Dataset parse_dataset(const nlohmann::json& doc, const LoadOptions& options = {},
                                    LoadReport* report = nullptr);

[[nodiscard]] Dataset load_dataset(const std::filesystem::path& path,
                                   const LoadOptions& options = {}, LoadReport* report = nullptr);

[[nodiscard]] nlohmann::json dataset_to_json(const Dataset& dataset);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Per-dataset summary in the shape of a dataset characteristics table.
struct DatasetStats {
    std::size_t num_types = 0;
    std::size_t num_sequences = 0;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
    double mean_length = 0.0;
    std::size_t num_events = 0;
};

[[nodiscard]] DatasetStats dataset_stats(const Dataset& dataset);

/// Writes a JSON document with a trailing newline. Throws DataError when the
/// target cannot be opened.
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);
[[nodiscard]] nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace hpcde::data
