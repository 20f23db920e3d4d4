#include "hpcde/data/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace hpcde::data {

namespace {

std::string at_sequence(std::size_t index, const std::string& what) {
    return "sequence " + std::to_string(index) + ": " + what;
}

}  // namespace

Dataset parse_dataset(const nlohmann::json& doc, const LoadOptions& options, LoadReport* report) {
    if (!(options.time_scale > 0.0)) {
        throw DataError("time_scale must be positive");
    }
    if (!doc.is_object() || !doc.contains("dim_process") || !doc.contains("sequences")) {
        throw DataError("dataset must be an object with \"dim_process\" and \"sequences\"");
    }
    const auto& dim = doc.at("dim_process");
    if (!dim.is_number_integer() || dim.get<long long>() < 1) {
        throw DataError("\"dim_process\" must be a positive integer");
    }
    const auto num_types = static_cast<std::size_t>(dim.get<long long>());
    const auto& seqs = doc.at("sequences");
    if (!seqs.is_array()) {
        throw DataError("\"sequences\" must be an array");
    }

    LoadReport local;
    LoadReport& rep = report ? *report : local;
    Dataset out;
    out.num_types = num_types;
    out.sequences.reserve(seqs.size());

    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const auto& raw = seqs[i];
        if (!raw.is_array()) {
            throw DataError(at_sequence(i, "must be an array of events"));
        }
        EventSequence seq;
        seq.events.reserve(raw.size());
        for (std::size_t j = 0; j < raw.size(); ++j) {
            const auto& ev = raw[j];
            if (!ev.is_object() || !ev.contains("k") || !ev.contains("t") ||
                !ev.at("k").is_number_integer() || !ev.at("t").is_number()) {
                throw DataError(at_sequence(i, "event " + std::to_string(j) +
                                                   " must be {\"k\": int, \"t\": number}"));
            }
            const long long k = ev.at("k").get<long long>();
            if (k < 1 || static_cast<std::size_t>(k) > num_types) {
                throw DataError(at_sequence(i, "event " + std::to_string(j) + " has type " +
                                                   std::to_string(k) + " outside [1, " +
                                                   std::to_string(num_types) + "]"));
            }
            double t = ev.at("t").get<double>();
            if (options.time_scale != 1.0) {
                t /= options.time_scale;
            }
            seq.events.push_back({static_cast<std::size_t>(k - 1), t});
        }
        if (seq.empty()) {
            rep.rejected += 1;
            rep.diagnostics.push_back(at_sequence(i, "empty, skipped"));
            continue;
        }
        if (options.jitter > 0.0) {
            // Ties are judged on the raw times so runs of equal stamps fan out.
            double raw_prev = seq.events.front().time;
            for (std::size_t j = 1; j < seq.size(); ++j) {
                const double raw = seq.events[j].time;
                if (raw == raw_prev) {
                    seq.events[j].time = seq.events[j - 1].time + options.jitter;
                    rep.jittered += 1;
                }
                raw_prev = raw;
            }
        }
        if (auto defect = describe_defect(seq, num_types); !defect.empty()) {
            if (!options.skip_invalid) {
                throw DataError(at_sequence(i, defect));
            }
            rep.rejected += 1;
            rep.diagnostics.push_back(at_sequence(i, defect + ", skipped"));
            continue;
        }
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << doc.dump(1) << '\n';
    if (!out) {
        throw DataError("write failed for " + path.string());
    }
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options,
                     LoadReport* report) {
    const auto doc = read_json_file(path);
    try {
        return parse_dataset(doc, options, report);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

nlohmann::json dataset_to_json(const Dataset& dataset) {
    nlohmann::json seqs = nlohmann::json::array();
    for (const auto& seq : dataset.sequences) {
        nlohmann::json events = nlohmann::json::array();
        for (const auto& e : seq.events) {
            events.push_back({{"k", e.type + 1}, {"t", e.time}});
        }
        seqs.push_back(std::move(events));
    }
    return {{"dim_process", dataset.num_types}, {"sequences", std::move(seqs)}};
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    write_json_file(dataset_to_json(dataset), path);
}

DatasetStats dataset_stats(const Dataset& dataset) {
    DatasetStats s;
    s.num_types = dataset.num_types;
    s.num_sequences = dataset.sequences.size();
    if (dataset.sequences.empty()) {
        return s;
    }
    s.min_length = std::numeric_limits<std::size_t>::max();
    for (const auto& seq : dataset.sequences) {
        s.min_length = std::min(s.min_length, seq.size());
        s.max_length = std::max(s.max_length, seq.size());
        s.num_events += seq.size();
    }
    s.mean_length = static_cast<double>(s.num_events) / static_cast<double>(s.num_sequences);
    return s;
}

}  // namespace hpcde::data
