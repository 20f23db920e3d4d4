#include "hpcde/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace hpcde::train {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "hpcde-checkpoint-v1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

nlohmann::json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) {
        throw CheckpointError("cannot open " + (dir / "checkpoint.json").string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
    }
    if (j.value("format", "") != kFormat) {
        throw CheckpointError("unsupported checkpoint format in " + dir.string());
    }
    return j;
}

}  // namespace

void save_checkpoint(const model::ModelParams& params, const fs::path& dir,
                     const nlohmann::json& extra) {
    fs::create_directories(dir);
    const auto& d = params.dims();
    nlohmann::json manifest = {
        {"format", kFormat},
        {"dims",
         {{"num_types", d.num_types},
          {"embed_dim", d.embed_dim},
          {"hidden_dim", d.hidden_dim},
          {"field_layers", d.field_layers},
          {"field_width", d.field_width}}},
        {"weights", "weights.bin"},
        {"metadata", extra},
    };
    nlohmann::json tensors = nlohmann::json::array();
    std::ofstream bin(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    if (!bin) {
        throw CheckpointError("cannot write " + (dir / "weights.bin").string());
    }
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.tensors().size(); ++i) {
        const auto& t = params.tensors()[i];
        tensors.push_back({{"name", params.names()[i]},
                           {"shape", t.shape()},
                           {"offset", offset},
                           {"count", t.size()}});
        bin.write(reinterpret_cast<const char*>(t.data().data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
        offset += t.size();
    }
    if (!bin) {
        throw CheckpointError("short write to " + (dir / "weights.bin").string());
    }
    manifest["tensors"] = tensors;
    manifest["total_count"] = offset;
    std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
    out << manifest.dump(1) << '\n';
    if (!out) {
        throw CheckpointError("cannot write " + (dir / "checkpoint.json").string());
    }
}

model::ModelParams load_checkpoint(const fs::path& dir) {
    const nlohmann::json j = read_manifest(dir);
    model::ModelDims dims;
    try {
        const auto& d = j.at("dims");
        dims.num_types = d.at("num_types").get<std::size_t>();
        dims.embed_dim = d.at("embed_dim").get<std::size_t>();
        dims.hidden_dim = d.at("hidden_dim").get<std::size_t>();
        dims.field_layers = d.at("field_layers").get<std::size_t>();
        dims.field_width = d.at("field_width").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint dims: " + std::string(e.what()));
    }

    const fs::path weights = dir / j.value("weights", "weights.bin");
    std::ifstream bin(weights, std::ios::binary);
    if (!bin) {
        throw CheckpointError("cannot open " + weights.string());
    }
    std::vector<char> raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
    if (raw.size() % sizeof(double) != 0) {
        throw CheckpointError(weights.string() + " is not a whole number of float64 values");
    }
    const std::size_t total = raw.size() / sizeof(double);

    std::vector<std::string> names;
    std::vector<ad::Tensor> tensors;
    try {
        for (const auto& entry : j.at("tensors")) {
            const auto offset = entry.at("offset").get<std::size_t>();
            const auto count = entry.at("count").get<std::size_t>();
            if (offset + count > total) {
                throw CheckpointError("tensor " + entry.at("name").get<std::string>() +
                                      " runs past the end of " + weights.string());
            }
            auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            if (ad::shape_product(shape) != count) {
                throw CheckpointError("tensor " + entry.at("name").get<std::string>() +
                                      " has a shape inconsistent with its count");
            }
            ad::Tensor t(std::move(shape));
            std::memcpy(t.data().data(), raw.data() + offset * sizeof(double),
                        count * sizeof(double));
            names.push_back(entry.at("name").get<std::string>());
            tensors.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("checkpoint tensor table: " + std::string(e.what()));
    }
    try {
        return model::ModelParams::from_tensors(dims, std::move(names), std::move(tensors));
    } catch (const std::exception& e) {
        throw CheckpointError("checkpoint does not match its dims: " + std::string(e.what()));
    }
}

nlohmann::json load_checkpoint_metadata(const fs::path& dir) {
    return read_manifest(dir).value("metadata", nlohmann::json::object());
}

}  // namespace hpcde::train
