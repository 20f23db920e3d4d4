#include "hpcde/train/config.hpp"

#include <set>
#include <type_traits>

namespace hpcde::train {

using model::ConfigError;

void TrainConfig::validate() const {
    dims.validate();
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw ConfigError(std::string(name) + " must be positive");
        }
    };
    positive(learning_rate, "learning_rate");
    positive(alpha1, "alpha1");
    positive(alpha2, "alpha2");
    if (!(weight_decay >= 0.0)) {
        throw ConfigError("weight_decay must be non-negative");
    }
    if (batch_size == 0) {
        throw ConfigError("batch_size must be at least 1");
    }
    if (patience == 0) {
        throw ConfigError("patience must be at least 1");
    }
    if (substeps_per_segment == 0) {
        throw ConfigError("substeps_per_segment must be at least 1");
    }
    if (workers == 0) {
        throw ConfigError("workers must be at least 1");
    }
}

std::vector<std::string> preset_names() {
    return {"mimic", "memetracker", "retweet", "stackoverflow"};
}

TrainConfig preset(const std::string& name) {
    struct Row {
        const char* name;
        double lr;
        std::size_t dz;
        double a1;
        double a2;
        std::size_t m;
        std::size_t dh;
        std::size_t width;
        std::size_t batch;
    };
    static constexpr Row rows[] = {
        {"mimic", 1e-3, 70, 0.1, 0.01, 6, 128, 90, 16},
        {"memetracker", 1e-3, 70, 1e-4, 1e-4, 5, 64, 15, 512},
        {"retweet", 5e-3, 80, 1e-4, 1e-4, 4, 16, 15, 128},
        {"stackoverflow", 5e-3, 50, 1.0, 1e-2, 4, 32, 15, 16},
    };
    for (const auto& r : rows) {
        if (name == r.name) {
            TrainConfig c;
            c.learning_rate = r.lr;
            c.dims.embed_dim = r.dz;
            c.alpha1 = r.a1;
            c.alpha2 = r.a2;
            c.dims.field_layers = r.m;
            c.dims.hidden_dim = r.dh;
            c.dims.field_width = r.width;
            c.batch_size = r.batch;
            c.patience = 5;
            c.weight_decay = 1e-5;
            return c;
        }
    }
    throw ConfigError("unknown preset '" + name + "'");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {
        {"num_types", c.dims.num_types},
        {"embed_dim", c.dims.embed_dim},
        {"hidden_dim", c.dims.hidden_dim},
        {"field_layers", c.dims.field_layers},
        {"field_width", c.dims.field_width},
        {"learning_rate", c.learning_rate},
        {"weight_decay", c.weight_decay},
        {"batch_size", c.batch_size},
        {"max_iter", c.max_iter},
        {"patience", c.patience},
        {"alpha1", c.alpha1},
        {"alpha2", c.alpha2},
        {"substeps_per_segment", c.substeps_per_segment},
        {"marked_event_term", c.marked_event_term},
        {"seed", c.seed},
        {"workers", c.workers},
    };
}

TrainConfig apply_json(TrainConfig c, const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("training config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "num_types", "embed_dim", "hidden_dim", "field_layers", "field_width", "learning_rate",
        "weight_decay", "batch_size", "max_iter", "patience", "alpha1", "alpha2",
        "substeps_per_segment", "marked_event_term", "seed", "workers"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown training config key '" + key + "'");
        }
    }
    try {
        auto take = [&](const char* key, auto& field) {
            if (!j.contains(key)) {
                return;
            }
            const auto& v = j.at(key);
            using T = std::decay_t<decltype(field)>;
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                // Signed JSON integers are fine when non-negative.
                if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
                    throw ConfigError(std::string(key) + " must be a non-negative integer");
                }
            }
            v.get_to(field);
        };
        take("num_types", c.dims.num_types);
        take("embed_dim", c.dims.embed_dim);
        take("hidden_dim", c.dims.hidden_dim);
        take("field_layers", c.dims.field_layers);
        take("field_width", c.dims.field_width);
        take("learning_rate", c.learning_rate);
        take("weight_decay", c.weight_decay);
        take("batch_size", c.batch_size);
        take("max_iter", c.max_iter);
        take("patience", c.patience);
        take("alpha1", c.alpha1);
        take("alpha2", c.alpha2);
        take("substeps_per_segment", c.substeps_per_segment);
        take("marked_event_term", c.marked_event_term);
        take("seed", c.seed);
        take("workers", c.workers);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad training config value: ") + e.what());
    }
    return c;
}

}  // namespace hpcde::train
