#include "hpcde/cli/commands.hpp"

#include "hpcde/ad/tensor.hpp"
#include "hpcde/cli/fingerprint.hpp"
#include "hpcde/cli/run_manifest.hpp"
#include "hpcde/data/batching.hpp"
#include "hpcde/data/exp_hawkes.hpp"
#include "hpcde/train/checkpoint.hpp"
#include "hpcde/train/trainer.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace hpcde::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw CommandError(exit_failure, "cannot write " + path.string());
    }
}

fs::path prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw CommandError(exit_failure, "cannot create output directory " + dir.string());
    }
    return dir;
}

std::string csv_row(const std::vector<std::string>& names, const std::vector<double>& values) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < names.size(); ++i) {
        os << (i ? "," : "") << names[i];
    }
    os << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << (i ? "," : "") << values[i];
    }
    os << '\n';
    return os.str();
}

data::Dataset load_input(const fs::path& path, const data::LoadOptions& load, std::ostream& log) {
    if (!fs::exists(path)) {
        throw CommandError(exit_data, "dataset not found: " + path.string());
    }
    data::LoadReport report;
    data::Dataset ds = data::load_dataset(path, load, &report);
    for (const auto& d : report.diagnostics) {
        log << "warning: " << path.string() << ": " << d << '\n';
    }
    if (ds.sequences.empty()) {
        throw CommandError(exit_data, "dataset has no usable sequences: " + path.string());
    }
    return ds;
}

json load_options_json(const data::LoadOptions& l) {
    return {{"time_scale", l.time_scale}, {"jitter", l.jitter}, {"skip_invalid", l.skip_invalid}};
}

data::LoadOptions apply_load_json(data::LoadOptions l, const json& j) {
    if (!j.is_object()) {
        throw model::ConfigError("\"load\" must be an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (key != "time_scale" && key != "jitter" && key != "skip_invalid") {
            throw model::ConfigError("unknown load option '" + key + "'");
        }
    }
    l.time_scale = j.value("time_scale", l.time_scale);
    l.jitter = j.value("jitter", l.jitter);
    l.skip_invalid = j.value("skip_invalid", l.skip_invalid);
    return l;
}

model::ModelParams load_model(const fs::path& dir) {
    if (!fs::exists(dir / "checkpoint.json")) {
        throw CommandError(exit_data, "checkpoint not found: " + dir.string());
    }
    return train::load_checkpoint(dir);
}

void check_same_k(const model::ModelParams& params, const data::Dataset& ds) {
    if (params.dims().num_types != ds.num_types) {
        throw CommandError(exit_data, "checkpoint has K = " +
                                          std::to_string(params.dims().num_types) +
                                          " event types but the dataset has K = " +
                                          std::to_string(ds.num_types));
    }
}

train::EvalOptions eval_options_for(const fs::path& checkpoint, std::optional<std::size_t> substeps,
                                    std::optional<std::size_t> workers, const Environment& env) {
    train::EvalOptions e;
    const json meta = train::load_checkpoint_metadata(checkpoint);
    if (meta.contains("train_config")) {
        const train::TrainConfig c = train::apply_json({}, meta.at("train_config"));
        e = train::EvalOptions::from(c);
    }
    e.workers = 1;
    if (env.workers) {
        e.workers = *env.workers;
    }
    if (workers) {
        e.workers = *workers;
    }
    if (substeps) {
        e.substeps_per_segment = *substeps;
    }
    if (e.substeps_per_segment == 0 || e.workers == 0) {
        throw model::ConfigError("substeps and workers must be at least 1");
    }
    return e;
}

}  // namespace

Environment Environment::from_process() {
    Environment env;
    if (const char* root = std::getenv("HPCDE_OUTPUT_ROOT"); root && *root) {
        env.output_root = fs::path(root);
    }
    if (const char* w = std::getenv("HPCDE_WORKERS"); w && *w) {
        char* end = nullptr;
        const long v = std::strtol(w, &end, 10);
        if (*end != '\0' || v < 1) {
            throw model::ConfigError(std::string("HPCDE_WORKERS must be a positive integer, got '") +
                                     w + "'");
        }
        env.workers = static_cast<std::size_t>(v);
    }
    return env;
}

fs::path Environment::resolve_output(const fs::path& out) const {
    if (out.empty()) {
        throw model::ConfigError("an output directory is required");
    }
    if (out.is_relative() && output_root) {
        return *output_root / out;
    }
    return out;
}

void cmd_generate(const GenerateOptions& o, const Environment& env, std::ostream& log) {
    const std::string started = utc_timestamp();
    if (o.mu.empty()) {
        throw model::ConfigError("--mu needs at least one base intensity");
    }
    const std::size_t k = o.mu.size();
    data::ExpHawkesParams params;
    if (o.alpha.size() == 1) {
        params = data::ExpHawkesParams::self_exciting(o.mu, o.alpha[0], o.beta, o.horizon);
    } else if (o.alpha.size() == k * k) {
        params.mu = o.mu;
        params.horizon = o.horizon;
        params.alpha.assign(k, std::vector<double>(k));
        params.decay.assign(k, std::vector<double>(k, o.beta));
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c) {
                params.alpha[r][c] = o.alpha[r * k + c];
            }
        }
    } else {
        throw model::ConfigError("--alpha needs 1 or K*K = " + std::to_string(k * k) +
                                 " values, got " + std::to_string(o.alpha.size()));
    }
    try {
        data::validate_params(params);
    } catch (const data::DataError& e) {
        throw CommandError(exit_config, e.what());
    }
    if (o.n == 0) {
        throw model::ConfigError("--n must be at least 1");
    }
    if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0)) {
        throw model::ConfigError("--train-fraction must lie strictly between 0 and 1");
    }
    const fs::path out = env.resolve_output(o.out);

    auto sequences = data::generate_hawkes(params, o.n, o.seed);
    std::vector<data::EventSequence> kept;
    for (auto& s : sequences) {
        if (!s.empty()) {
            kept.push_back(std::move(s));
        }
    }
    if (kept.size() < 2) {
        throw CommandError(exit_data, "fewer than two nonempty sequences were generated");
    }
    const std::size_t dropped = o.n - kept.size();
    auto split = data::split_dataset(kept, o.train_fraction, o.seed);

    prepare_output(out);
    data::save_dataset({k, std::move(split.train)}, out / "train.json");
    data::save_dataset({k, std::move(split.test)}, out / "test.json");
    json sidecar = data::params_to_json(params);
    sidecar["branching_ratio"] = data::branching_ratio(params);
    sidecar["seed"] = o.seed;
    sidecar["n_sequences"] = o.n;
    sidecar["dropped_empty"] = dropped;
    sidecar["train_fraction"] = o.train_fraction;
    data::write_json_file(sidecar, out / "generator.json");

    RunManifest m;
    m.command = "generate";
    m.config = {{"mu", o.mu},           {"alpha", o.alpha}, {"beta", o.beta},
                {"horizon", o.horizon}, {"n", o.n},         {"seed", o.seed},
                {"train_fraction", o.train_fraction}};
    m.seed = o.seed;
    m.artifacts = {"train.json", "test.json", "generator.json"};
    m.fingerprints = {{"train", file_sha256(out / "train.json")},
                      {"test", file_sha256(out / "test.json")}};
    m.result = {{"empty_sequences_dropped", dropped}, {"sequences", kept.size()}};
    m.started_at = started;
    m.finished_at = utc_timestamp();
    m.version = library_version();
    m.write(out);
    log << "wrote " << kept.size() << " sequences (" << dropped << " empty dropped) to "
        << out.string() << '\n';
}

int cmd_train(const TrainOptions& o, const Environment& env, std::ostream& log) {
    const std::string started = utc_timestamp();
    json file = json::object();
    if (o.config_path) {
        if (!fs::exists(*o.config_path)) {
            throw CommandError(exit_config, "config file not found: " + o.config_path->string());
        }
        try {
            file = data::read_json_file(*o.config_path);
        } catch (const data::DataError& e) {
            throw CommandError(exit_config, e.what());
        }
        // A run manifest can be replayed directly.
        if (file.is_object() && file.contains("command")) {
            file = file.at("config");
        }
        if (!file.is_object()) {
            throw model::ConfigError("config file must hold a JSON object");
        }
        static const std::set<std::string> known = {"preset", "data", "out", "train", "load"};
        for (const auto& [key, _] : file.items()) {
            if (!known.contains(key)) {
                throw model::ConfigError("unknown config key '" + key + "'");
            }
        }
    }

    std::optional<std::string> preset_name = o.preset;
    if (!preset_name && file.contains("preset") && !file.at("preset").is_null()) {
        preset_name = file.at("preset").get<std::string>();
    }
    train::TrainConfig config = preset_name ? train::preset(*preset_name) : train::TrainConfig{};
    const json file_train = file.value("train", json::object());
    config = train::apply_json(config, file_train);
    if (env.workers) {
        config.workers = *env.workers;
    }
    auto over = [](auto& field, const auto& flag) {
        if (flag) {
            field = *flag;
        }
    };
    over(config.max_iter, o.max_iter);
    over(config.seed, o.seed);
    over(config.learning_rate, o.learning_rate);
    over(config.batch_size, o.batch_size);
    over(config.patience, o.patience);
    over(config.substeps_per_segment, o.substeps);
    over(config.workers, o.workers);
    over(config.alpha1, o.alpha1);
    over(config.alpha2, o.alpha2);
    over(config.dims.embed_dim, o.embed_dim);
    over(config.dims.hidden_dim, o.hidden_dim);
    over(config.dims.field_layers, o.field_layers);
    over(config.dims.field_width, o.field_width);
    over(config.marked_event_term, o.marked_event_term);

    data::LoadOptions load;
    if (file.contains("load")) {
        load = apply_load_json(load, file.at("load"));
    }
    over(load.time_scale, o.time_scale);
    over(load.jitter, o.jitter);

    fs::path data_path;
    if (o.data) {
        data_path = *o.data;
    } else if (file.contains("data")) {
        data_path = file.at("data").get<std::string>();
    } else {
        throw model::ConfigError("no training dataset given (--data or \"data\" in the config)");
    }
    fs::path out_arg;
    if (o.out) {
        out_arg = *o.out;
    } else if (file.contains("out")) {
        out_arg = file.at("out").get<std::string>();
    } else {
        throw model::ConfigError("no output directory given (--out or \"out\" in the config)");
    }
    const fs::path out = env.resolve_output(out_arg);

    const data::Dataset ds = load_input(data_path, load, log);
    if (file_train.contains("num_types") && config.dims.num_types != ds.num_types) {
        throw CommandError(exit_data, "config has num_types = " +
                                          std::to_string(config.dims.num_types) +
                                          " but the dataset has K = " +
                                          std::to_string(ds.num_types));
    }
    config.dims.num_types = ds.num_types;
    config.validate();

    const auto result = train::train(ds.sequences, config, [&](const train::EpochRecord& r) {
        if (!o.quiet) {
            log << "epoch " << r.epoch << "  loss " << std::setprecision(6) << r.loss
                << "  ll/event "
                << (r.num_events ? r.log_prob / static_cast<double>(r.num_events) : 0.0) << "  "
                << std::setprecision(3) << r.seconds << "s\n";
        }
    });

    prepare_output(out);
    const json snapshot = {{"preset", preset_name ? json(*preset_name) : json(nullptr)},
                           {"data", data_path.string()},
                           {"out", out_arg.string()},
                           {"train", train::to_json(config)},
                           {"load", load_options_json(load)}};
    train::save_checkpoint(result.params, out / "checkpoint",
                           {{"train_config", train::to_json(config)},
                            {"epochs_run", result.epochs_run},
                            {"aborted", result.aborted}});
    write_text(out / "curve.csv", train::curve_csv(result.curve));

    RunManifest m;
    m.command = "train";
    m.config = snapshot;
    m.seed = config.seed;
    m.inputs = {{"data", data_path.string()}};
    m.fingerprints = {{"data", file_sha256(data_path)}};
    m.artifacts = {"checkpoint/checkpoint.json", "checkpoint/weights.bin", "curve.csv"};
    m.result = {{"epochs_run", result.epochs_run},
                {"early_stopped", result.early_stopped},
                {"aborted", result.aborted},
                {"abort_reason", result.abort_reason},
                {"final_loss", result.curve.empty() ? json(nullptr) : json(result.curve.back().loss)}};
    m.started_at = started;
    m.finished_at = utc_timestamp();
    m.version = library_version();
    m.write(out);

    if (result.aborted) {
        log << "training aborted: " << result.abort_reason
            << "; last finite parameters kept in " << (out / "checkpoint").string() << '\n';
        return exit_numerical;
    }
    log << "trained " << result.epochs_run << " epochs"
        << (result.early_stopped ? " (early stop)" : "") << "; checkpoint in "
        << (out / "checkpoint").string() << '\n';
    return exit_ok;
}

void cmd_evaluate(const EvaluateOptions& o, const Environment& env, std::ostream& log) {
    const std::string started = utc_timestamp();
    const fs::path out = env.resolve_output(o.out);
    const model::ModelParams params = load_model(o.checkpoint);
    const data::Dataset ds = load_input(o.data, o.load, log);
    check_same_k(params, ds);
    const train::EvalOptions eval = eval_options_for(o.checkpoint, o.substeps, o.workers, env);

    const train::MetricsReport report = train::evaluate(params, ds.sequences, eval);

    prepare_output(out);
    data::write_json_file(train::to_json(report), out / "metrics.json");
    write_text(out / "metrics.csv", csv_row(train::metric_names(), train::metric_values(report)));
    RunManifest m;
    m.command = "evaluate";
    m.config = {{"substeps_per_segment", eval.substeps_per_segment},
                {"marked_event_term", eval.marked_event_term},
                {"load", load_options_json(o.load)}};
    m.inputs = {{"checkpoint", o.checkpoint.string()}, {"data", o.data.string()}};
    m.fingerprints = {{"checkpoint", file_sha256(o.checkpoint / "weights.bin")},
                      {"data", file_sha256(o.data)}};
    m.artifacts = {"metrics.json", "metrics.csv"};
    m.result = train::to_json(report);
    m.started_at = started;
    m.finished_at = utc_timestamp();
    m.version = library_version();
    m.write(out);
    log << std::setprecision(6) << "LL/event " << report.per_event_log_likelihood << "  ACC "
        << report.accuracy << "  RMSE " << report.rmse << "  macro-F1 " << report.macro_f1
        << '\n';
}

void cmd_ablate(const AblateOptions& o, const Environment& env, std::ostream& log) {
    const std::string started = utc_timestamp();
    const fs::path out = env.resolve_output(o.out);
    if (o.samples == 0) {
        throw model::ConfigError("--samples must be at least 1");
    }
    const model::ModelParams params = load_model(o.checkpoint);
    const data::Dataset ds = load_input(o.data, o.load, log);
    check_same_k(params, ds);
    const train::EvalOptions eval = eval_options_for(o.checkpoint, o.substeps, o.workers, env);

    const train::AblationReport rep =
        train::ablate_integration(params, ds.sequences, o.samples, o.seed, eval);

    prepare_output(out);
    const json j = train::to_json(rep);
    data::write_json_file(j, out / "ablation.json");
    std::vector<std::string> names;
    std::vector<double> values;
    for (const auto& [key, v] : j.items()) {
        names.push_back(key);
        values.push_back(v.get<double>());
    }
    write_text(out / "ablation.csv", csv_row(names, values));
    RunManifest m;
    m.command = "ablate";
    m.config = {{"samples", o.samples},
                {"substeps_per_segment", eval.substeps_per_segment},
                {"marked_event_term", eval.marked_event_term},
                {"load", load_options_json(o.load)}};
    m.seed = o.seed;
    m.inputs = {{"checkpoint", o.checkpoint.string()}, {"data", o.data.string()}};
    m.fingerprints = {{"checkpoint", file_sha256(o.checkpoint / "weights.bin")},
                      {"data", file_sha256(o.data)}};
    m.artifacts = {"ablation.json", "ablation.csv"};
    m.result = j;
    m.started_at = started;
    m.finished_at = utc_timestamp();
    m.version = library_version();
    m.write(out);
    log << std::setprecision(8) << "ODE LL " << rep.ode_log_likelihood << "  MC LL "
        << rep.mc_log_likelihood << "  gap " << rep.gap << '\n';
}

void cmd_inspect(const InspectOptions& o, std::ostream& log) {
    const data::Dataset ds = load_input(o.data, o.load, log);
    const auto s = data::dataset_stats(ds);
    if (o.json) {
        log << json{{"num_types", s.num_types},     {"num_sequences", s.num_sequences},
                    {"min_length", s.min_length},   {"mean_length", s.mean_length},
                    {"max_length", s.max_length},   {"num_events", s.num_events}}
                   .dump(1)
            << '\n';
        return;
    }
    log << "K           " << s.num_types << '\n'
        << "sequences   " << s.num_sequences << '\n'
        << "length      min " << s.min_length << "  mean " << std::fixed << std::setprecision(2)
        << s.mean_length << "  max " << s.max_length << '\n'
        << "events      " << s.num_events << '\n';
}

int run_guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const CommandError& e) {
        err << "error: " << e.what() << '\n';
        return e.code();
    } catch (const model::ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const data::DataError& e) {
        err << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const train::CheckpointError& e) {
        err << "checkpoint error: " << e.what() << '\n';
        return exit_data;
    } catch (const ad::NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

}  // namespace hpcde::cli
