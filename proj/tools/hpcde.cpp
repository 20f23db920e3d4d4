#include "hpcde/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace hpcde::cli;

template <class T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target,
                   const std::string& help) {
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

void add_load_flags(CLI::App* app, hpcde::data::LoadOptions& load) {
    app->add_option("--time-scale", load.time_scale, "Divide every event time by this constant");
    app->add_option("--jitter", load.jitter, "Separate equal timestamps by this amount");
    app->add_flag("--skip-invalid", load.skip_invalid, "Drop malformed sequences instead of failing");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural-CDE Hawkes process: simulate, train, evaluate and ablate"};
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Simulate an exponential Hawkes dataset");
    g->add_option("--mu", gen.mu, "Base intensities, one per type")->delimiter(',')->required();
    g->add_option("--alpha", gen.alpha, "Self-excitation, or K*K row-major excitation matrix")
        ->delimiter(',')
        ->required();
    g->add_option("--beta", gen.beta, "Exponential decay rate");
    g->add_option("--horizon", gen.horizon, "Observation window [0, T]");
    g->add_option("--n", gen.n, "Number of sequences");
    g->add_option("--seed", gen.seed, "Random seed");
    g->add_option("--train-fraction", gen.train_fraction, "Share of sequences in train.json");
    g->add_option("--out", gen.out, "Output directory")->required();

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
    optional_flag(t, "--config", tr.config_path, "JSON config file or a previous run manifest");
    optional_flag(t, "--preset", tr.preset, "mimic, memetracker, retweet or stackoverflow");
    optional_flag(t, "--data", tr.data, "Training dataset");
    optional_flag(t, "--out", tr.out, "Output directory");
    optional_flag(t, "--max-iter", tr.max_iter, "Maximum number of epochs");
    optional_flag(t, "--seed", tr.seed, "Random seed");
    optional_flag(t, "--lr", tr.learning_rate, "Adam learning rate");
    optional_flag(t, "--batch-size", tr.batch_size, "Sequences per mini-batch");
    optional_flag(t, "--patience", tr.patience, "Early-stopping patience in epochs");
    optional_flag(t, "--substeps", tr.substeps, "RK4 steps per inter-event segment");
    optional_flag(t, "--workers", tr.workers, "Threads for per-sequence work");
    optional_flag(t, "--alpha1", tr.alpha1, "Weight on the negative log-likelihood");
    optional_flag(t, "--alpha2", tr.alpha2, "Weight on the inter-arrival squared error");
    optional_flag(t, "--embed-dim", tr.embed_dim, "Embedding size");
    optional_flag(t, "--hidden-dim", tr.hidden_dim, "Hidden state size");
    optional_flag(t, "--field-layers", tr.field_layers, "Layers in the vector field");
    optional_flag(t, "--field-width", tr.field_width, "Width of the vector field layers");
    optional_flag(t, "--marked", tr.marked_event_term, "Score events by the intensity of their own type");
    optional_flag(t, "--time-scale", tr.time_scale, "Divide every event time by this constant");
    optional_flag(t, "--jitter", tr.jitter, "Separate equal timestamps by this amount");
    t->add_flag("--quiet", tr.quiet, "Do not print per-epoch progress");

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Compute likelihood and prediction metrics");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
    e->add_option("--data", ev.data, "Dataset to evaluate")->required();
    e->add_option("--out", ev.out, "Output directory")->required();
    optional_flag(e, "--substeps", ev.substeps, "RK4 steps per segment (default: as trained)");
    optional_flag(e, "--workers", ev.workers, "Threads for per-sequence work");
    add_load_flags(e, ev.load);

    AblateOptions ab;
    auto* a = app.add_subcommand("ablate", "Compare the integrated and Monte Carlo compensators");
    a->add_option("--checkpoint", ab.checkpoint, "Checkpoint directory")->required();
    a->add_option("--data", ab.data, "Dataset to evaluate")->required();
    a->add_option("--out", ab.out, "Output directory")->required();
    a->add_option("--samples", ab.samples, "Monte Carlo samples per sequence");
    a->add_option("--seed", ab.seed, "Monte Carlo seed");
    optional_flag(a, "--substeps", ab.substeps, "RK4 steps per segment (default: as trained)");
    optional_flag(a, "--workers", ab.workers, "Threads for per-sequence work");
    add_load_flags(a, ab.load);

    InspectOptions in;
    auto* i = app.add_subcommand("inspect", "Print dataset statistics");
    i->add_option("--data", in.data, "Dataset file")->required();
    i->add_flag("--json", in.json, "Print JSON instead of a table");
    add_load_flags(i, in.load);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return exit_config;
    }

    return run_guarded(std::cerr, [&]() -> int {
        const Environment env = Environment::from_process();
        if (g->parsed()) {
            cmd_generate(gen, env, std::cout);
        } else if (t->parsed()) {
            return cmd_train(tr, env, std::cout);
        } else if (e->parsed()) {
            cmd_evaluate(ev, env, std::cout);
        } else if (a->parsed()) {
            cmd_ablate(ab, env, std::cout);
        } else if (i->parsed()) {
            cmd_inspect(in, std::cout);
        }
        return exit_ok;
    });
}
