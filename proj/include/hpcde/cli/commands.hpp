#pragma once

#include "hpcde/data/dataset_io.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hpcde::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_data = 3,
    exit_numerical = 4,
};

/// Carries the exit code a command should terminate with.
class CommandError : public std::runtime_error {
public:
    CommandError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// HPCDE_OUTPUT_ROOT prefixes relative output directories; HPCDE_WORKERS sets the
/// default worker count.
struct Environment {
    std::optional<std::filesystem::path> output_root;
    std::optional<std::size_t> workers;

    static Environment from_process();
    [[nodiscard]] std::filesystem::path resolve_output(const std::filesystem::path& out) const;
};

struct GenerateOptions {
    std::vector<double> mu;
    /// One value: self-excitation on the diagonal. K*K values: row-major matrix.
    std::vector<double> alpha;
    double beta = 1.0;
    double horizon = 50.0;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
    std::filesystem::path out;
};

struct TrainOptions {
    std::optional<std::filesystem::path> config_path;
    std::optional<std::string> preset;
    std::optional<std::filesystem::path> data;
    std::optional<std::filesystem::path> out;
    std::optional<std::size_t> max_iter;
    std::optional<std::uint64_t> seed;
    std::optional<double> learning_rate;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> patience;
    std::optional<std::size_t> substeps;
    std::optional<std::size_t> workers;
    std::optional<double> alpha1;
    std::optional<double> alpha2;
    std::optional<std::size_t> embed_dim;
    std::optional<std::size_t> hidden_dim;
    std::optional<std::size_t> field_layers;
    std::optional<std::size_t> field_width;
    std::optional<bool> marked_event_term;
    std::optional<double> time_scale;
    std::optional<double> jitter;
    bool quiet = false;
};

struct EvaluateOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path out;
    std::optional<std::size_t> substeps;
    std::optional<std::size_t> workers;
    data::LoadOptions load;
};

struct AblateOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path data;
    std::filesystem::path out;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    std::optional<std::size_t> substeps;
    std::optional<std::size_t> workers;
    data::LoadOptions load;
};

struct InspectOptions {
    std::filesystem::path data;
    bool json = false;
    data::LoadOptions load;
};

/// Each command validates every input before it creates any output, and throws
/// CommandError with the matching exit code on failure.
void cmd_generate(const GenerateOptions& options, const Environment& env, std::ostream& log);
/// Returns exit_numerical (after writing the last-good checkpoint) when training aborted.
int cmd_train(const TrainOptions& options, const Environment& env, std::ostream& log);
void cmd_evaluate(const EvaluateOptions& options, const Environment& env, std::ostream& log);
void cmd_ablate(const AblateOptions& options, const Environment& env, std::ostream& log);
void cmd_inspect(const InspectOptions& options, std::ostream& log);

/// Runs `body`, translating library exceptions into exit codes and printing the
/// message to `err`.
int run_guarded(std::ostream& err, const std::function<int()>& body);

}  // namespace hpcde::cli
