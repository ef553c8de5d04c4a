#pragma once

#include "demoreg/io.hpp"
#include "demoreg/pipelines.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace demoreg {

/// Instance spec: a file path or generator parameters.
struct InstanceSpec {
    std::string generator = "river"; ///< river | chain | random | random_linear | file
    std::string path;
    int S = 4;
    int A = 2;
    int H = 4;
    int d = 4;
    double sparsity = 0.0;
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    InstanceSpec instance;
    std::string algorithm = "rl"; ///< rl | rlhf | bpi | bc
    PipelineMode mode = PipelineMode::tabular;
    double lambda_expert = 0.02;
    std::vector<std::size_t> n_exp{100};
    std::vector<std::size_t> n_rm{0};
    std::vector<double> lambda; ///< bpi only; empty elsewhere
    std::vector<double> eps{0.5};
    std::vector<double> delta{0.1};
    std::vector<std::uint64_t> seeds{0};
    bool oracle_diagnostics = false;
    bool record_wallclock = false;
    int workers = 1;
    double c_kl = 1.0;
    std::int64_t max_episodes = 10'000'000;
    std::int64_t lsvi_episodes = 1000;
    std::size_t n_mc = 100'000;
};

/// Throws ConfigError on unknown keys, wrong types, empty grids or repeated seeds.
ExperimentConfig experiment_config_from_json(const io::json& j);
io::json experiment_config_to_json(const ExperimentConfig& cfg);

/// Loaded instance plus its expert.
struct Instance {
    TabularMdp mdp;
    std::optional<LinearMdp> linear;
    Policy expert;
};

Instance build_instance(const InstanceSpec& spec, double lambda_expert);

struct SweepRow {
    std::string algorithm;
    std::size_t n_exp = 0;
    std::size_t n_rm = 0;
    double lambda_grid = 0.0; ///< NaN when lambda is selected by the pipeline
    double eps = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    std::int64_t episodes = 0;
    bool stopped = false;
    double lambda = 0.0;
    double suboptimality = 0.0; ///< NaN without oracle diagnostics
    double kl = 0.0;            ///< NaN without oracle diagnostics
    double eps_rm_sq = 0.0;     ///< NaN unless rlhf with diagnostics
    double bound = 0.0;         ///< composite budget; NaN without diagnostics
    double wallclock_ms = 0.0;  ///< NaN unless recorded
};

/// Fixed column order of results.csv.
const std::vector<std::string>& results_columns();
std::string results_row(const SweepRow& row);

/// Runs every (grid point, seed); rows are appended to results.csv in grid
/// order as soon as they and all earlier rows are done. Writes manifest.json.
/// Returns the rows in the same order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// One sweep cell; `manifest` receives the derived seeds, dataset hash and budgets.
SweepRow run_point(const ExperimentConfig& cfg, const Instance& inst, std::size_t n_exp, std::size_t n_rm,
                   std::optional<double> lambda, double eps, double delta, std::uint64_t seed,
                   io::json* manifest = nullptr);

struct ScalingSummary {
    std::string algorithm;
    std::size_t n_rm = 0;
    double lambda_grid = 0.0;
    double eps = 0.0;
    double delta = 0.0;
    std::vector<std::size_t> n_exp;
    std::vector<double> median_episodes;
    double slope = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Parses results.csv rows (header required).
std::vector<SweepRow> read_results(const std::filesystem::path& path);

/// Least-squares slope of log(median episodes) on log(n_exp) per configuration,
/// with a percentile bootstrap CI over seeds (1000 resamples, fixed seed).
/// Throws ConfigError unless each configuration has >= 3 n_exp values with >= 5 seeds each.
std::vector<ScalingSummary> scaling_summary(const std::vector<SweepRow>& rows, int resamples = 1000,
                                            std::uint64_t seed = 0);
void write_summary(const std::filesystem::path& path, const std::vector<ScalingSummary>& summary);

/// Ordinary least squares (slope, intercept).
std::pair<double, double> least_squares(std::span<const double> x, std::span<const double> y);
double median(std::vector<double> values);

/// FNV-1a over a byte string, hex encoded.
std::string content_hash(std::string_view bytes);

} // namespace demoreg
