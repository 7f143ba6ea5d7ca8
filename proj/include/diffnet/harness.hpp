#pragma once

#include "diffnet/bootstrap.hpp"
#include "diffnet/inference.hpp"
#include "diffnet/io.hpp"
#include "diffnet/ising.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace diffnet {

enum class ExperimentKind { coverage, power_single, type1_global, power_global, custom };
enum class LambdaRule { fixed, grid_jump, sqrt_rule };

ExperimentKind parse_experiment(const std::string& name);
std::string to_string(ExperimentKind k);
LambdaRule parse_lambda_rule(const std::string& name);
std::string to_string(LambdaRule r);

/// c * sqrt(log p / n).
double lambda_sqrt_rule(int p, int n, double c);

struct GridJumpOptions {
    double factor = 2.0;  ///< a step is a jump when |S_i| >= factor * max(|S_{i-1}|, 1)
    int support_cap = 0;  ///< |S_i| above this is also a jump; 0 means min(p, n_y) / 2
};

struct GridJumpResult {
    double lambda = 0.0;
    int index = 0;          ///< position of `lambda` in the grid
    bool jump_found = false;
    std::vector<int> support_sizes;  ///< one per grid value visited
};

/// Walks a strictly decreasing grid with warm starts and stops before the first support jump.
GridJumpResult select_lambda_grid_jump(const KliepProblem& problem, const std::vector<double>& grid,
                                       const GridJumpOptions& opts = {}, const SolverOptions& solver = {});

/// Descending grid from the smallest multiple of `step` >= lambda_max(problem) down to `min`.
std::vector<double> default_lambda_grid(const KliepProblem& problem, double step, double min);

/// How one tuning parameter is set. For lambda_theta n is n_x; for lambda_k it is n_y.
struct LambdaSpec {
    LambdaRule rule = LambdaRule::sqrt_rule;
    double value = 0.1;        ///< fixed
    double c = 1.0;            ///< sqrt_rule multiplier
    double grid_step = 0.01;   ///< grid_jump
    double grid_min = 0.02;
    GridJumpOptions jump;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::coverage;
    std::string pair = "chain1";
    int nodes = 10;
    int n_x = 150;
    int n_y = 300;
    int reps = 100;
    int n_b = 200;
    std::vector<double> alphas{0.05};
    LambdaSpec lambda_theta;
    LambdaSpec lambda_k;
    OmegaRule omega_rule = OmegaRule::scaled;
    bool refit_theta = false;
    bool refit_omega = false;
    bool full_variance_point = true;  ///< single-edge runs debias all edges so the variance uses the full one-step vector
    std::vector<Method> methods{Method::naive, Method::sparklie1, Method::sparklie2, Method::oracle};
    std::uint64_t seed = 1;
    int burnin = 3000;
    int thinning = 50;
    int threads = 0;
    SolverOptions solver;

    // power_single
    std::vector<double> deltas;
    std::vector<Nuisance> nuisances{Nuisance::none};

    // type1_global / power_global
    NullKind null_kind = NullKind::positive;
    SketchMethod sketch = SketchMethod::empirical;
    EmpiricalCentering centering = EmpiricalCentering::as_published;
    std::vector<int> s_theta{1, 3, 5};
    std::vector<double> levels{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};

    // custom: graph files
    std::string graph_x;
    std::string graph_y;
    int edge = 0;  ///< 1-based edge index for custom single-edge runs; 0 = pair's designated edge

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;

    /// Full-scale replication count, bootstrap size and Gibbs chain lengths.
    void apply_paper_scale();
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct ExperimentReport {
    std::string experiment;
    CsvTable summary;
    CsvTable reps;
    std::optional<CsvTable> qq;
    nlohmann::json info;  ///< config echo, tuning choices and aggregates
    double wall_seconds = 0.0;

    /// Writes summary.csv, reps.csv, qq.csv (when present) and summary.json into `dir`.
    void write(const std::filesystem::path& dir) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_coverage(const ExperimentConfig& config);
ExperimentReport run_power_single(const ExperimentConfig& config);
ExperimentReport run_type1_global(const ExperimentConfig& config);
ExperimentReport run_power_global(const ExperimentConfig& config);

/// Gibbs x- and y-samples of a pair with the experiment's chain settings.
struct SamplePair {
    Matrix x;
    Matrix y;
};

SamplePair draw_samples(const GraphPair& pair, int n_x, int n_y, int burnin, int thinning, std::uint64_t seed);

/// Per-replicate seed; every report row carries it.
std::uint64_t rep_seed(std::uint64_t root, std::uint64_t cell, int rep);

} // namespace diffnet
