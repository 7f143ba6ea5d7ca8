#pragma once

#include "diffnet/common.hpp"
#include "diffnet/inference.hpp"
#include "diffnet/kliep.hpp"
#include "diffnet/solvers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace diffnet {

enum class StatKind { T, W };
enum class SketchMethod { empirical, multiplier };

std::string to_string(StatKind k);
std::string to_string(SketchMethod m);
SketchMethod parse_sketch_method(const std::string& name);

struct BootstrapSketch {
    Vector stats;  ///< replicate max-statistics, excluded replicates removed
    StatKind kind = StatKind::T;
    SketchMethod method = SketchMethod::multiplier;
    std::uint64_t seed = 0;
    int excluded = 0;          ///< replicates whose Step-1 solve did not converge
    bool unreliable = false;   ///< more than 5% excluded
};

/// floor((1 - alpha) n_b)-th order statistic, 1-based ascending, no interpolation.
double quantile(const Vector& stats, double alpha);
double quantile(const BootstrapSketch& sketch, double alpha);

/**
 * Gaussian-multiplier sketch of T (sigma empty) or W (sigma given, one entry
 * per column of Omega). Column j of Omega is the inverse-Hessian row of the
 * j-th edge of interest; theta_ref sets the ratio weights.
 */
BootstrapSketch multiplier_sketch(const KliepProblem& problem, const Matrix& omega, const Vector& theta_ref,
                                  const std::optional<Vector>& sigma, int n_b, std::uint64_t seed,
                                  int threads = 1);

/// Sign of the gradient-at-theta_hat term in each empirical replicate.
enum class EmpiricalCentering {
    as_published,  ///< subtract Omega' grad(theta_hat)
    recentered,    ///< add it, so replicates are centered at theta_hat to first order
};

struct EmpiricalOptions {
    int n_b = 200;
    std::uint64_t seed = 0;
    SolverOptions solver;
    EmpiricalCentering centering = EmpiricalCentering::as_published;
    int threads = 1;
};

/// T and W sketches drawn from the same replicates.
struct EmpiricalSketches {
    BootstrapSketch t;
    std::optional<BootstrapSketch> w;
};

/**
 * Empirical-bootstrap sketch. Each replicate resamples rows of x and y with
 * replacement, re-solves Step 1 at the original lambda_theta (warm-started at
 * theta_check) and reuses Omega. `edges[j]` is the edge of column j of Omega;
 * theta_hat and theta_check are full p-vectors.
 */
EmpiricalSketches empirical_sketch(const KliepProblem& problem, double lambda_theta, const Matrix& omega,
                                   const std::vector<int>& edges, const Vector& theta_hat,
                                   const Vector& theta_check, const std::optional<Vector>& sigma,
                                   const EmpiricalOptions& opts);

/// Replicate deviations theta_hat^(b)_{edges} - theta_hat_{edges} for given resample indices.
struct EmpiricalReplicate {
    Vector deviation;
    bool converged = false;
};

EmpiricalReplicate empirical_replicate(const KliepProblem& problem, double lambda_theta, const Matrix& omega,
                                       const std::vector<int>& edges, const Vector& theta_hat,
                                       const Vector& grad_at_hat, const Vector& warm,
                                       const std::vector<int>& rows_x, const std::vector<int>& rows_y,
                                       const SolverOptions& solver, EmpiricalCentering centering);

/// theta_hat_k +/- c / sqrt(n) (T) or +/- c sigma_k / sqrt(n) (W).
std::vector<Interval> simultaneous_ci(const Vector& theta_hat, double critical, int n,
                                      const std::optional<Vector>& sigma = std::nullopt);

/// max_k sqrt(n) |theta_hat_k - theta0_k| (divided by sigma_k when given).
double max_statistic(const Vector& theta_hat, const Vector& theta0, int n,
                     const std::optional<Vector>& sigma = std::nullopt);

struct GlobalTestResult {
    StatKind kind = StatKind::T;
    double alpha = 0.05;
    double statistic = 0.0;
    double critical = 0.0;
    bool reject = false;  ///< statistic > critical
};

struct GlobalTestOptions {
    SketchMethod method = SketchMethod::empirical;
    int n_b = 200;
    std::uint64_t seed = 0;
    EmpiricalCentering centering = EmpiricalCentering::as_published;
    std::vector<double> alphas{0.05};
};

struct GlobalTest {
    SparklieFit fit;
    EmpiricalSketches sketches;  ///< for the multiplier method both come from the same draws
    std::vector<GlobalTestResult> results;  ///< T then W, each over opts.alphas
};

/**
 * Tests theta* = theta0 over all edges with SparKLIE+1 and a bootstrap
 * sketch. The multiplier sketch takes ratio weights at theta0; the empirical
 * sketch is centered at the estimate.
 */
GlobalTest global_test(const KliepProblem& problem, const Vector& theta0, const PipelineConfig& config,
                       const GlobalTestOptions& opts);

} // namespace diffnet
