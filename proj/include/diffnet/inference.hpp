#pragma once

#include "diffnet/common.hpp"
#include "diffnet/kliep.hpp"
#include "diffnet/solvers.hpp"

#include <string>
#include <vector>

namespace diffnet {

enum class Method { sparklie1, sparklie2, naive, oracle };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Single-edge estimate. sigma_hat2 estimates the variance of sqrt(n) * theta_hat.
struct DebiasResult {
    int k = 0;
    double theta_hat = 0.0;
    double sigma_hat2 = 0.0;
    bool has_variance = false;
    bool degenerate = false;  ///< variance hit the 1e-12 floor
    bool ill_posed = false;   ///< refit support reached n_y
    bool damped = false;      ///< a restricted solve needed ridge damping
    Method method = Method::sparklie1;
    int n = 0;
    Support support_theta;
    Support support_omega;
    Vector theta_check;
};

/// theta_check_k - omega_k' grad(theta_check). No variance.
DebiasResult sparklie1(const KliepProblem& problem, const Vector& theta_check, const Vector& omega_k, int k);

/// Same as above with the gradient at theta_check already computed.
DebiasResult sparklie1(const Vector& theta_check, const Vector& grad, const Vector& omega_k, int k, int n);

/// Refit on {k} u support_theta u support_omega; sandwich variance at the refit.
DebiasResult sparklie2(const KliepProblem& problem, const Support& support_theta,
                       const Support& support_omega, int k, const SolverOptions& opts = {});

/// Step-1 lasso, then refit on {k} u supp(theta_check).
DebiasResult naive_refit(const KliepProblem& problem, double lambda_theta, int k,
                         const SolverOptions& opts = {});
DebiasResult naive_refit(const KliepProblem& problem, const Vector& theta_check, int k,
                         const SolverOptions& opts = {});

/// Refit on {k} u true_support. Benchmark only.
DebiasResult oracle_fit(const KliepProblem& problem, const Support& true_support, int k,
                        const SolverOptions& opts = {});

struct PooledCov {
    Matrix S_psi;     ///< biased covariance of the psi_x rows
    Matrix S_psir;    ///< biased covariance of the rows psi_y(j) * rhat_j (mean muhat)
    Matrix S_pooled;  ///< (n/n_x) S_psi + (n/n_y) S_psir
};

PooledCov pooled_cov(const KliepProblem& problem, const Vector& theta_hat);

struct VarianceEstimate {
    double value = 0.0;
    bool degenerate = false;
};

constexpr double kVarianceFloor = 1e-12;

/// omega' S_pooled omega, floored at kVarianceFloor.
VarianceEstimate variance(const Vector& omega_k, const PooledCov& pooled);

/// Same quantity in O((n_x + n_y) p) without forming S_pooled.
VarianceEstimate variance(const KliepProblem& problem, const RatioState& state, const Vector& omega_k);
VarianceEstimate variance(const KliepProblem& problem, const Vector& theta_hat, const Vector& omega_k);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// theta_hat +/- z_{alpha/2} sigma_hat / sqrt(n).
Interval ci(const DebiasResult& result, double alpha);

struct ZTest {
    double z = 0.0;
    double p_value = 1.0;
};

/// sqrt(n) theta_hat / sigma_hat with its two-sided normal p-value.
ZTest z_stat(const DebiasResult& result);

/// Omega_I' S_pooled Omega_I.
Matrix multi_edge_cov(const Matrix& omega_i, const PooledCov& pooled);

enum class OmegaRule { fixed, scaled };

OmegaRule parse_omega_rule(const std::string& name);
std::string to_string(OmegaRule r);

struct PipelineConfig {
    double lambda_theta = 0.1;
    double lambda_k = 0.1;  ///< penalty (fixed) or universal level lambda0 (scaled)
    OmegaRule omega_rule = OmegaRule::scaled;
    bool refit_theta = false;  ///< unpenalized refit on supp(theta_check) after Step 1
    bool refit_omega = false;  ///< unpenalized refit on supp(omega_k) after Step 2
    SolverOptions solver;
    int threads = 1;
};

/// SparKLIE+1 over a list of edges, sharing Step 1 and the Hessian.
struct SparklieFit {
    SparseSolution step1;
    Vector theta_check;  ///< Step-1 estimate (after the optional refit)
    Vector gradient;     ///< grad at theta_check
    Matrix hessian;      ///< Hessian at theta_check
    std::vector<int> edges;
    Matrix omega;        ///< p x |edges|, column j belongs to edges[j]
    Vector theta_hat;    ///< p-vector; theta_check off `edges`
    Vector variance_point;
    std::vector<DebiasResult> results;  ///< one per entry of `edges`

    bool full() const { return static_cast<Eigen::Index>(edges.size()) == theta_hat.size(); }
    Vector sigma_hat() const;  ///< sqrt(sigma_hat2) per entry of `edges`
};

/// Runs Steps 1-3 for `edges` (all edges when empty); per-edge work runs on config.threads.
SparklieFit fit_sparklie1(const KliepProblem& problem, const PipelineConfig& config,
                          std::vector<int> edges = {});

/// Steps 2-3 only, reusing a Step-1 solution.
SparklieFit fit_sparklie1(const KliepProblem& problem, const PipelineConfig& config,
                          const SparseSolution& step1, std::vector<int> edges = {});

/// SparKLIE+2 for fit.edges[j] from the supports recorded in `fit`.
DebiasResult sparklie2(const KliepProblem& problem, const SparklieFit& fit, std::size_t j,
                       const SolverOptions& opts = {});

} // namespace diffnet
