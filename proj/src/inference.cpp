#include "diffnet/inference.hpp"

#include "diffnet/normal.hpp"
#include "diffnet/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace diffnet {

std::string to_string(Method m)
{
    switch (m) {
    case Method::sparklie1: return "sparklie1";
    case Method::sparklie2: return "sparklie2";
    case Method::naive: return "naive";
    case Method::oracle: return "oracle";
    }
    return "?";
}

Method parse_method(const std::string& name)
{
    if (name == "sparklie1") return Method::sparklie1;
    if (name == "sparklie2") return Method::sparklie2;
    if (name == "naive") return Method::naive;
    if (name == "oracle") return Method::oracle;
    throw ArgumentError("unknown method '" + name + "'");
}

OmegaRule parse_omega_rule(const std::string& name)
{
    if (name == "fixed") return OmegaRule::fixed;
    if (name == "scaled") return OmegaRule::scaled;
    throw ArgumentError("unknown omega rule '" + name + "'");
}

std::string to_string(OmegaRule r) { return r == OmegaRule::fixed ? "fixed" : "scaled"; }

DebiasResult sparklie1(const Vector& theta_check, const Vector& grad, const Vector& omega_k, int k, int n)
{
    const auto p = theta_check.size();
    require(grad.size() == p && omega_k.size() == p, "sparklie1: dimension mismatch");
    require(k >= 0 && k < p, "sparklie1: edge index out of range");

    DebiasResult r;
    r.k = k;
    r.method = Method::sparklie1;
    r.n = n;
    r.theta_hat = theta_check[k] - omega_k.dot(grad);
    r.theta_check = theta_check;
    r.support_theta = support_of(theta_check);
    r.support_omega = support_of(omega_k);
    return r;
}

DebiasResult sparklie1(const KliepProblem& problem, const Vector& theta_check, const Vector& omega_k, int k)
{
    require(theta_check.size() == problem.dim(), "sparklie1: theta has wrong length");
    return sparklie1(theta_check, gradient(theta_check, problem), omega_k, k, problem.n());
}

namespace {

VarianceEstimate floor_variance(double v)
{
    if (!(v > kVarianceFloor)) return {kVarianceFloor, true};
    return {v, false};
}

// Refit on `support` (which contains k), then a sandwich variance at the refit:
// omega solves H_SS omega_S = (e_k)_S with H restricted to the refit support.
DebiasResult refit_estimate(const KliepProblem& problem, Support support, int k, Method method,
                            const SolverOptions& opts)
{
    require(k >= 0 && k < problem.dim(), "refit: edge index out of range");
    support = merge_supports(support, Support{k});

    const RefitResult fit = refit_support(problem, support, opts);
    DebiasResult r;
    r.k = k;
    r.method = method;
    r.n = problem.n();
    r.theta_hat = fit.theta[k];
    r.ill_posed = fit.ill_posed;
    r.damped = fit.damped;
    r.support_omega = support;
    r.theta_check = fit.theta;

    const RatioState st = ratio_state(fit.theta, problem.psi_y());
    const auto s = static_cast<Eigen::Index>(support.size());
    Matrix psi_s(problem.n_y(), s);
    Vector mu_s(s);
    Eigen::Index local_k = 0;
    for (Eigen::Index a = 0; a < s; ++a) {
        psi_s.col(a) = problem.psi_y().col(support[a]);
        mu_s[a] = st.muhat[support[a]];
        if (support[a] == k) local_k = a;
    }
    const Matrix weighted = psi_s.array().colwise() * st.rhat.array().sqrt();
    Matrix h = weighted.transpose() * weighted / static_cast<double>(problem.n_y()) - mu_s * mu_s.transpose();
    h = 0.5 * (h + h.transpose()).eval();

    Support all(static_cast<std::size_t>(s));
    for (Eigen::Index a = 0; a < s; ++a) all[a] = static_cast<int>(a);
    const OmegaRefit om = refit_omega(h, static_cast<int>(local_k), all);
    r.damped = r.damped || om.damped;

    Vector omega = Vector::Zero(problem.dim());
    for (Eigen::Index a = 0; a < s; ++a) omega[support[a]] = om.omega[a];
    const VarianceEstimate v = variance(problem, st, omega);
    r.sigma_hat2 = v.value;
    r.degenerate = v.degenerate;
    r.has_variance = true;
    return r;
}

} // namespace

DebiasResult sparklie2(const KliepProblem& problem, const Support& support_theta,
                       const Support& support_omega, int k, const SolverOptions& opts)
{
    DebiasResult r = refit_estimate(problem, merge_supports(support_theta, support_omega), k,
                                    Method::sparklie2, opts);
    r.support_theta = support_theta;
    return r;
}

DebiasResult naive_refit(const KliepProblem& problem, const Vector& theta_check, int k,
                         const SolverOptions& opts)
{
    const Support sel = support_of(theta_check);
    DebiasResult r = refit_estimate(problem, sel, k, Method::naive, opts);
    r.support_theta = sel;
    return r;
}

DebiasResult naive_refit(const KliepProblem& problem, double lambda_theta, int k, const SolverOptions& opts)
{
    return naive_refit(problem, sparse_kliep(problem, lambda_theta, opts).value, k, opts);
}

DebiasResult oracle_fit(const KliepProblem& problem, const Support& true_support, int k,
                        const SolverOptions& opts)
{
    DebiasResult r = refit_estimate(problem, true_support, k, Method::oracle, opts);
    r.support_theta = true_support;
    return r;
}

PooledCov pooled_cov(const KliepProblem& problem, const Vector& theta_hat)
{
    require(theta_hat.size() == problem.dim(), "pooled_cov: theta has wrong length");
    const RatioState st = ratio_state(theta_hat, problem.psi_y());

    PooledCov pc;
    const Matrix cx = problem.psi_x().rowwise() - problem.mean_x().transpose();
    pc.S_psi = cx.transpose() * cx / static_cast<double>(problem.n_x());

    const Matrix cy = (problem.psi_y().array().colwise() * st.rhat.array()).matrix().rowwise() -
                      st.muhat.transpose();
    pc.S_psir = cy.transpose() * cy / static_cast<double>(problem.n_y());

    const double n = problem.n();
    pc.S_pooled = (n / problem.n_x()) * pc.S_psi + (n / problem.n_y()) * pc.S_psir;
    return pc;
}

VarianceEstimate variance(const Vector& omega_k, const PooledCov& pooled)
{
    require(omega_k.size() == pooled.S_pooled.rows(), "variance: omega has wrong length");
    return floor_variance(omega_k.dot(pooled.S_pooled * omega_k));
}

VarianceEstimate variance(const KliepProblem& problem, const RatioState& state, const Vector& omega_k)
{
    require(omega_k.size() == problem.dim(), "variance: omega has wrong length");
    const Vector a = problem.psi_x() * omega_k;
    const double va = (a.array() - a.mean()).square().mean();
    const Vector b = (problem.psi_y() * omega_k).cwiseProduct(state.rhat);
    const double vb = (b.array() - state.muhat.dot(omega_k)).square().mean();
    const double n = problem.n();
    return floor_variance((n / problem.n_x()) * va + (n / problem.n_y()) * vb);
}

VarianceEstimate variance(const KliepProblem& problem, const Vector& theta_hat, const Vector& omega_k)
{
    return variance(problem, ratio_state(theta_hat, problem.psi_y()), omega_k);
}

Interval ci(const DebiasResult& result, double alpha)
{
    require(alpha > 0.0 && alpha < 1.0, "ci: alpha must lie in (0, 1)");
    require(result.has_variance, "ci: result carries no variance estimate");
    require(result.n > 0, "ci: sample size not recorded");
    if (result.degenerate) return {result.theta_hat, result.theta_hat};
    const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(result.sigma_hat2 / result.n);
    return {result.theta_hat - half, result.theta_hat + half};
}

ZTest z_stat(const DebiasResult& result)
{
    require(result.has_variance, "z_stat: result carries no variance estimate");
    require(result.n > 0, "z_stat: sample size not recorded");
    ZTest t;
    t.z = std::sqrt(static_cast<double>(result.n)) * result.theta_hat / std::sqrt(result.sigma_hat2);
    t.p_value = two_sided_p_value(t.z);
    return t;
}

Matrix multi_edge_cov(const Matrix& omega_i, const PooledCov& pooled)
{
    require(omega_i.rows() == pooled.S_pooled.rows(), "multi_edge_cov: Omega has wrong row count");
    Matrix s = omega_i.transpose() * pooled.S_pooled * omega_i;
    return 0.5 * (s + s.transpose());
}

Vector SparklieFit::sigma_hat() const
{
    Vector s(static_cast<Eigen::Index>(results.size()));
    for (std::size_t j = 0; j < results.size(); ++j)
        s[static_cast<Eigen::Index>(j)] = std::sqrt(results[j].sigma_hat2);
    return s;
}

SparklieFit fit_sparklie1(const KliepProblem& problem, const PipelineConfig& config,
                          const SparseSolution& step1, std::vector<int> edges)
{
    const int p = problem.dim();
    require(step1.value.size() == p, "fit_sparklie1: Step-1 solution has wrong length");
    require(config.lambda_k >= 0.0, "fit_sparklie1: lambda_k must be >= 0");
    if (edges.empty()) {
        edges.resize(static_cast<std::size_t>(p));
        for (int k = 0; k < p; ++k) edges[static_cast<std::size_t>(k)] = k;
    }
    for (int k : edges) require(k >= 0 && k < p, "fit_sparklie1: edge index out of range");

    SparklieFit fit;
    fit.step1 = step1;
    fit.theta_check = config.refit_theta ? refit_support(problem, step1.support, config.solver).theta
                                         : step1.value;
    const RatioState st = ratio_state(fit.theta_check, problem.psi_y());
    fit.gradient = gradient(problem, st);
    fit.hessian = hessian(problem.psi_y(), st);
    fit.edges = std::move(edges);

    const std::size_t q = fit.edges.size();
    fit.omega = Matrix::Zero(p, static_cast<Eigen::Index>(q));
    fit.results.resize(q);
    std::vector<char> damped(q, 0);

    parallel_for(q, config.threads, [&](std::size_t j) {
        const int k = fit.edges[j];
        Vector w = config.omega_rule == OmegaRule::scaled
                       ? omega_scaled_lasso(fit.hessian, k, config.lambda_k, config.solver).solution.value
                       : omega_lasso(fit.hessian, k, config.lambda_k, config.solver).value;
        if (config.refit_omega) {
            const OmegaRefit r = refit_omega(fit.hessian, k, support_of(w));
            w = r.omega;
            damped[j] = r.damped;
        }
        fit.omega.col(static_cast<Eigen::Index>(j)) = w;
    });

    fit.theta_hat = fit.theta_check;
    for (std::size_t j = 0; j < q; ++j) {
        const Vector w = fit.omega.col(static_cast<Eigen::Index>(j));
        fit.results[j] = sparklie1(fit.theta_check, fit.gradient, w, fit.edges[j], problem.n());
        fit.results[j].damped = damped[j] != 0;
        fit.theta_hat[fit.edges[j]] = fit.results[j].theta_hat;
    }

    fit.variance_point = fit.full() ? fit.theta_hat : fit.theta_check;
    const RatioState vs = ratio_state(fit.variance_point, problem.psi_y());
    parallel_for(q, config.threads, [&](std::size_t j) {
        const VarianceEstimate v = variance(problem, vs, fit.omega.col(static_cast<Eigen::Index>(j)));
        fit.results[j].sigma_hat2 = v.value;
        fit.results[j].degenerate = v.degenerate;
        fit.results[j].has_variance = true;
    });
    return fit;
}

SparklieFit fit_sparklie1(const KliepProblem& problem, const PipelineConfig& config, std::vector<int> edges)
{
    require(config.lambda_theta >= 0.0, "fit_sparklie1: lambda_theta must be >= 0");
    return fit_sparklie1(problem, config, sparse_kliep(problem, config.lambda_theta, config.solver),
                         std::move(edges));
}

DebiasResult sparklie2(const KliepProblem& problem, const SparklieFit& fit, std::size_t j,
                       const SolverOptions& opts)
{
    require(j < fit.edges.size(), "sparklie2: edge slot out of range");
    return sparklie2(problem, support_of(fit.theta_check), fit.results[j].support_omega, fit.edges[j], opts);
}

} // namespace diffnet
