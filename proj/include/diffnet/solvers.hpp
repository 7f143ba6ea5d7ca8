#pragma once

#include "diffnet/common.hpp"
#include "diffnet/kliep.hpp"

#include <optional>

namespace diffnet {

/**
 * Iteration controls shared by the convex solvers.
 *
 * The l1 solvers stop once the KKT residual (see kkt_residual_l1) drops to
 * `tol`; Newton-type refits stop once the restricted gradient does.
 */
struct SolverOptions {
    int max_iter = 10000;
    double tol = 1e-7;
    double initial_step = 1.0;
    double shrink = 0.5;     ///< backtracking factor in (0, 1)
    double armijo = 1e-4;    ///< sufficient-decrease constant for line searches

    void validate() const;
};

struct SparseSolution {
    Vector value;
    Support support;
    double lambda = 0.0;
    int iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    double objective = 0.0;
};

struct RefitResult {
    Vector theta;
    Support support;
    int iterations = 0;
    bool converged = false;
    bool damped = false;     ///< restricted Hessian needed ridge damping
    bool ill_posed = false;  ///< |support| >= n_y
    double gradient_norm = 0.0;
};

/**
 * Largest violation of the optimality conditions of f(x) + lambda * |x|_1
 * given grad = grad f(x): |grad_k + lambda sign(x_k)| on the support,
 * max(0, |grad_k| - lambda) off it.
 */
double kkt_residual_l1(const Vector& grad, const Vector& x, double lambda);

/// l1-penalized KLIEP by accelerated proximal gradient with backtracking and restart.
SparseSolution sparse_kliep(const KliepProblem& problem, double lambda,
                            const SolverOptions& opts = {},
                            const std::optional<Vector>& warm_start = std::nullopt);

/// Unpenalized KLIEP over coordinates in `support` (Newton with line search).
RefitResult refit_support(const KliepProblem& problem, const Support& support,
                          const SolverOptions& opts = {});

/// argmin 0.5 w'Hw - w_k + lambda |w|_1 by cyclic coordinate descent.
SparseSolution omega_lasso(const Matrix& hessian, int k, double lambda,
                           const SolverOptions& opts = {},
                           const std::optional<Vector>& warm_start = std::nullopt);

/**
 * Inverse-Hessian column by scaled-lasso regression of coordinate k on the
 * others in the geometry of H (the diagonal entry is not penalized):
 *   (b, sigma) jointly minimize (e_k - b)'H(e_k - b) / (2 sigma) + sigma / 2
 *              + lambda0 sum_{j != k} sqrt(H_jj) |b_j|,  b_k = 0,
 * and omega = (e_k - b) / sigma^2. solution.value holds omega,
 * solution.lambda the final penalty lambda0 * sigma.
 */
struct ScaledLassoSolution {
    SparseSolution solution;
    Vector coefficients;  ///< b
    double sigma = 0.0;
    int scale_iterations = 0;
    bool scale_converged = false;
};

ScaledLassoSolution omega_scaled_lasso(const Matrix& hessian, int k, double lambda0,
                                       const SolverOptions& opts = {});

/// Solves H_SS w_S = (e_k)_S with zeros off S; ridge-damped when H_SS is singular.
struct OmegaRefit {
    Vector omega;
    bool damped = false;
};

OmegaRefit refit_omega(const Matrix& hessian, int k, const Support& support);

} // namespace diffnet
