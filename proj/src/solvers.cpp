#include "diffnet/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diffnet {

namespace {

double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

Vector soft_threshold(const Vector& z, double t)
{
    return z.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

Matrix gather_columns(const Matrix& m, const Support& cols)
{
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
    return out;
}

// Cholesky solve of (A + ridge I) x = b, growing the ridge until A + ridge I
// is numerically positive definite.
Vector damped_solve(const Matrix& a, const Vector& b, bool& damped)
{
    Eigen::LLT<Matrix> llt(a);
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) return llt.solve(b);

    damped = true;
    double ridge = 1e-10 * scale;
    const Matrix eye = Matrix::Identity(a.rows(), a.cols());
    for (int attempt = 0; attempt < 30; ++attempt, ridge *= 10.0) {
        llt.compute(a + ridge * eye);
        if (llt.info() == Eigen::Success && llt.rcond() > 1e-13) return llt.solve(b);
    }
    throw ArgumentError("damped_solve: matrix is not positive semidefinite");
}

struct Evaluation {
    double f;
    Vector grad;
};

Evaluation evaluate(const KliepProblem& problem, const Vector& theta)
{
    const RatioState st = ratio_state(theta, problem.psi_y());
    return {loss(theta, problem, st), gradient(problem, st)};
}

} // namespace

void SolverOptions::validate() const
{
    require(max_iter >= 1, "SolverOptions: max_iter must be >= 1");
    require(tol > 0.0, "SolverOptions: tol must be positive");
    require(initial_step > 0.0, "SolverOptions: initial_step must be positive");
    require(shrink > 0.0 && shrink < 1.0, "SolverOptions: shrink must lie in (0,1)");
    require(armijo > 0.0 && armijo < 0.5, "SolverOptions: armijo must lie in (0,0.5)");
}

double kkt_residual_l1(const Vector& grad, const Vector& x, double lambda)
{
    double worst = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double v = x[k] != 0.0 ? std::abs(grad[k] + lambda * (x[k] > 0.0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(grad[k]) - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

SparseSolution sparse_kliep(const KliepProblem& problem, double lambda,
                            const SolverOptions& opts, const std::optional<Vector>& warm_start)
{
    opts.validate();
    require(lambda >= 0.0 && std::isfinite(lambda), "sparse_kliep: lambda must be >= 0");
    if (lambda == 0.0 && problem.dim() >= problem.n_y())
        throw ArgumentError(
            "sparse_kliep: lambda = 0 with p >= n_y is not strictly convex; "
            "use refit_support on a smaller support instead");

    const int p = problem.dim();
    Vector x = warm_start ? *warm_start : Vector::Zero(p);
    require(x.size() == p, "sparse_kliep: warm start has wrong length");

    Evaluation ex = evaluate(problem, x);
    double fx_total = ex.f + lambda * x.lpNorm<1>();

    SparseSolution sol;
    sol.lambda = lambda;

    double kkt = kkt_residual_l1(ex.grad, x, lambda);
    Vector y = x;
    Evaluation ey = ex;
    double t = 1.0;
    double step_l = 1.0 / opts.initial_step;
    bool y_is_x = true;
    int it = 0;
    int stalls = 0;

    while (kkt > opts.tol && it < opts.max_iter) {
        ++it;
        // Backtracking on the quadratic upper bound around y.
        Vector z;
        Evaluation ez;
        for (;;) {
            z = soft_threshold(y - ey.grad / step_l, lambda / step_l);
            ez = evaluate(problem, z);
            const Vector d = z - y;
            const double bound = ey.f + ey.grad.dot(d) + 0.5 * step_l * d.squaredNorm();
            if (ez.f <= bound + 1e-14 * std::max(1.0, std::abs(ey.f))) break;
            step_l /= opts.shrink;
            if (!std::isfinite(step_l)) break;
        }

        const double fz_total = ez.f + lambda * z.lpNorm<1>();
        if (fz_total > fx_total + 1e-13 * std::max(1.0, std::abs(fx_total))) {
            // Momentum overshot: restart from the last accepted iterate.
            if (y_is_x) {
                // rounding let a long step through; retry shorter, give up once hopeless
                if (++stalls > 40) break;
                step_l /= opts.shrink;
                continue;
            }
            y = x;
            ey = ex;
            t = 1.0;
            y_is_x = true;
            continue;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        const Vector prev = x;
        x = std::move(z);
        ex = std::move(ez);
        fx_total = fz_total;
        stalls = 0;
        kkt = kkt_residual_l1(ex.grad, x, lambda);
        if (kkt <= opts.tol) break;

        y = x + momentum * (x - prev);
        t = t_next;
        y_is_x = momentum == 0.0 || (x - prev).squaredNorm() == 0.0;
        ey = y_is_x ? ex : evaluate(problem, y);
        // Let the step grow slowly; backtracking shrinks it again when needed.
        step_l *= 0.9;
    }

    sol.value = std::move(x);
    sol.support = support_of(sol.value);
    sol.iterations = it;
    sol.kkt_residual = kkt;
    sol.converged = kkt <= opts.tol;
    sol.objective = fx_total;
    return sol;
}

RefitResult refit_support(const KliepProblem& problem, const Support& support,
                          const SolverOptions& opts)
{
    opts.validate();
    const int p = problem.dim();
    RefitResult res;
    res.theta = Vector::Zero(p);
    res.support = support;
    for (int k : support) require(k >= 0 && k < p, "refit_support: support index out of range");
    if (support.empty()) {
        res.converged = true;
        return res;
    }
    res.ill_posed = static_cast<int>(support.size()) >= problem.n_y();

    const Matrix psi_s = gather_columns(problem.psi_y(), support);
    Vector mean_xs(static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j)
        mean_xs[static_cast<Eigen::Index>(j)] = problem.mean_x()[support[j]];

    const double ny = static_cast<double>(problem.n_y());
    const double grad_tol = std::min(opts.tol, 1e-10);
    const int max_newton = std::min(opts.max_iter, 500);

    auto restricted_loss = [&](const Vector& th) {
        const Vector s = psi_s * th;
        const double shift = s.maxCoeff();
        return -mean_xs.dot(th) + shift + std::log((s.array() - shift).exp().mean());
    };

    Vector th = Vector::Zero(psi_s.cols());
    for (int it = 0; it < max_newton; ++it) {
        const RatioState st = ratio_state(th, psi_s);
        const Vector g = st.muhat - mean_xs;
        res.gradient_norm = g.lpNorm<Eigen::Infinity>();
        res.iterations = it;
        if (res.gradient_norm <= grad_tol) {
            res.converged = true;
            break;
        }
        const Matrix weighted = psi_s.array().colwise() * st.rhat.array().sqrt();
        Matrix h = weighted.transpose() * weighted / ny - st.muhat * st.muhat.transpose();
        bool damped = false;
        const Vector dir = -damped_solve(h, g, damped);
        res.damped = res.damped || damped;

        const double f0 = st.log_zhat - mean_xs.dot(th);
        const double slope = g.dot(dir);
        double step = 1.0;
        Vector cand = th + dir;
        int halvings = 0;
        while (restricted_loss(cand) > f0 + opts.armijo * step * slope && halvings < 60) {
            step *= opts.shrink;
            cand = th + step * dir;
            ++halvings;
        }
        if (halvings == 60) break;  // no descent at working precision
        th = std::move(cand);
    }
    if (!res.converged) {
        const RatioState st = ratio_state(th, psi_s);
        res.gradient_norm = (st.muhat - mean_xs).lpNorm<Eigen::Infinity>();
        res.converged = res.gradient_norm <= grad_tol;
    }

    for (std::size_t j = 0; j < support.size(); ++j)
        res.theta[support[j]] = th[static_cast<Eigen::Index>(j)];
    return res;
}

namespace {

void check_square_symmetric(const Matrix& h, const char* who)
{
    require(h.rows() == h.cols() && h.rows() >= 1, std::string(who) + ": matrix must be square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ArgumentError(std::string(who) + ": matrix is not symmetric");
}

} // namespace

namespace {

// Cyclic coordinate descent for 0.5 x'Hx - c'x + lambda sum_j wt_j |x_j|, with x_skip held at 0.
SparseSolution weighted_quadratic_lasso(const Matrix& h, const Vector& c, const Vector& wt, double lambda,
                                        Eigen::Index skip, const SolverOptions& opts, Vector x)
{
    const Eigen::Index p = h.rows();
    Vector g = h * x - c;

    auto kkt = [&] {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (j == skip) continue;
            const double t = lambda * wt[j];
            const double v = x[j] != 0.0 ? std::abs(g[j] + (x[j] > 0.0 ? t : -t))
                                         : std::max(0.0, std::abs(g[j]) - t);
            worst = std::max(worst, v);
        }
        return worst;
    };

    SparseSolution sol;
    sol.lambda = lambda;
    double res = kkt();
    int sweep = 0;
    while (res > opts.tol && sweep < opts.max_iter) {
        ++sweep;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (j == skip) continue;
            const double hjj = h(j, j);
            const double updated = hjj > 0.0 ? soft_threshold(hjj * x[j] - g[j], lambda * wt[j]) / hjj : 0.0;
            const double delta = updated - x[j];
            if (delta != 0.0) {
                g.noalias() += delta * h.col(j);
                x[j] = updated;
            }
        }
        res = kkt();
    }

    sol.iterations = sweep;
    sol.kkt_residual = res;
    sol.converged = res <= opts.tol;
    sol.objective = 0.5 * x.dot(h * x) - c.dot(x) + lambda * x.cwiseAbs().dot(wt);
    sol.support = support_of(x);
    sol.value = std::move(x);
    return sol;
}

} // namespace

SparseSolution omega_lasso(const Matrix& hessian, int k, double lambda, const SolverOptions& opts,
                           const std::optional<Vector>& warm_start)
{
    opts.validate();
    check_square_symmetric(hessian, "omega_lasso");
    const Eigen::Index p = hessian.rows();
    require(k >= 0 && k < p, "omega_lasso: edge index out of range");
    require(lambda >= 0.0 && std::isfinite(lambda), "omega_lasso: lambda must be >= 0");
    Vector w = warm_start ? *warm_start : Vector::Zero(p);
    require(w.size() == p, "omega_lasso: warm start has wrong length");
    return weighted_quadratic_lasso(hessian, Vector::Unit(p, k), Vector::Ones(p), lambda, -1, opts, std::move(w));
}

ScaledLassoSolution omega_scaled_lasso(const Matrix& hessian, int k, double lambda0,
                                       const SolverOptions& opts)
{
    opts.validate();
    check_square_symmetric(hessian, "omega_scaled_lasso");
    const Eigen::Index p = hessian.rows();
    require(k >= 0 && k < p, "omega_scaled_lasso: edge index out of range");
    require(lambda0 > 0.0 && std::isfinite(lambda0), "omega_scaled_lasso: lambda0 must be > 0");

    ScaledLassoSolution out;
    out.coefficients = Vector::Zero(p);
    const double hkk = hessian(k, k);
    if (!(hkk > 1e-14)) {
        // Constant statistic: nothing to invert.
        out.solution.value = Vector::Zero(p);
        out.solution.lambda = 0.0;
        out.solution.converged = true;
        return out;
    }

    // Regress coordinate k on the others in the geometry of H, penalty weights sqrt(H_jj):
    //   b = argmin 0.5 (e_k - b)'H(e_k - b) + lambda0 sigma sum_j sqrt(H_jj)|b_j|,  b_k = 0,
    //   sigma^2 = (e_k - b)'H(e_k - b),
    // alternated to the joint minimizer; then omega = (e_k - b) / sigma^2.
    const Vector hk = hessian.col(k);
    const Vector wt = hessian.diagonal().cwiseMax(0.0).cwiseSqrt();
    double sigma = std::sqrt(hkk);
    SparseSolution fit;
    fit.value = Vector::Zero(p);
    const int max_scale = std::max(1, std::min(opts.max_iter, 1000));
    for (int it = 0; it < max_scale; ++it) {
        fit = weighted_quadratic_lasso(hessian, hk, wt, lambda0 * sigma, k, opts, fit.value);
        const Vector& b = fit.value;
        const double resid = std::max(0.0, hkk - 2.0 * hk.dot(b) + b.dot(hessian * b));
        const double next = std::sqrt(resid);
        ++out.scale_iterations;
        if (next <= 1e-8 * std::sqrt(hkk)) {
            sigma = 1e-8 * std::sqrt(hkk);
            break;
        }
        const bool done = std::abs(next - sigma) <= opts.tol * sigma;
        sigma = next;
        if (done) {
            out.scale_converged = true;
            break;
        }
    }

    out.sigma = sigma;
    out.coefficients = fit.value;
    Vector omega = -fit.value / (sigma * sigma);
    omega[k] = 1.0 / (sigma * sigma);
    out.solution = std::move(fit);
    out.solution.lambda = lambda0 * sigma;
    out.solution.support = support_of(omega);
    out.solution.value = std::move(omega);
    return out;
}

OmegaRefit refit_omega(const Matrix& hessian, int k, const Support& support)
{
    check_square_symmetric(hessian, "refit_omega");
    const Eigen::Index p = hessian.rows();
    require(k >= 0 && k < p, "refit_omega: edge index out of range");

    OmegaRefit out;
    out.omega = Vector::Zero(p);
    if (support.empty()) return out;

    const auto s = static_cast<Eigen::Index>(support.size());
    Matrix block(s, s);
    Vector rhs = Vector::Zero(s);
    for (Eigen::Index a = 0; a < s; ++a) {
        require(support[a] >= 0 && support[a] < p, "refit_omega: support index out of range");
        if (support[a] == k) rhs[a] = 1.0;
        for (Eigen::Index b = 0; b < s; ++b) block(a, b) = hessian(support[a], support[b]);
    }
    const Vector ws = damped_solve(block, rhs, out.damped);
    for (Eigen::Index a = 0; a < s; ++a) out.omega[support[a]] = ws[a];
    return out;
}

} // namespace diffnet
