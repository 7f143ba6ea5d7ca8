#include "diffnet/bootstrap.hpp"

#include "diffnet/parallel.hpp"
#include "diffnet/random.hpp"

#include <algorithm>
#include <cmath>

namespace diffnet {

std::string to_string(StatKind k) { return k == StatKind::T ? "T" : "W"; }

std::string to_string(SketchMethod m) { return m == SketchMethod::empirical ? "empirical" : "multiplier"; }

SketchMethod parse_sketch_method(const std::string& name)
{
    if (name == "empirical") return SketchMethod::empirical;
    if (name == "multiplier") return SketchMethod::multiplier;
    throw ArgumentError("unknown sketch method '" + name + "'");
}

double quantile(const Vector& stats, double alpha)
{
    require(alpha > 0.0 && alpha < 1.0, "quantile: alpha must lie in (0, 1)");
    const auto nb = stats.size();
    // Guard against 0.95 * 100 landing just below 95.
    const auto idx = static_cast<Eigen::Index>(std::floor((1.0 - alpha) * static_cast<double>(nb) + 1e-9));
    if (idx < 1 || idx > nb)
        throw ArgumentError("quantile: order-statistic index " + std::to_string(idx) +
                            " outside [1, " + std::to_string(nb) + "]");
    std::vector<double> v(stats.begin(), stats.end());
    std::nth_element(v.begin(), v.begin() + (idx - 1), v.end());
    return v[static_cast<std::size_t>(idx - 1)];
}

double quantile(const BootstrapSketch& sketch, double alpha) { return quantile(sketch.stats, alpha); }

namespace {

void check_sigma(const std::optional<Vector>& sigma, Eigen::Index q, const char* who)
{
    if (!sigma) return;
    require(sigma->size() == q, std::string(who) + ": sigma must have one entry per edge");
    require((sigma->array() > 0.0).all(), std::string(who) + ": sigma must be positive");
}

} // namespace

BootstrapSketch multiplier_sketch(const KliepProblem& problem, const Matrix& omega, const Vector& theta_ref,
                                  const std::optional<Vector>& sigma, int n_b, std::uint64_t seed, int threads)
{
    const int p = problem.dim();
    require(omega.rows() == p, "multiplier_sketch: Omega must have p rows");
    require(theta_ref.size() == p, "multiplier_sketch: theta_ref has wrong length");
    require(n_b >= 1, "multiplier_sketch: n_b must be >= 1");
    check_sigma(sigma, omega.cols(), "multiplier_sketch");

    const double n = problem.n();
    const double nx = problem.n_x();
    const double ny = problem.n_y();
    const RatioState st = ratio_state(theta_ref, problem.psi_y());

    // Rows of the centered summands projected on every omega_k, scaled by n/n_x, n/n_y and n^{-1/2}.
    const double root_n = std::sqrt(n);
    Matrix ax = (problem.psi_x().rowwise() - problem.mean_x().transpose()) * omega;
    ax *= (n / nx) / root_n;
    Matrix ay = ((problem.psi_y().array().colwise() * st.rhat.array()).matrix().rowwise() -
                 st.muhat.transpose()) * omega;
    ay *= (n / ny) / root_n;

    BootstrapSketch sk;
    sk.kind = sigma ? StatKind::W : StatKind::T;
    sk.method = SketchMethod::multiplier;
    sk.seed = seed;
    sk.stats.resize(n_b);

    parallel_for(static_cast<std::size_t>(n_b), threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        Vector xi_x(ax.rows()), xi_y(ay.rows());
        for (auto& v : xi_x) v = rng.normal();
        for (auto& v : xi_y) v = rng.normal();
        Vector s = ax.transpose() * xi_x - ay.transpose() * xi_y;
        if (sigma) s = s.cwiseQuotient(*sigma);
        sk.stats[static_cast<Eigen::Index>(b)] = s.lpNorm<Eigen::Infinity>();
    });
    return sk;
}

EmpiricalReplicate empirical_replicate(const KliepProblem& problem, double lambda_theta, const Matrix& omega,
                                       const std::vector<int>& edges, const Vector& theta_hat,
                                       const Vector& grad_at_hat, const Vector& warm,
                                       const std::vector<int>& rows_x, const std::vector<int>& rows_y,
                                       const SolverOptions& solver, EmpiricalCentering centering)
{
    Matrix px(static_cast<Eigen::Index>(rows_x.size()), problem.dim());
    Matrix py(static_cast<Eigen::Index>(rows_y.size()), problem.dim());
    for (std::size_t i = 0; i < rows_x.size(); ++i) px.row(static_cast<Eigen::Index>(i)) = problem.psi_x().row(rows_x[i]);
    for (std::size_t j = 0; j < rows_y.size(); ++j) py.row(static_cast<Eigen::Index>(j)) = problem.psi_y().row(rows_y[j]);
    const KliepProblem boot(std::move(px), std::move(py));

    const SparseSolution sol = sparse_kliep(boot, lambda_theta, solver, warm);
    const Vector g = gradient(sol.value, boot);
    const double sign = centering == EmpiricalCentering::as_published ? -1.0 : 1.0;
    const Vector corr = omega.transpose() * g - sign * (omega.transpose() * grad_at_hat);

    EmpiricalReplicate rep;
    rep.converged = sol.converged;
    rep.deviation.resize(static_cast<Eigen::Index>(edges.size()));
    for (std::size_t j = 0; j < edges.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        rep.deviation[jj] = sol.value[edges[j]] - corr[jj] - theta_hat[edges[j]];
    }
    return rep;
}

EmpiricalSketches empirical_sketch(const KliepProblem& problem, double lambda_theta, const Matrix& omega,
                                   const std::vector<int>& edges, const Vector& theta_hat,
                                   const Vector& theta_check, const std::optional<Vector>& sigma,
                                   const EmpiricalOptions& opts)
{
    const int p = problem.dim();
    require(omega.rows() == p, "empirical_sketch: Omega must have p rows");
    require(omega.cols() == static_cast<Eigen::Index>(edges.size()),
            "empirical_sketch: Omega needs one column per edge");
    require(theta_hat.size() == p && theta_check.size() == p, "empirical_sketch: estimates have wrong length");
    require(opts.n_b >= 1, "empirical_sketch: n_b must be >= 1");
    check_sigma(sigma, omega.cols(), "empirical_sketch");

    const Vector grad_hat = gradient(theta_hat, problem);
    const double root_n = std::sqrt(static_cast<double>(problem.n()));
    const auto nb = static_cast<std::size_t>(opts.n_b);
    std::vector<double> t(nb), w(nb);
    std::vector<char> ok(nb, 0);

    parallel_for(nb, opts.threads, [&](std::size_t b) {
        Rng rng(derive_seed(opts.seed, b));
        std::vector<int> rx(static_cast<std::size_t>(problem.n_x())), ry(static_cast<std::size_t>(problem.n_y()));
        for (auto& i : rx) i = static_cast<int>(rng.index(static_cast<std::uint64_t>(problem.n_x())));
        for (auto& j : ry) j = static_cast<int>(rng.index(static_cast<std::uint64_t>(problem.n_y())));
        const EmpiricalReplicate rep = empirical_replicate(problem, lambda_theta, omega, edges, theta_hat, grad_hat,
                                                           theta_check, rx, ry, opts.solver, opts.centering);
        ok[b] = rep.converged;
        t[b] = root_n * rep.deviation.lpNorm<Eigen::Infinity>();
        if (sigma) w[b] = root_n * rep.deviation.cwiseQuotient(*sigma).lpNorm<Eigen::Infinity>();
    });

    auto collect = [&](const std::vector<double>& src, StatKind kind) {
        BootstrapSketch sk;
        sk.kind = kind;
        sk.method = SketchMethod::empirical;
        sk.seed = opts.seed;
        std::vector<double> kept;
        for (std::size_t b = 0; b < nb; ++b)
            if (ok[b]) kept.push_back(src[b]);
        sk.excluded = static_cast<int>(nb - kept.size());
        sk.unreliable = sk.excluded > 0.05 * static_cast<double>(nb);
        sk.stats = Eigen::Map<const Vector>(kept.data(), static_cast<Eigen::Index>(kept.size()));
        return sk;
    };

    EmpiricalSketches out{collect(t, StatKind::T), std::nullopt};
    if (sigma) out.w = collect(w, StatKind::W);
    return out;
}

std::vector<Interval> simultaneous_ci(const Vector& theta_hat, double critical, int n,
                                      const std::optional<Vector>& sigma)
{
    require(n > 0, "simultaneous_ci: n must be positive");
    require(critical >= 0.0, "simultaneous_ci: critical value must be >= 0");
    check_sigma(sigma, theta_hat.size(), "simultaneous_ci");
    std::vector<Interval> out(static_cast<std::size_t>(theta_hat.size()));
    const double root_n = std::sqrt(static_cast<double>(n));
    for (Eigen::Index k = 0; k < theta_hat.size(); ++k) {
        const double half = critical * (sigma ? (*sigma)[k] : 1.0) / root_n;
        out[static_cast<std::size_t>(k)] = {theta_hat[k] - half, theta_hat[k] + half};
    }
    return out;
}

double max_statistic(const Vector& theta_hat, const Vector& theta0, int n, const std::optional<Vector>& sigma)
{
    require(theta_hat.size() == theta0.size(), "max_statistic: length mismatch");
    check_sigma(sigma, theta_hat.size(), "max_statistic");
    Vector d = theta_hat - theta0;
    if (sigma) d = d.cwiseQuotient(*sigma);
    return std::sqrt(static_cast<double>(n)) * d.lpNorm<Eigen::Infinity>();
}

GlobalTest global_test(const KliepProblem& problem, const Vector& theta0, const PipelineConfig& config,
                       const GlobalTestOptions& opts)
{
    require(theta0.size() == problem.dim(), "global_test: theta0 has wrong length");
    require(!opts.alphas.empty(), "global_test: no alpha levels");

    GlobalTest gt;
    gt.fit = fit_sparklie1(problem, config);
    const Vector sigma = gt.fit.sigma_hat();

    if (opts.method == SketchMethod::multiplier) {
        gt.sketches.t = multiplier_sketch(problem, gt.fit.omega, theta0, std::nullopt, opts.n_b, opts.seed,
                                          config.threads);
        gt.sketches.w = multiplier_sketch(problem, gt.fit.omega, theta0, sigma, opts.n_b, opts.seed,
                                          config.threads);
    } else {
        EmpiricalOptions eo;
        eo.n_b = opts.n_b;
        eo.seed = opts.seed;
        eo.solver = config.solver;
        eo.centering = opts.centering;
        eo.threads = config.threads;
        gt.sketches = empirical_sketch(problem, config.lambda_theta, gt.fit.omega, gt.fit.edges,
                                       gt.fit.theta_hat, gt.fit.theta_check, sigma, eo);
    }

    const double t_obs = max_statistic(gt.fit.theta_hat, theta0, problem.n());
    const double w_obs = max_statistic(gt.fit.theta_hat, theta0, problem.n(), sigma);
    for (StatKind kind : {StatKind::T, StatKind::W}) {
        const BootstrapSketch& sk = kind == StatKind::T ? gt.sketches.t : *gt.sketches.w;
        for (double a : opts.alphas) {
            GlobalTestResult r;
            r.kind = kind;
            r.alpha = a;
            r.statistic = kind == StatKind::T ? t_obs : w_obs;
            r.critical = quantile(sk, a);
            r.reject = r.statistic > r.critical;
            gt.results.push_back(r);
        }
    }
    return gt;
}

} // namespace diffnet
