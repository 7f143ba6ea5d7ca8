#include "doctest.h"

#include "support.hpp"

#include "diffnet/inference.hpp"
#include "diffnet/ising.hpp"

#include <cmath>

using namespace diffnet;

namespace {

KliepProblem gibbs_problem(const GraphPair& g, int nx, int ny, std::uint64_t seed)
{
    return KliepProblem(ising_suff_stats(gibbs_sample(g.x, nx, 300, 5, derive_seed(seed, 1))),
                        ising_suff_stats(gibbs_sample(g.y, ny, 300, 5, derive_seed(seed, 2))));
}

GraphPair small_pair(std::uint64_t seed)
{
    Rng rng(seed);
    const int m = 5;
    Vector gy = testing::random_vector(rng, edge_count(m), 0.4);
    Vector gx = gy;
    gx[0] += 0.5;
    gx[7] -= 0.4;
    return make_graph_pair(IsingModel(m, gx), IsingModel(m, gy), "small");
}

// Problem whose empirical moments are exact: y is every state of the uniform model
// (so gamma_y = 0 exactly) and x has two rows whose mean is E_x[psi].
KliepProblem exact_moment_problem(const IsingModel& x)
{
    const auto dx = exact_enumerate(x);
    const auto dy = exact_enumerate(IsingModel(x.nodes(), Vector::Zero(x.gamma().size())));
    Matrix px(2, dx.mean_psi.size());
    px.row(0) = dx.mean_psi.transpose().array() + 0.5;
    px.row(1) = dx.mean_psi.transpose().array() - 0.5;
    return KliepProblem(px, dy.psi);
}

} // namespace

TEST_CASE("one-step correction")
{
    Rng rng(1);
    const Vector th = testing::random_vector(rng, 6, 1.0);
    const Vector w = testing::random_vector(rng, 6, 1.0);
    CHECK(sparklie1(th, Vector::Zero(6), w, 2, 100).theta_hat == th[2]);

    const Vector g = testing::random_vector(rng, 6, 1.0);
    CHECK(sparklie1(th, g, Vector::Unit(6, 2), 2, 100).theta_hat == doctest::Approx(th[2] - g[2]));

    const Matrix psi = ising_suff_stats(testing::random_spins(rng, 30, 4));
    const KliepProblem same(psi, psi);
    CHECK(std::abs(sparklie1(same, Vector::Zero(6), w, 3).theta_hat) < 1e-15);

    CHECK_THROWS_AS(sparklie1(th, g, w, 6, 100), ArgumentError);
}

TEST_CASE("refit-based estimators")
{
    const auto g = small_pair(3);
    const KliepProblem prob = gibbs_problem(g, 300, 300, 3);

    const auto lone = sparklie2(prob, {}, {}, 4);
    const auto ref = refit_support(prob, {4});
    CHECK(lone.theta_hat == doctest::Approx(ref.theta[4]).epsilon(1e-10));
    CHECK(lone.has_variance);
    CHECK(lone.sigma_hat2 > 0.0);

    const auto nv = naive_refit(prob, 1e3, 4);
    CHECK(nv.support_theta.empty());
    CHECK(nv.support_omega == Support{4});
    CHECK(nv.theta_hat == doctest::Approx(lone.theta_hat).epsilon(1e-12));

    const Matrix psi = prob.psi_y();
    const KliepProblem same(psi, psi);
    CHECK(std::abs(oracle_fit(same, {}, 2).theta_hat) < 1e-10);
}

TEST_CASE("refits recover the true difference from exact moments")
{
    Vector gx = Vector::Zero(10);
    gx[0] = 0.3;
    gx[4] = -0.5;
    gx[9] = 0.2;
    const KliepProblem prob = exact_moment_problem(IsingModel(5, gx));
    const Support truth{0, 4, 9};
    for (int k : truth) {
        CHECK(oracle_fit(prob, truth, k).theta_hat == doctest::Approx(gx[k]).epsilon(1e-7));
        CHECK(sparklie2(prob, {0, 4}, {9}, k).theta_hat == doctest::Approx(gx[k]).epsilon(1e-7));
    }
}

TEST_CASE("pooled covariance")
{
    const auto g = small_pair(4);
    const KliepProblem prob = gibbs_problem(g, 60, 80, 4);
    const auto pc0 = pooled_cov(prob, Vector::Zero(10));
    CHECK((pc0.S_psir - testing::two_pass_cov(prob.psi_y())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pc0.S_psi - testing::two_pass_cov(prob.psi_x())).cwiseAbs().maxCoeff() < 1e-12);

    Rng rng(2);
    const Vector th = testing::random_vector(rng, 10, 0.5);
    const auto pc = pooled_cov(prob, th);
    const RatioState st = ratio_state(th, prob.psi_y());
    const Matrix rows = prob.psi_y().array().colwise() * st.rhat.array();
    CHECK((pc.S_psir - testing::two_pass_cov(rows)).cwiseAbs().maxCoeff() < 1e-12);
    const double n = prob.n();
    CHECK((pc.S_pooled - (n / 60 * pc.S_psi + n / 80 * pc.S_psir)).cwiseAbs().maxCoeff() < 1e-12);

    const KliepProblem flat(Matrix::Ones(5, 3), Matrix::Ones(6, 3));
    const auto pcf = pooled_cov(flat, Vector::Constant(3, 0.2));
    CHECK(pcf.S_pooled.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("variance estimates")
{
    PooledCov id;
    id.S_pooled = Matrix::Identity(4, 4);
    const Vector w = (Vector(4) << 1.0, -2.0, 0.0, 0.5).finished();
    CHECK(variance(w, id).value == doctest::Approx(w.squaredNorm()));
    const auto zero = variance(Vector::Zero(4), id);
    CHECK(zero.degenerate);
    CHECK(zero.value == kVarianceFloor);

    const auto g = small_pair(5);
    const KliepProblem prob = gibbs_problem(g, 70, 90, 5);
    Rng rng(7);
    for (int r = 0; r < 5; ++r) {
        const Vector th = testing::random_vector(rng, 10, 0.5);
        const Vector om = testing::random_vector(rng, 10, 1.0);
        const auto pc = pooled_cov(prob, th);
        const double quad = om.dot(pc.S_pooled * om);
        CHECK(std::abs(variance(om, pc).value - quad) <= 1e-12 * std::max(1.0, quad));
        CHECK(std::abs(variance(prob, th, om).value - quad) <= 1e-12 * std::max(1.0, quad));
    }
}

TEST_CASE("confidence intervals and z statistics")
{
    DebiasResult r;
    r.theta_hat = 0.3;
    r.sigma_hat2 = 4.0;
    r.has_variance = true;
    r.n = 400;
    const Interval i = ci(r, 0.05);
    CHECK((i.hi - i.lo) / 2 == doctest::Approx(1.959964 * 2.0 / 20.0).epsilon(1e-6));
    const Interval wide = ci(r, 0.01), narrow = ci(r, 0.2);
    CHECK(wide.lo <= i.lo);
    CHECK(wide.hi >= i.hi);
    CHECK(narrow.lo >= i.lo);

    DebiasResult d = r;
    d.degenerate = true;
    const Interval pt = ci(d, 0.05);
    CHECK(pt.lo == pt.hi);

    DebiasResult z0 = r;
    z0.theta_hat = 0.0;
    CHECK(z_stat(z0).z == 0.0);
    CHECK(z_stat(z0).p_value == doctest::Approx(1.0));

    DebiasResult edge = r;
    edge.theta_hat = 1.959964 * 2.0 / 20.0;
    CHECK(std::abs(z_stat(edge).p_value - 0.05) < 1e-6);

    DebiasResult none;
    CHECK_THROWS_AS(ci(none, 0.05), ArgumentError);
    CHECK_THROWS_AS(z_stat(none), ArgumentError);
}

TEST_CASE("multi-edge covariance")
{
    const auto g = small_pair(6);
    const KliepProblem prob = gibbs_problem(g, 80, 80, 6);
    Rng rng(3);
    const auto pc = pooled_cov(prob, testing::random_vector(rng, 10, 0.3));
    Matrix om(10, 3);
    for (int j = 0; j < 3; ++j) om.col(j) = testing::random_vector(rng, 10, 1.0);

    const Matrix c = multi_edge_cov(om, pc);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const double ref = om.col(a).dot(pc.S_pooled * om.col(b));
            CHECK(std::abs(c(a, b) - ref) < 1e-12 * std::max(1.0, std::abs(ref)));
        }
    CHECK(multi_edge_cov(om.col(1), pc)(0, 0) == doctest::Approx(variance(Vector(om.col(1)), pc).value));

    PooledCov id;
    id.S_pooled = Matrix::Identity(10, 10);
    CHECK((multi_edge_cov(om, id) - om.transpose() * om).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pipeline agrees with the per-edge operations")
{
    const auto g = small_pair(7);
    const KliepProblem prob = gibbs_problem(g, 200, 300, 7);
    PipelineConfig cfg;
    cfg.lambda_theta = 0.08;
    cfg.lambda_k = 0.15;
    const auto fit = fit_sparklie1(prob, cfg, {0, 7});
    REQUIRE(fit.results.size() == 2);
    CHECK_FALSE(fit.full());
    for (std::size_t j = 0; j < 2; ++j) {
        const int k = fit.edges[j];
        const Vector w = fit.omega.col(static_cast<Eigen::Index>(j));
        const auto expect = omega_scaled_lasso(hessian(fit.theta_check, prob.psi_y()), k, 0.15).solution.value;
        CHECK((w - expect).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(fit.results[j].theta_hat == doctest::Approx(sparklie1(prob, fit.theta_check, w, k).theta_hat));
        CHECK(fit.results[j].sigma_hat2 == doctest::Approx(variance(prob, fit.theta_check, w).value));
        CHECK(sparklie2(prob, fit, j).method == Method::sparklie2);
    }

    // every edge: variance at the full one-step vector, independent of thread count
    cfg.threads = 4;
    const auto all4 = fit_sparklie1(prob, cfg);
    cfg.threads = 1;
    const auto all1 = fit_sparklie1(prob, cfg);
    CHECK(all4.full());
    CHECK(all4.theta_hat == all1.theta_hat);
    CHECK(all4.sigma_hat() == all1.sigma_hat());
    CHECK(all4.variance_point == all4.theta_hat);

    cfg.omega_rule = OmegaRule::fixed;
    cfg.refit_omega = true;
    cfg.refit_theta = true;
    const auto alt = fit_sparklie1(prob, cfg, {0});
    const Matrix h = hessian(alt.theta_check, prob.psi_y());
    const Vector r = h * alt.omega.col(0) - Vector::Unit(10, 0);
    for (int j : support_of(alt.omega.col(0))) CHECK(std::abs(r[j]) < 1e-9);

    CHECK(parse_method("naive") == Method::naive);
    CHECK(to_string(OmegaRule::scaled) == "scaled");
    CHECK_THROWS_AS(parse_omega_rule("auto"), ArgumentError);
}

TEST_CASE("z-test size under equal distributions")
{
    // x and y from the same model: |Z| > 1.96 should happen in about 5% of replicates
    Rng rng(11);
    const IsingModel model(5, testing::random_vector(rng, 10, 0.5));
    const auto exact = exact_enumerate(model);
    const int reps = 1000;
    int rejects = 0;
    PipelineConfig cfg;
    cfg.lambda_theta = 2.0 * std::sqrt(std::log(10.0) / 200);
    cfg.lambda_k = std::sqrt(2.0 * std::log(10.0) / 200);
    for (int r = 0; r < reps; ++r) {
        Rng draw(derive_seed(500, static_cast<std::uint64_t>(r)));
        const Matrix sx = exact_sample(exact, 200, draw), sy = exact_sample(exact, 200, draw);
        const KliepProblem prob(ising_suff_stats(sx), ising_suff_stats(sy));
        const auto fit = fit_sparklie1(prob, cfg, {3});
        if (std::abs(z_stat(fit.results[0]).z) > 1.959964) ++rejects;
    }
    const double rate = static_cast<double>(rejects) / reps;
    MESSAGE("null rejection rate " << rate);
    CHECK(rate <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / reps));
}
