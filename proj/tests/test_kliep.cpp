#include "doctest.h"

#include "support.hpp"

#include "diffnet/kliep.hpp"

#include <cmath>

using namespace diffnet;
using testing::random_instance;

TEST_CASE("log partition")
{
    Rng rng(1);
    const Matrix psi = ising_suff_stats(testing::random_spins(rng, 5, 4));
    CHECK(log_partition_hat(Vector::Zero(6), psi) == doctest::Approx(0.0).epsilon(1e-15));

    const Matrix one = psi.topRows(1);
    const Vector th = testing::random_vector(rng, 6, 1.0);
    CHECK(log_partition_hat(th, one) == doctest::Approx(one.row(0).dot(th)).epsilon(1e-14));

    for (int r = 0; r < 20; ++r) {
        const Vector t = testing::random_vector(rng, 6, 1.0);
        const double got = log_partition_hat(t, psi), ref = testing::naive_log_partition(t, psi);
        CHECK(std::abs(got - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
    }

    // huge magnitudes stay finite thanks to the shift
    CHECK(std::isfinite(log_partition_hat(Vector::Constant(6, 500.0), psi)));
}

TEST_CASE("ratio state")
{
    Rng rng(2);
    const Matrix psi = ising_suff_stats(testing::random_spins(rng, 30, 4));
    RatioState s0 = ratio_state(Vector::Zero(6), psi);
    CHECK((s0.rhat.array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK((s0.muhat - psi.colwise().mean().transpose()).cwiseAbs().maxCoeff() < 1e-15);

    for (int r = 0; r < 10; ++r) {
        const RatioState s = ratio_state(testing::random_vector(rng, 6, 3.0), psi);
        CHECK(std::abs(s.rhat.mean() - 1.0) < 1e-12);
    }

    // m=3, theta = (0.5, 0, 0): four distinct rows, direct per-row exponentiation
    Matrix spins(4, 3);
    spins << 1, 1, 1,
             1, -1, 1,
             -1, 1, 1,
             1, 1, -1;
    const Matrix p3 = ising_suff_stats(spins);
    const Vector th = (Vector(3) << 0.5, 0.0, 0.0).finished();
    Vector w(4);
    for (int j = 0; j < 4; ++j) w[j] = std::exp(0.5 * spins(j, 0) * spins(j, 1));
    const double zhat = w.mean();
    const RatioState s = ratio_state(th, p3);
    CHECK(s.log_zhat == doctest::Approx(std::log(zhat)).epsilon(1e-14));
    for (int j = 0; j < 4; ++j) CHECK(s.rhat[j] == doctest::Approx(w[j] / zhat).epsilon(1e-14));
    Vector mu = Vector::Zero(3);
    for (int j = 0; j < 4; ++j) mu += w[j] / zhat * p3.row(j).transpose() / 4.0;
    CHECK((s.muhat - mu).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("loss basics and convexity")
{
    Rng rng(3);
    const Matrix psi = ising_suff_stats(testing::random_spins(rng, 40, 5));
    KliepProblem same(psi, psi);
    CHECK(loss(Vector::Zero(10), same) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(gradient(Vector::Zero(10), same).cwiseAbs().maxCoeff() < 1e-15);
    // theta = 0 minimizes the loss on identical samples
    for (int r = 0; r < 10; ++r) CHECK(loss(testing::random_vector(rng, 10, 1.0), same) >= -1e-14);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = random_instance(seed);
        const int p = inst.problem.dim();
        Rng r2(seed + 100);
        const Vector a = testing::random_vector(r2, p, 1.0), b = testing::random_vector(r2, p, 1.0);
        CHECK(loss(0.5 * a + 0.5 * b, inst.problem) <=
              0.5 * loss(a, inst.problem) + 0.5 * loss(b, inst.problem) + 1e-10);
    }
}

TEST_CASE("gradient at zero and finite differences")
{
    auto inst = random_instance(7);
    const auto& prob = inst.problem;
    const Vector g0 = gradient(Vector::Zero(prob.dim()), prob);
    const Vector ref = prob.psi_y().colwise().mean().transpose() - prob.psi_x().colwise().mean().transpose();
    CHECK((g0 - ref).cwiseAbs().maxCoeff() < 1e-14);

    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        auto in = random_instance(seed);
        const Vector g = gradient(in.theta, in.problem);
        const double h = 1e-5;
        for (int k = 0; k < in.problem.dim(); ++k) {
            Vector tp = in.theta, tm = in.theta;
            tp[k] += h;
            tm[k] -= h;
            const double fd = (loss(tp, in.problem) - loss(tm, in.problem)) / (2 * h);
            CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(1.0, std::abs(g[k])));
        }
    }
}

TEST_CASE("hessian: covariance at zero, PSD, u-statistic identity")
{
    auto inst = random_instance(21);
    const Matrix& py = inst.problem.psi_y();
    const Matrix h0 = hessian(Vector::Zero(inst.problem.dim()), py);
    CHECK((h0 - testing::two_pass_cov(py)).cwiseAbs().maxCoeff() < 1e-13);

    Rng rng(5);
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        auto in = random_instance(seed);
        const Matrix h = hessian(in.theta, in.problem.psi_y());
        for (int r = 0; r < 5; ++r) {
            const Vector v = testing::random_vector(rng, in.problem.dim(), 1.0);
            CHECK(v.dot(h * v) >= -1e-10);
        }
        CHECK((h - hessian_ustat(in.theta, in.problem.psi_y())).cwiseAbs().maxCoeff() < 1e-10);
    }

    // n_y = 2 at theta = 0: a single pair with weight one
    Matrix two(2, 3);
    two << 1, -1, 1,
           -1, -1, 1;
    const Vector d = (two.row(0) - two.row(1)).transpose();
    const Matrix expect = 0.25 * d * d.transpose();
    CHECK((hessian_ustat(Vector::Zero(3), two) - expect).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((hessian(Vector::Zero(3), two) - expect).cwiseAbs().maxCoeff() < 1e-15);

    // identical rows: all differences vanish
    Matrix same(4, 3);
    same.rowwise() = Eigen::RowVector3d(1, -1, -1);
    CHECK(hessian_ustat(Vector::Constant(3, 0.3), same).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hessian matches finite differences of the gradient")
{
    for (std::uint64_t seed = 50; seed < 55; ++seed) {
        auto in = random_instance(seed);
        const Matrix h = hessian(in.theta, in.problem.psi_y());
        const double eps = 1e-6;
        for (int k = 0; k < in.problem.dim(); ++k) {
            Vector tp = in.theta, tm = in.theta;
            tp[k] += eps;
            tm[k] -= eps;
            const Vector col = (gradient(tp, in.problem) - gradient(tm, in.problem)) / (2 * eps);
            CHECK((col - h.col(k)).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, h.col(k).cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("problem validation")
{
    CHECK_THROWS_AS(KliepProblem(Matrix::Ones(3, 2), Matrix::Ones(3, 3)), ArgumentError);
    CHECK_THROWS_AS(KliepProblem(Matrix::Ones(3, 2), Matrix::Ones(1, 2)), ArgumentError);
    Matrix bad = Matrix::Ones(3, 2);
    bad(1, 1) = std::nan("");
    CHECK_THROWS_AS(KliepProblem(bad, Matrix::Ones(3, 2)), DataError);
    CHECK_THROWS_AS(loss(Vector::Zero(3), KliepProblem(Matrix::Ones(3, 2), Matrix::Ones(3, 2))), ArgumentError);
}
