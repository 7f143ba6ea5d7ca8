#include "doctest.h"

#include "support.hpp"

#include "diffnet/ising.hpp"
#include "diffnet/kliep.hpp"

#include <cmath>
#include <map>

using namespace diffnet;

namespace {

double weight(const GraphPair& g, int u, int v) { return g.theta_star[EdgeMap(g.x.nodes()).index(u - 1, v - 1)]; }

} // namespace

TEST_CASE("exact enumeration small cases")
{
    const auto uni = exact_enumerate(IsingModel(4, Vector::Zero(6)));
    CHECK(uni.states.rows() == 16);
    CHECK((uni.probability.array() - 1.0 / 16).abs().maxCoeff() < 1e-15);

    for (double g : {-0.8, 0.0, 0.5, 1.3}) {
        const auto d = exact_enumerate(IsingModel(2, Vector::Constant(1, g)));
        double plus = 0.0;
        for (int s = 0; s < 4; ++s)
            if (d.psi(s, 0) > 0) plus += d.probability[s];
        CHECK(plus == doctest::Approx(std::exp(g) / (std::exp(g) + std::exp(-g))).epsilon(1e-13));
        CHECK(d.mean_psi[0] == doctest::Approx(std::tanh(g)).epsilon(1e-13));
    }

    Rng rng(1);
    const auto d = exact_enumerate(IsingModel(5, testing::random_vector(rng, 10, 1.0)));
    CHECK(d.probability.sum() == doctest::Approx(1.0).epsilon(1e-14));
    Eigen::SelfAdjointEigenSolver<Matrix> es(d.cov_psi);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);

    CHECK_THROWS_AS(exact_enumerate(IsingModel(17, Vector::Zero(edge_count(17)))), ArgumentError);
}

TEST_CASE("gibbs sampler: two-node correlation")
{
    for (double g : {-0.8, 0.0, 0.5}) {
        const int n = 10000;
        const Matrix s = gibbs_sample(IsingModel(2, Vector::Constant(1, g)), n, 100, 2, 77);
        const Vector prod = s.col(0).cwiseProduct(s.col(1));
        const double mean = prod.mean();
        const double se = std::sqrt((1.0 - std::tanh(g) * std::tanh(g)) / n);
        CHECK(std::abs(mean - std::tanh(g)) <= 4.0 * std::max(se, 1e-3));
    }
}

TEST_CASE("gibbs sampler matches exact pairwise moments on m = 5")
{
    Rng rng(5);
    const IsingModel model(5, testing::random_vector(rng, 10, 0.8));
    const auto exact = exact_enumerate(model);
    const int n = 20000;
    const Matrix psi = ising_suff_stats(gibbs_sample(model, n, 500, 10, 9));
    const Vector mean = psi.colwise().mean().transpose();
    for (int k = 0; k < 10; ++k) {
        const double se = std::sqrt(std::max(exact.cov_psi(k, k), 1e-6) / n);
        CHECK(std::abs(mean[k] - exact.mean_psi[k]) <= 4.0 * se);
    }
}

TEST_CASE("gibbs sampler is deterministic and validates input")
{
    Rng rng(6);
    const IsingModel model(4, testing::random_vector(rng, 6, 1.0));
    CHECK(gibbs_sample(model, 50, 10, 3, 42) == gibbs_sample(model, 50, 10, 3, 42));
    CHECK(gibbs_sample(model, 50, 10, 3, 42) != gibbs_sample(model, 50, 10, 3, 43));
    CHECK_THROWS_AS(gibbs_sample(model, 0, 10, 3, 1), ArgumentError);
    CHECK_THROWS_AS(IsingModel(3, Vector::Zero(2)), ArgumentError);
}

TEST_CASE("exact sampler frequencies")
{
    Rng rng(8);
    const auto d = exact_enumerate(IsingModel(3, testing::random_vector(rng, 3, 1.0)));
    Rng draw(9);
    const int n = 40000;
    const Matrix s = exact_sample(d, n, draw);
    const Vector mean = ising_suff_stats(s).colwise().mean().transpose();
    for (int k = 0; k < 3; ++k) CHECK(std::abs(mean[k] - d.mean_psi[k]) <= 4.0 * std::sqrt(d.cov_psi(k, k) / n));
}

TEST_CASE("population KLIEP oracle recovers the difference")
{
    Rng rng(3);
    const IsingModel g(4, testing::random_vector(rng, 6, 0.7));
    const auto same = population_kliep_oracle(make_graph_pair(g, g, "same"));
    CHECK(same.theta.cwiseAbs().maxCoeff() < 1e-10);

    // chain 1-2-3-4 with a change of 0.3 on (1,2)
    Vector gy = Vector::Zero(6), gx;
    const EdgeMap e(4);
    gy[e.index(0, 1)] = 0.2;
    gy[e.index(1, 2)] = -0.4;
    gy[e.index(2, 3)] = 0.5;
    gx = gy;
    gx[e.index(0, 1)] += 0.3;
    const auto fit = population_kliep_oracle(make_graph_pair(IsingModel(4, gx), IsingModel(4, gy), "chain"));
    CHECK(fit.converged);
    CHECK(fit.theta[e.index(0, 1)] == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(fit.gradient_norm <= 1e-8);
}

TEST_CASE("chain designs carry the published difference patterns")
{
    const auto c1 = make_pair("chain1", 10, 1);
    const EdgeMap e(10);
    CHECK(c1.x.weight(4, 5) == doctest::Approx(-0.06));
    CHECK(weight(c1, 5, 6) == doctest::Approx(-0.2));
    const std::map<std::pair<int, int>, double> d1{
        {{4, 5}, 0.4}, {{5, 6}, -0.2}, {{6, 7}, -0.4}, {{4, 6}, 0.2}, {{5, 7}, 0.2}};
    int nz = 0;
    for (int k = 0; k < e.edges(); ++k) {
        if (c1.theta_star[k] == 0.0) continue;
        ++nz;
        const auto [u, v] = e.edge(k);
        REQUIRE(d1.count({u + 1, v + 1}) == 1);
        CHECK(c1.theta_star[k] == doctest::Approx(d1.at({u + 1, v + 1})).epsilon(1e-12));
    }
    CHECK(nz == 5);

    const auto c2 = make_pair("chain2", 10, 1);
    const std::map<std::pair<int, int>, double> d2{
        {{3, 4}, 0.4}, {{4, 5}, 0.2}, {{5, 6}, -0.2}, {{7, 8}, 0.4}, {{4, 6}, 0.2}};
    nz = 0;
    for (int k = 0; k < e.edges(); ++k) {
        if (c2.theta_star[k] == 0.0) continue;
        ++nz;
        const auto [u, v] = e.edge(k);
        REQUIRE(d2.count({u + 1, v + 1}) == 1);
        CHECK(c2.theta_star[k] == doctest::Approx(d2.at({u + 1, v + 1})).epsilon(1e-12));
    }
    CHECK(nz == 5);

    CHECK(designated_edge("chain1", 10) == e.index(4, 5));
    CHECK(make_pair("tree1", 12, 1).theta_star.size() == edge_count(12));
    CHECK_THROWS_AS(make_pair("chain1", 5, 1), ArgumentError);
    CHECK_THROWS_AS(make_pair("ring", 10, 1), ArgumentError);
    // structural edges are reproducible from the seed
    CHECK(make_pair("chain1", 12, 7).x.gamma() == make_pair("chain1", 12, 7).x.gamma());
}

TEST_CASE("power pair shifts the designated edge")
{
    const EdgeMap e(10);
    const int k = designated_edge("power", 10);
    const auto base = make_power_pair(Nuisance::none, 0.0, 10, 3);
    const auto shifted = make_power_pair(Nuisance::none, 0.35, 10, 3);
    CHECK(shifted.theta_star[k] - base.theta_star[k] == doctest::Approx(0.35));
    CHECK(shifted.y.gamma() == base.y.gamma());
    for (auto n : {Nuisance::weak, Nuisance::strong, Nuisance::mixed})
        CHECK(make_power_pair(n, 0.0, 10, 3).theta_star != base.theta_star);
    CHECK(parse_nuisance("mixed") == Nuisance::mixed);
    CHECK(to_string(Nuisance::weak) == "weak");
}

TEST_CASE("null graphs")
{
    const auto pos = make_null_graph(NullKind::positive, 15, 2);
    int nz = 0;
    for (int k = 0; k < pos.gamma().size(); ++k) {
        const double w = pos.gamma()[k];
        if (w == 0.0) continue;
        ++nz;
        CHECK(w > 0.2);
        CHECK(w < 0.4);
    }
    CHECK(nz == 4 * 3);
    const auto neg = make_null_graph(NullKind::negative, 10, 2);
    CHECK(neg.gamma().maxCoeff() == 0.0);
    CHECK((neg.gamma().array() != 0.0).count() == 8);
    CHECK(make_null_graph(NullKind::mixed, 10, 5).gamma() == make_null_graph(NullKind::mixed, 10, 5).gamma());
    CHECK_THROWS_AS(make_null_graph(NullKind::positive, 12, 1), ArgumentError);
}

TEST_CASE("perturbed pairs")
{
    const auto base = make_null_graph(NullKind::positive, 15, 4);
    const auto one = perturb_graph(base, 1, 0.0, 11);
    CHECK((one.theta_star.array() != 0.0).count() == 1);
    const double d = one.theta_star.cwiseAbs().maxCoeff();
    CHECK(d > 0.0);
    CHECK(d < 0.1);
    CHECK(one.x.gamma() == base.gamma());

    CHECK(perturb_graph(base, 0, 0.3, 11).theta_star.isZero(0.0));
    for (int s : {3, 5, 20}) {
        const auto g = perturb_graph(base, s, 0.4, 12);
        CHECK((g.theta_star.array() != 0.0).count() == s);
        CHECK(g.theta_star.maxCoeff() < 0.5 + 1e-12);
        CHECK(g.theta_star.maxCoeff() >= 0.4);
    }
}
