#pragma once

#include "diffnet/ising.hpp"
#include "diffnet/kliep.hpp"
#include "diffnet/model.hpp"
#include "diffnet/random.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

namespace testing {

using diffnet::Matrix;
using diffnet::Vector;

inline Vector random_vector(diffnet::Rng& rng, int p, double scale)
{
    Vector v(p);
    for (int k = 0; k < p; ++k) v[k] = rng.uniform(-scale, scale);
    return v;
}

/// Independent +/-1 spins, then expanded to sufficient statistics.
inline Matrix random_spins(diffnet::Rng& rng, int n, int m)
{
    Matrix s(n, m);
    for (int i = 0; i < n; ++i)
        for (int v = 0; v < m; ++v) s(i, v) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return s;
}

struct Instance {
    int m;
    diffnet::KliepProblem problem;
    Vector theta;
};

/// Random small problem: m in [3, 8], n_x, n_y in [20, 100], |theta|_inf <= 1.
inline Instance random_instance(std::uint64_t seed)
{
    diffnet::Rng rng(seed);
    const int m = 3 + static_cast<int>(rng.index(6));
    const int nx = 20 + static_cast<int>(rng.index(81));
    const int ny = 20 + static_cast<int>(rng.index(81));
    const int p = diffnet::edge_count(m);
    // y also contains every x row, so mean(psi_x) lies in hull(psi_y) and the l1 problem is bounded
    const Matrix sx = random_spins(rng, nx, m);
    Matrix sy(ny + nx, m);
    sy << random_spins(rng, ny, m), sx;
    diffnet::KliepProblem prob(diffnet::ising_suff_stats(sx), diffnet::ising_suff_stats(sy));
    return {m, std::move(prob), random_vector(rng, p, 1.0)};
}

/// Random symmetric positive definite matrix A'A/q + eps I.
inline Matrix random_spd(diffnet::Rng& rng, int p, double eps = 0.05)
{
    Matrix a(p + 3, p);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (int j = 0; j < p; ++j) a(i, j) = rng.normal();
    Matrix h = a.transpose() * a / static_cast<double>(a.rows());
    h.diagonal().array() += eps;
    return h;
}

/// Naive unshifted log-mean-exp, only valid for small magnitudes.
inline double naive_log_partition(const Vector& theta, const Matrix& psi_y)
{
    double s = 0.0;
    for (Eigen::Index j = 0; j < psi_y.rows(); ++j) s += std::exp(psi_y.row(j).dot(theta));
    return std::log(s / static_cast<double>(psi_y.rows()));
}

/// Two-pass biased covariance of the rows of a matrix.
inline Matrix two_pass_cov(const Matrix& rows)
{
    const Eigen::Index n = rows.rows(), p = rows.cols();
    Vector mean = Vector::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i) mean += rows.row(i).transpose();
    mean /= static_cast<double>(n);
    Matrix c = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector d = rows.row(i).transpose() - mean;
        c += d * d.transpose();
    }
    return c / static_cast<double>(n);
}

/**
 * Exact minimizer of 0.5 w'Hw - w_k + lambda |w|_1 by enumerating sign
 * patterns in {-1, 0, +1}^p. For each pattern the stationarity equation on the
 * support is a linear system; the pattern is kept only if signs and the
 * off-support subgradient bound are consistent. Exponential in p.
 */
inline Vector qp_oracle_omega(const Matrix& h, int k, double lambda)
{
    const int p = static_cast<int>(h.rows());
    long total = 1;
    for (int i = 0; i < p; ++i) total *= 3;
    Vector best = Vector::Zero(p);
    double best_obj = 0.0;
    Vector e = Vector::Unit(p, k);
    for (long code = 0; code < total; ++code) {
        std::vector<int> idx;
        std::vector<double> sgn;
        long c = code;
        for (int i = 0; i < p; ++i, c /= 3) {
            const int d = static_cast<int>(c % 3);
            if (d) {
                idx.push_back(i);
                sgn.push_back(d == 1 ? 1.0 : -1.0);
            }
        }
        Vector w = Vector::Zero(p);
        if (!idx.empty()) {
            const int s = static_cast<int>(idx.size());
            Matrix hs(s, s);
            Vector rhs(s);
            for (int a = 0; a < s; ++a) {
                rhs[a] = e[idx[a]] - lambda * sgn[a];
                for (int b = 0; b < s; ++b) hs(a, b) = h(idx[a], idx[b]);
            }
            const Vector ws = hs.ldlt().solve(rhs);
            bool ok = true;
            for (int a = 0; a < s; ++a) {
                if (ws[a] * sgn[a] <= 0.0) ok = false;
                w[idx[a]] = ws[a];
            }
            if (!ok) continue;
        }
        const Vector g = h * w - e;
        bool feasible = true;
        for (int i = 0; i < p; ++i)
            if (w[i] == 0.0 && std::abs(g[i]) > lambda + 1e-12) feasible = false;
        if (!feasible) continue;
        const double obj = 0.5 * w.dot(h * w) - w[k] + lambda * w.lpNorm<1>();
        if (obj < best_obj) {
            best_obj = obj;
            best = w;
        }
    }
    return best;
}

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("diffnet_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing
