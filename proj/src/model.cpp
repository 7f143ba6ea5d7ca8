#include "diffnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace diffnet {

Support merge_supports(const Support& a, const Support& b)
{
    Support out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

EdgeMap::EdgeMap(int nodes) : nodes_(nodes)
{
    require(nodes >= 2, "EdgeMap: need at least 2 nodes");
    pairs_.reserve(static_cast<std::size_t>(edge_count(nodes)));
    for (int u = 0; u < nodes; ++u)
        for (int v = u + 1; v < nodes; ++v) pairs_.emplace_back(u, v);
}

int EdgeMap::index(int u, int v) const
{
    if (u < 0 || v >= nodes_ || u >= v)
        throw ArgumentError("EdgeMap::index: need 0 <= u < v < m, got (" + std::to_string(u) +
                            "," + std::to_string(v) + ")");
    // Edges preceding row u: sum_{i<u} (m-1-i).
    return u * (2 * nodes_ - u - 1) / 2 + (v - u - 1);
}

std::pair<int, int> EdgeMap::edge(int k) const
{
    if (k < 0 || k >= edges())
        throw ArgumentError("EdgeMap::edge: index " + std::to_string(k) + " out of range");
    return pairs_[static_cast<std::size_t>(k)];
}

int EdgeMap::nodes_for_edges(int p)
{
    const int m = static_cast<int>(std::lround((1.0 + std::sqrt(1.0 + 8.0 * p)) / 2.0));
    if (p < 1 || edge_count(m) != p)
        throw ArgumentError("edge count " + std::to_string(p) + " is not m(m-1)/2");
    return m;
}

Matrix ising_suff_stats(const Matrix& samples)
{
    const Eigen::Index n = samples.rows();
    const int m = static_cast<int>(samples.cols());
    require(m >= 2, "ising_suff_stats: need at least 2 columns");
    for (Eigen::Index i = 0; i < n; ++i)
        for (int u = 0; u < m; ++u) {
            const double s = samples(i, u);
            if (s != 1.0 && s != -1.0)
                throw DataError("ising_suff_stats: entry (" + std::to_string(i) + "," +
                                std::to_string(u) + ") is not +/-1");
        }

    Matrix psi(n, edge_count(m));
    int k = 0;
    for (int u = 0; u < m; ++u)
        for (int v = u + 1; v < m; ++v, ++k)
            psi.col(k) = samples.col(u).cwiseProduct(samples.col(v));
    return psi;
}

double stat_bound(const Matrix& psi)
{
    return psi.size() == 0 ? 0.0 : psi.cwiseAbs().maxCoeff();
}

} // namespace diffnet
