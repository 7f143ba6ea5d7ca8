#pragma once

#include "diffnet/common.hpp"

#include <utility>

namespace diffnet {

/// Number of unordered node pairs, m(m-1)/2.
constexpr int edge_count(int nodes) { return nodes * (nodes - 1) / 2; }

/**
 * Bijection between node pairs (u, v), u < v, and edge indices.
 *
 * Nodes and edges are 0-based. Edges are enumerated lexicographically:
 * (0,1), (0,2), ..., (0,m-1), (1,2), ..., (m-2,m-1). File formats and the
 * CLI present both as 1-based.
 */
class EdgeMap {
public:
    explicit EdgeMap(int nodes);

    int nodes() const { return nodes_; }
    int edges() const { return edge_count(nodes_); }

    int index(int u, int v) const;
    std::pair<int, int> edge(int k) const;

    /// Node count m with m(m-1)/2 == p; throws if p is not triangular.
    static int nodes_for_edges(int p);

private:
    int nodes_;
    std::vector<std::pair<int, int>> pairs_;
};

/// Pairwise Ising sufficient statistics x_u * x_v for every edge, one row per sample.
Matrix ising_suff_stats(const Matrix& samples);

/// Largest absolute entry of a sufficient-statistic matrix.
double stat_bound(const Matrix& psi);

} // namespace diffnet
