#pragma once

#include "diffnet/common.hpp"
#include "diffnet/model.hpp"

#include <cstdint>
#include <string>

namespace diffnet {

class Rng;

/// Zero-field Ising model on m nodes with one coupling per edge (EdgeMap order).
class IsingModel {
public:
    IsingModel(int nodes, Vector gamma);

    int nodes() const { return nodes_; }
    const Vector& gamma() const { return gamma_; }

    /// Symmetric m x m coupling matrix with zero diagonal.
    const Matrix& couplings() const { return couplings_; }

    double weight(int u, int v) const { return couplings_(u, v); }

private:
    int nodes_;
    Vector gamma_;
    Matrix couplings_;
};

/**
 * Systematic-scan single-site Gibbs sampler.
 *
 * Starts from the all +1 state, runs `burnin` full sweeps, then records one
 * state every max(thinning, 1) sweeps. Site v is set to +1 with probability
 * 1 / (1 + exp(-2 sum_u gamma_uv x_u)).
 */
Matrix gibbs_sample(const IsingModel& model, int n, int burnin, int thinning, std::uint64_t seed);

/// Exact distribution over all 2^m states (m <= 16).
struct ExactDistribution {
    int nodes = 0;
    Matrix states;       ///< 2^m x m, entries +/-1
    Vector probability;  ///< sums to 1
    Vector mean_psi;     ///< E[psi]
    Matrix cov_psi;      ///< Cov[psi]
    Matrix psi;          ///< 2^m x p sufficient statistics of each state
};

constexpr int kMaxEnumerableNodes = 16;

ExactDistribution exact_enumerate(const IsingModel& model);

/// Independent draws from an enumerated distribution (inverse-CDF lookup).
Matrix exact_sample(const ExactDistribution& dist, int n, Rng& rng);

/// A pair of models and their difference gamma_x - gamma_y.
struct GraphPair {
    IsingModel x;
    IsingModel y;
    Vector theta_star;
    std::string label;
};

GraphPair make_graph_pair(IsingModel x, IsingModel y, std::string label);

struct PopulationFit {
    Vector theta;
    int iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
};

/// Minimizes the population KLIEP loss with both expectations computed exactly.
PopulationFit population_kliep_oracle(const GraphPair& pair);

/**
 * Graph pairs used in the single-edge experiments: "chain1", "chain2",
 * "tree1", "tree2". Weights on the displayed part of each design are fixed;
 * every other edge of the x-graph is drawn Unif(-1, 1) from `seed`.
 */
GraphPair make_pair(const std::string& label, int nodes, std::uint64_t seed);

/// Edge of interest of a single-edge design (0-based edge index).
int designated_edge(const std::string& label, int nodes);

/// Nuisance settings for the single-edge power study.
enum class Nuisance { none, weak, strong, mixed };

Nuisance parse_nuisance(const std::string& name);
std::string to_string(Nuisance n);

/// chain1 y-graph with the x-graph shifted by `delta` on edge (5,6) plus nuisance changes.
GraphPair make_power_pair(Nuisance setting, double delta, int nodes, std::uint64_t seed);

enum class NullKind { positive, mixed, negative };

NullKind parse_null_kind(const std::string& name);
std::string to_string(NullKind k);

/// m/5 disjoint chains of 5 nodes, weights Unif(0.2,0.4), Unif(-0.4,-0.2) or a random mix.
IsingModel make_null_graph(NullKind kind, int nodes, std::uint64_t seed);

/// x-graph = base; y-graph = base minus delta ~ Unif(l, l + 0.1) on `changes` random edges.
GraphPair perturb_graph(const IsingModel& base, int changes, double level, std::uint64_t seed);

} // namespace diffnet
