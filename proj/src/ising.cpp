#include "diffnet/ising.hpp"

#include "diffnet/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diffnet {

IsingModel::IsingModel(int nodes, Vector gamma) : nodes_(nodes), gamma_(std::move(gamma))
{
    require(nodes >= 2, "IsingModel: need at least 2 nodes");
    require(gamma_.size() == edge_count(nodes), "IsingModel: gamma must have m(m-1)/2 entries");
    require(gamma_.allFinite(), "IsingModel: non-finite edge weight");
    couplings_ = Matrix::Zero(nodes, nodes);
    int k = 0;
    for (int u = 0; u < nodes; ++u)
        for (int v = u + 1; v < nodes; ++v, ++k) {
            couplings_(u, v) = gamma_[k];
            couplings_(v, u) = gamma_[k];
        }
}

Matrix gibbs_sample(const IsingModel& model, int n, int burnin, int thinning, std::uint64_t seed)
{
    require(n >= 1, "gibbs_sample: n must be >= 1");
    require(burnin >= 0 && thinning >= 0, "gibbs_sample: burnin and thinning must be >= 0");

    const int m = model.nodes();
    const Matrix& j = model.couplings();
    Rng rng(seed);
    Vector x = Vector::Ones(m);

    auto sweep = [&] {
        for (int v = 0; v < m; ++v) {
            const double field = j.col(v).dot(x);
            const double p_up = 1.0 / (1.0 + std::exp(-2.0 * field));
            x[v] = rng.uniform() < p_up ? 1.0 : -1.0;
        }
    };

    for (int s = 0; s < burnin; ++s) sweep();
    const int gap = std::max(thinning, 1);
    Matrix out(n, m);
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < gap; ++s) sweep();
        out.row(i) = x.transpose();
    }
    return out;
}

ExactDistribution exact_enumerate(const IsingModel& model)
{
    const int m = model.nodes();
    if (m > kMaxEnumerableNodes)
        throw ArgumentError("exact_enumerate: m = " + std::to_string(m) + " exceeds the cap of " +
                            std::to_string(kMaxEnumerableNodes));

    const Eigen::Index count = Eigen::Index{1} << m;
    ExactDistribution d;
    d.nodes = m;
    d.states.resize(count, m);
    for (Eigen::Index s = 0; s < count; ++s)
        for (int u = 0; u < m; ++u) d.states(s, u) = ((s >> u) & 1) ? 1.0 : -1.0;

    d.psi = ising_suff_stats(d.states);
    const Vector logw = d.psi * model.gamma();
    const double shift = logw.maxCoeff();
    d.probability = (logw.array() - shift).exp().matrix();
    d.probability /= d.probability.sum();

    d.mean_psi = d.psi.transpose() * d.probability;
    const Matrix centered = d.psi.rowwise() - d.mean_psi.transpose();
    d.cov_psi = centered.transpose() * (centered.array().colwise() * d.probability.array()).matrix();
    return d;
}

Matrix exact_sample(const ExactDistribution& dist, int n, Rng& rng)
{
    require(n >= 1, "exact_sample: n must be >= 1");
    std::vector<double> cdf(static_cast<std::size_t>(dist.probability.size()));
    std::partial_sum(dist.probability.begin(), dist.probability.end(), cdf.begin());
    Matrix out(n, dist.nodes);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * cdf.back();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        out.row(i) = dist.states.row(it - cdf.begin());
    }
    return out;
}

GraphPair make_graph_pair(IsingModel x, IsingModel y, std::string label)
{
    require(x.nodes() == y.nodes(), "make_graph_pair: node counts differ");
    Vector theta = x.gamma() - y.gamma();
    return GraphPair{std::move(x), std::move(y), std::move(theta), std::move(label)};
}

PopulationFit population_kliep_oracle(const GraphPair& pair)
{
    const ExactDistribution dx = exact_enumerate(pair.x);
    const ExactDistribution dy = exact_enumerate(pair.y);
    const Matrix& psi = dy.psi;
    const Vector log_py = dy.probability.array().log().matrix();

    struct Tilt {
        double value;
        Vector grad;
        Vector q;
    };
    auto tilt = [&](const Vector& th) {
        const Vector a = log_py + psi * th;
        const double shift = a.maxCoeff();
        Vector q = (a.array() - shift).exp().matrix();
        const double sum = q.sum();
        q /= sum;
        const double value = -dx.mean_psi.dot(th) + shift + std::log(sum);
        Vector grad = psi.transpose() * q - dx.mean_psi;
        return Tilt{value, std::move(grad), std::move(q)};
    };

    PopulationFit fit;
    Vector th = Vector::Zero(psi.cols());
    for (int it = 0; it < 100; ++it) {
        const Tilt t = tilt(th);
        fit.gradient_norm = t.grad.lpNorm<Eigen::Infinity>();
        fit.iterations = it;
        if (fit.gradient_norm <= 1e-12) {
            fit.converged = true;
            break;
        }
        const Vector mean = psi.transpose() * t.q;
        const Matrix centered = psi.rowwise() - mean.transpose();
        const Matrix cov = centered.transpose() * (centered.array().colwise() * t.q.array()).matrix();
        const Vector dir = -cov.ldlt().solve(t.grad);

        double step = 1.0;
        Vector cand = th + dir;
        const double slope = t.grad.dot(dir);
        for (int h = 0; h < 60 && tilt(cand).value > t.value + 1e-4 * step * slope; ++h) {
            step *= 0.5;
            cand = th + step * dir;
        }
        th = std::move(cand);
    }
    fit.theta = std::move(th);
    return fit;
}

namespace {

struct WeightedEdge {
    int u;  // 1-based, as drawn in the design figures
    int v;
    double w;
};

// Chain edges (i, i+1) for i = 1..10 of the chain designs' x-graph.
constexpr double kChainPrefix[] = {-0.54, -0.85, 0.74, 0.56, -0.06, -0.10, 0.11, 0.35, 0.09, 0.20};

// Ternary-tree parent edges indexed by child node 2..40 (BFS numbering, parent(v) = (v+1)/3).
constexpr double kTree1Prefix[] = {
    -0.54, -0.85, 0.74,                                // 2..4
    0.56,  -0.06, -0.10, 0.11,  0.35, 0.09, -0.20, -0.90, 0.97,  // 5..13
    -0.70, -0.58, 0.67,  0.17,  -0.29, -0.95,          // 14..19
    0.62,  0.88,  0.86,  -0.16, -0.51, -0.04,          // 20..25
    0.94,  -0.79, -0.41, 0.21,  0.79,  0.18,           // 26..31
    0.70,  0.86,  0.70,  0.99,  -0.38, 0.35,           // 32..37
    0.96,  -0.13, -0.52};                              // 38..40

constexpr double kTree2Prefix[] = {
    -0.54, -0.85, 0.74,
    0.56,  -0.06, -0.10, 0.11,  0.35, 0.09, 0.20, -0.32, -0.27,
    -0.21, -0.13, -0.30, 0.95,  -0.59, -0.51,
    -0.81, -0.75, 0.70,  -0.82, 0.47,  -0.99,
    0.94,  -0.79, -0.41, 0.21,  0.79,  0.18,
    0.70,  0.86,  0.70,  0.99,  -0.38, 0.35,
    0.96,  -0.13, -0.52};

int tree_parent(int v) { return (v + 1) / 3; }

Vector structural_weights(const std::string& shape, int m, std::uint64_t seed)
{
    const EdgeMap edges(m);
    Vector gamma = Vector::Zero(edges.edges());
    Rng rng(derive_seed(seed, 0x6772617068ULL));  // "graph"
    const bool chain = shape == "chain";
    const double* prefix = chain ? kChainPrefix : (shape == "tree1" ? kTree1Prefix : kTree2Prefix);
    const int prefix_len = chain ? 10 : 39;

    for (int v = 2; v <= m; ++v) {
        const int u = chain ? v - 1 : tree_parent(v);
        const int slot = chain ? v - 2 : v - 2;
        const double w = slot < prefix_len ? prefix[slot] : rng.uniform(-1.0, 1.0);
        gamma[edges.index(u - 1, v - 1)] = w;
    }
    return gamma;
}

void apply(Vector& gamma, const EdgeMap& edges, std::initializer_list<WeightedEdge> changes)
{
    for (const auto& e : changes) gamma[edges.index(e.u - 1, e.v - 1)] = e.w;
}

} // namespace

GraphPair make_pair(const std::string& label, int nodes, std::uint64_t seed)
{
    int min_nodes = 0;
    if (label == "chain1") min_nodes = 7;
    else if (label == "chain2") min_nodes = 8;
    else if (label == "tree1") min_nodes = 9;
    else if (label == "tree2") min_nodes = 23;
    else throw ArgumentError("make_pair: unknown design '" + label + "'");
    require(nodes >= min_nodes, "make_pair: design '" + label + "' needs at least " +
                                    std::to_string(min_nodes) + " nodes");

    const EdgeMap edges(nodes);
    const bool chain = label.rfind("chain", 0) == 0;
    Vector gx = structural_weights(chain ? "chain" : label, nodes, seed);
    Vector gy = gx;

    if (label == "chain1")
        apply(gy, edges, {{4, 5, 0.16}, {5, 6, 0.14}, {6, 7, 0.30}, {4, 6, -0.20}, {5, 7, -0.20}});
    else if (label == "chain2")
        apply(gy, edges, {{3, 4, 0.34}, {4, 5, 0.36}, {5, 6, 0.14}, {7, 8, -0.29}, {4, 6, -0.20}});
    else if (label == "tree1")
        apply(gy, edges, {{1, 2, -0.14}, {1, 3, -0.65}, {3, 8, -0.29}, {1, 9, 0.20}, {3, 4, -0.20}});
    else
        apply(gy, edges, {{2, 5, 0.16}, {1, 3, -0.65}, {8, 23, -0.42}, {2, 3, -0.20}, {3, 4, -0.20}});

    return make_graph_pair(IsingModel(nodes, std::move(gx)), IsingModel(nodes, std::move(gy)), label);
}

int designated_edge(const std::string& label, int nodes)
{
    const EdgeMap edges(nodes);
    if (label.rfind("chain", 0) == 0 || label == "power") return edges.index(4, 5);
    if (label.rfind("tree", 0) == 0) return edges.index(0, 2);
    throw ArgumentError("designated_edge: unknown design '" + label + "'");
}

Nuisance parse_nuisance(const std::string& name)
{
    if (name == "none") return Nuisance::none;
    if (name == "weak") return Nuisance::weak;
    if (name == "strong") return Nuisance::strong;
    if (name == "mixed") return Nuisance::mixed;
    throw ArgumentError("unknown nuisance setting '" + name + "'");
}

std::string to_string(Nuisance n)
{
    switch (n) {
    case Nuisance::none: return "none";
    case Nuisance::weak: return "weak";
    case Nuisance::strong: return "strong";
    case Nuisance::mixed: return "mixed";
    }
    return "?";
}

GraphPair make_power_pair(Nuisance setting, double delta, int nodes, std::uint64_t seed)
{
    require(nodes >= 7, "make_power_pair: needs at least 7 nodes");
    const EdgeMap edges(nodes);
    const GraphPair base = make_pair("chain1", nodes, seed);
    Vector gy = base.y.gamma();
    Vector gx = gy;
    gx[edges.index(4, 5)] += delta;
    if (setting == Nuisance::weak || setting == Nuisance::mixed)
        apply(gx, edges, {{4, 6, 0.0}, {5, 7, 0.0}});
    if (setting == Nuisance::strong || setting == Nuisance::mixed)
        apply(gx, edges, {{4, 5, 0.56}, {6, 7, -0.10}});
    return make_graph_pair(IsingModel(nodes, std::move(gx)), IsingModel(nodes, std::move(gy)),
                           "power-" + to_string(setting));
}

NullKind parse_null_kind(const std::string& name)
{
    if (name == "positive") return NullKind::positive;
    if (name == "mixed") return NullKind::mixed;
    if (name == "negative") return NullKind::negative;
    throw ArgumentError("unknown null-graph kind '" + name + "'");
}

std::string to_string(NullKind k)
{
    switch (k) {
    case NullKind::positive: return "positive";
    case NullKind::mixed: return "mixed";
    case NullKind::negative: return "negative";
    }
    return "?";
}

IsingModel make_null_graph(NullKind kind, int nodes, std::uint64_t seed)
{
    require(nodes >= 5 && nodes % 5 == 0, "make_null_graph: node count must be a multiple of 5");
    const EdgeMap edges(nodes);
    Vector gamma = Vector::Zero(edges.edges());
    Rng rng(derive_seed(seed, 0x6e756c6cULL));  // "null"
    for (int c = 0; c < nodes / 5; ++c)
        for (int i = 0; i < 4; ++i) {
            const int u = 5 * c + i;
            double w = rng.uniform(0.2, 0.4);
            if (kind == NullKind::negative || (kind == NullKind::mixed && rng.uniform() < 0.5))
                w = -w;
            gamma[edges.index(u, u + 1)] = w;
        }
    return IsingModel(nodes, std::move(gamma));
}

GraphPair perturb_graph(const IsingModel& base, int changes, double level, std::uint64_t seed)
{
    const int p = static_cast<int>(base.gamma().size());
    require(changes >= 0 && changes <= p, "perturb_graph: change count out of range");
    require(level >= 0.0, "perturb_graph: level must be >= 0");

    Rng rng(derive_seed(seed, 0x7065727475ULL));  // "pertu"
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < changes; ++i) {
        const auto j = static_cast<int>(i + rng.index(static_cast<std::uint64_t>(p - i)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    Vector gy = base.gamma();
    for (int i = 0; i < changes; ++i) gy[order[static_cast<std::size_t>(i)]] -= rng.uniform(level, level + 0.1);
    return make_graph_pair(base, IsingModel(base.nodes(), std::move(gy)), "perturbed");
}

} // namespace diffnet
