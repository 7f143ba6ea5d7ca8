#include "diffnet/harness.hpp"

#include "diffnet/model.hpp"
#include "diffnet/normal.hpp"
#include "diffnet/parallel.hpp"
#include "diffnet/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace diffnet {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentKind parse_experiment(const std::string& name)
{
    if (name == "coverage") return ExperimentKind::coverage;
    if (name == "power_single") return ExperimentKind::power_single;
    if (name == "type1_global") return ExperimentKind::type1_global;
    if (name == "power_global") return ExperimentKind::power_global;
    if (name == "custom") return ExperimentKind::custom;
    throw ArgumentError("unknown experiment '" + name + "'");
}

std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::coverage: return "coverage";
    case ExperimentKind::power_single: return "power_single";
    case ExperimentKind::type1_global: return "type1_global";
    case ExperimentKind::power_global: return "power_global";
    case ExperimentKind::custom: return "custom";
    }
    return "?";
}

LambdaRule parse_lambda_rule(const std::string& name)
{
    if (name == "fixed") return LambdaRule::fixed;
    if (name == "grid_jump") return LambdaRule::grid_jump;
    if (name == "sqrt_rule") return LambdaRule::sqrt_rule;
    throw ArgumentError("unknown lambda rule '" + name + "'");
}

std::string to_string(LambdaRule r)
{
    switch (r) {
    case LambdaRule::fixed: return "fixed";
    case LambdaRule::grid_jump: return "grid_jump";
    case LambdaRule::sqrt_rule: return "sqrt_rule";
    }
    return "?";
}

double lambda_sqrt_rule(int p, int n, double c)
{
    require(p >= 1 && n >= 1, "lambda_sqrt_rule: p and n must be >= 1");
    require(c >= 0.0, "lambda_sqrt_rule: c must be >= 0");
    return c * std::sqrt(std::log(static_cast<double>(p)) / n);
}

std::vector<double> default_lambda_grid(const KliepProblem& problem, double step, double min)
{
    require(step > 0.0 && min > 0.0, "default_lambda_grid: step and min must be positive");
    const double lmax = gradient(Vector::Zero(problem.dim()), problem).lpNorm<Eigen::Infinity>();
    const auto top = static_cast<long>(std::ceil(lmax / step - 1e-9));
    const auto bottom = std::max<long>(1, static_cast<long>(std::ceil(min / step - 1e-9)));
    std::vector<double> grid;
    for (long i = std::max(top, bottom); i >= bottom; --i) grid.push_back(static_cast<double>(i) * step);
    return grid;
}

GridJumpResult select_lambda_grid_jump(const KliepProblem& problem, const std::vector<double>& grid,
                                       const GridJumpOptions& opts, const SolverOptions& solver)
{
    require(!grid.empty(), "select_lambda_grid_jump: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] > 0.0, "select_lambda_grid_jump: grid values must be positive");
        require(i == 0 || grid[i] < grid[i - 1], "select_lambda_grid_jump: grid must be strictly decreasing");
    }
    require(opts.factor > 1.0, "select_lambda_grid_jump: jump factor must exceed 1");
    const int cap = opts.support_cap > 0 ? opts.support_cap
                                         : std::max(1, std::min(problem.dim(), problem.n_y()) / 2);

    GridJumpResult res;
    std::optional<Vector> warm;
    int prev = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const SparseSolution sol = sparse_kliep(problem, grid[i], solver, warm);
        warm = sol.value;
        const int size = static_cast<int>(sol.support.size());
        res.support_sizes.push_back(size);
        if (size >= opts.factor * std::max(prev, 1) || size > cap) {
            res.jump_found = true;
            res.index = i == 0 ? 0 : static_cast<int>(i) - 1;
            res.lambda = grid[static_cast<std::size_t>(res.index)];
            return res;
        }
        prev = size;
    }
    res.index = static_cast<int>(grid.size()) - 1;
    res.lambda = grid.back();
    return res;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

LambdaSpec lambda_from_json(const json& j, LambdaSpec spec)
{
    if (j.is_number()) {
        spec.rule = LambdaRule::fixed;
        spec.value = j.get<double>();
        return spec;
    }
    if (j.contains("rule")) spec.rule = parse_lambda_rule(j.at("rule").get<std::string>());
    spec.value = j.value("value", spec.value);
    spec.c = j.value("c", spec.c);
    spec.grid_step = j.value("step", spec.grid_step);
    spec.grid_min = j.value("min", spec.grid_min);
    spec.jump.factor = j.value("factor", spec.jump.factor);
    spec.jump.support_cap = j.value("cap", spec.jump.support_cap);
    return spec;
}

json lambda_to_json(const LambdaSpec& s)
{
    json j{{"rule", to_string(s.rule)}};
    switch (s.rule) {
    case LambdaRule::fixed: j["value"] = s.value; break;
    case LambdaRule::sqrt_rule: j["c"] = s.c; break;
    case LambdaRule::grid_jump:
        j["step"] = s.grid_step;
        j["min"] = s.grid_min;
        j["factor"] = s.jump.factor;
        j["cap"] = s.jump.support_cap;
        break;
    }
    return j;
}

LambdaSpec sqrt_spec(double c)
{
    LambdaSpec s;
    s.rule = LambdaRule::sqrt_rule;
    s.c = c;
    return s;
}

bool is_global(ExperimentKind k) { return k == ExperimentKind::type1_global || k == ExperimentKind::power_global; }

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j)
{
    ExperimentConfig c;
    try {
        c.experiment = parse_experiment(j.value("experiment", std::string("coverage")));
        const bool global = is_global(c.experiment);
        if (global) {
            c.nodes = 15;
            c.n_x = c.n_y = 500;
            c.lambda_theta = sqrt_spec(2.0);
            c.lambda_k = sqrt_spec(2.0);
            c.omega_rule = OmegaRule::fixed;
            c.methods = {Method::sparklie1};
        } else {
            c.lambda_theta.rule = LambdaRule::grid_jump;
            c.lambda_k = sqrt_spec(std::sqrt(2.0));
        }
        if (c.experiment == ExperimentKind::power_single) {
            c.methods = {Method::naive, Method::sparklie1, Method::sparklie2};
            for (int i = -15; i <= 15; ++i) {
                if (i == 13 || i == -13 || i == 14 || i == -14) continue;
                c.deltas.push_back(i == 15 ? 0.75 : (i == -15 ? -0.75 : i / 20.0));
            }
        }

        c.pair = j.value("pair", c.pair);
        c.nodes = j.value("nodes", c.nodes);
        c.n_x = j.value("n_x", c.n_x);
        c.n_y = j.value("n_y", c.n_y);
        c.reps = j.value("reps", c.reps);
        c.n_b = j.value("n_b", c.n_b);
        if (j.contains("alphas")) c.alphas = j.at("alphas").get<std::vector<double>>();
        if (j.contains("lambda_theta")) c.lambda_theta = lambda_from_json(j.at("lambda_theta"), c.lambda_theta);
        if (j.contains("lambda_k")) c.lambda_k = lambda_from_json(j.at("lambda_k"), c.lambda_k);
        if (j.contains("omega_rule")) c.omega_rule = parse_omega_rule(j.at("omega_rule").get<std::string>());
        c.refit_theta = j.value("refit_theta", c.refit_theta);
        c.refit_omega = j.value("refit_omega", c.refit_omega);
        c.full_variance_point = j.value("full_variance_point", c.full_variance_point);
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
        }
        c.seed = j.value("seed", c.seed);
        c.burnin = j.value("burnin", c.burnin);
        c.thinning = j.value("thinning", c.thinning);
        c.threads = j.value("threads", c.threads);
        if (j.contains("solver")) {
            const json& s = j.at("solver");
            c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
            c.solver.tol = s.value("tol", c.solver.tol);
        }
        if (j.contains("deltas")) c.deltas = j.at("deltas").get<std::vector<double>>();
        if (j.contains("nuisances")) {
            c.nuisances.clear();
            for (const auto& n : j.at("nuisances")) c.nuisances.push_back(parse_nuisance(n.get<std::string>()));
        }
        if (j.contains("null_kind")) c.null_kind = parse_null_kind(j.at("null_kind").get<std::string>());
        if (j.contains("sketch")) c.sketch = parse_sketch_method(j.at("sketch").get<std::string>());
        if (j.contains("centering")) {
            const auto s = j.at("centering").get<std::string>();
            if (s == "as_published") c.centering = EmpiricalCentering::as_published;
            else if (s == "recentered") c.centering = EmpiricalCentering::recentered;
            else throw ArgumentError("unknown centering '" + s + "'");
        }
        if (j.contains("s_theta")) c.s_theta = j.at("s_theta").get<std::vector<int>>();
        if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
        c.graph_x = j.value("graph_x", c.graph_x);
        c.graph_y = j.value("graph_y", c.graph_y);
        c.edge = j.value("edge", c.edge);
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("experiment config: ") + e.what());
    }
    c.validate();
    return c;
}

json ExperimentConfig::to_json() const
{
    json methods_j = json::array();
    for (Method m : methods) methods_j.push_back(to_string(m));
    json nuis = json::array();
    for (Nuisance n : nuisances) nuis.push_back(to_string(n));
    json j{{"experiment", to_string(experiment)},
           {"pair", pair},
           {"nodes", nodes},
           {"n_x", n_x},
           {"n_y", n_y},
           {"reps", reps},
           {"n_b", n_b},
           {"alphas", alphas},
           {"lambda_theta", lambda_to_json(lambda_theta)},
           {"lambda_k", lambda_to_json(lambda_k)},
           {"omega_rule", to_string(omega_rule)},
           {"refit_theta", refit_theta},
           {"refit_omega", refit_omega},
           {"full_variance_point", full_variance_point},
           {"methods", methods_j},
           {"seed", seed},
           {"burnin", burnin},
           {"thinning", thinning},
           {"solver", {{"max_iter", solver.max_iter}, {"tol", solver.tol}}}};
    if (experiment == ExperimentKind::power_single) {
        j["deltas"] = deltas;
        j["nuisances"] = nuis;
    }
    if (is_global(experiment)) {
        j["null_kind"] = to_string(null_kind);
        j["sketch"] = to_string(sketch);
        j["centering"] = centering == EmpiricalCentering::as_published ? "as_published" : "recentered";
    }
    if (experiment == ExperimentKind::power_global) {
        j["s_theta"] = s_theta;
        j["levels"] = levels;
    }
    if (experiment == ExperimentKind::custom) {
        j["graph_x"] = graph_x;
        j["graph_y"] = graph_y;
        j["edge"] = edge;
    }
    return j;
}

void ExperimentConfig::validate() const
{
    require(reps >= 1, "config: reps must be >= 1");
    require(n_x >= 1 && n_y >= 2, "config: need n_x >= 1 and n_y >= 2");
    require(nodes >= 2, "config: nodes must be >= 2");
    require(n_b >= 1, "config: n_b must be >= 1");
    require(burnin >= 0 && thinning >= 0, "config: burnin and thinning must be >= 0");
    require(!alphas.empty(), "config: alphas must not be empty");
    for (double a : alphas) require(a > 0.0 && a < 1.0, "config: every alpha must lie in (0, 1)");
    require(lambda_k.rule != LambdaRule::grid_jump, "config: lambda_k does not support grid_jump");
    require(!methods.empty(), "config: methods must not be empty");
    if (experiment == ExperimentKind::power_single) {
        require(!deltas.empty(), "config: deltas must not be empty");
        require(!nuisances.empty(), "config: nuisances must not be empty");
    }
    if (is_global(experiment))
        require(nodes % 5 == 0, "config: global experiments need a multiple of 5 nodes");
    if (experiment == ExperimentKind::power_global) {
        require(!s_theta.empty() && !levels.empty(), "config: s_theta and levels must not be empty");
        for (int s : s_theta) require(s >= 0 && s <= edge_count(nodes), "config: s_theta out of range");
        for (double l : levels) require(l >= 0.0, "config: levels must be >= 0");
    }
    if (experiment == ExperimentKind::custom)
        require(!graph_x.empty() && !graph_y.empty(), "config: custom experiments need graph_x and graph_y");
    solver.validate();
}

void ExperimentConfig::apply_paper_scale()
{
    reps = 1000;
    burnin = 3000;
    thinning = is_global(experiment) ? 2000 : 1000;
    n_b = 300;
}

ExperimentConfig load_experiment_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("malformed config '" + path.string() + "': " + e.what());
    }
    ExperimentConfig c = ExperimentConfig::from_json(j);
    // Relative graph paths resolve against the config's directory.
    for (std::string* g : {&c.graph_x, &c.graph_y})
        if (!g->empty() && fs::path(*g).is_relative()) *g = (path.parent_path() / *g).string();
    return c;
}

void ExperimentReport::write(const fs::path& dir) const
{
    fs::create_directories(dir);
    summary.write(dir / "summary.csv");
    reps.write(dir / "reps.csv");
    if (qq) qq->write(dir / "qq.csv");
    json j = info;
    if (info.contains("config")) j["experiment"] = info["config"].at("experiment");
    j["wall_seconds"] = wall_seconds;
    std::ofstream out(dir / "summary.json");
    if (!out) throw DataError("cannot write '" + (dir / "summary.json").string() + "'");
    out << j.dump(2) << '\n';
}

std::uint64_t rep_seed(std::uint64_t root, std::uint64_t cell, int rep)
{
    return derive_seed(derive_seed(root, cell), static_cast<std::uint64_t>(rep));
}

SamplePair draw_samples(const GraphPair& pair, int n_x, int n_y, int burnin, int thinning, std::uint64_t seed)
{
    return {gibbs_sample(pair.x, n_x, burnin, thinning, derive_seed(seed, 1)),
            gibbs_sample(pair.y, n_y, burnin, thinning, derive_seed(seed, 2))};
}

// ---------------------------------------------------------------------------
// runs

namespace {

constexpr std::uint64_t kGraphStream = 0x67;
constexpr std::uint64_t kPilotStream = 0x70;

using Clock = std::chrono::steady_clock;

std::string fmt(double v) { return format_double(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }
std::string fmt_seed(std::uint64_t v) { return std::to_string(v); }

double binom_se(double phat, int reps) { return std::sqrt(phat * (1.0 - phat) / reps); }

KliepProblem make_problem(const SamplePair& s)
{
    return KliepProblem(ising_suff_stats(s.x), ising_suff_stats(s.y));
}

double max_lag1_autocorrelation(const Matrix& psi)
{
    if (psi.rows() < 3) return 0.0;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < psi.cols(); ++c) {
        const Eigen::ArrayXd v = psi.col(c).array() - psi.col(c).mean();
        const double denom = v.square().sum();
        if (denom <= 0.0) continue;
        const double num = (v.head(v.size() - 1) * v.tail(v.size() - 1)).sum();
        worst = std::max(worst, std::abs(num / denom));
    }
    return worst;
}

struct Tuning {
    double lambda_theta = 0.0;
    double lambda_k = 0.0;
    json info;
};

double resolve_simple(const LambdaSpec& spec, int p, int n)
{
    return spec.rule == LambdaRule::fixed ? spec.value : lambda_sqrt_rule(p, n, spec.c);
}

Tuning resolve_tuning(const ExperimentConfig& c, const GraphPair& pilot_pair)
{
    Tuning t;
    const int p = edge_count(c.nodes);
    t.lambda_k = resolve_simple(c.lambda_k, p, c.n_y);
    if (c.lambda_theta.rule != LambdaRule::grid_jump) {
        t.lambda_theta = resolve_simple(c.lambda_theta, p, c.n_x);
    } else {
        // Selected once on an independent pilot sample pair.
        const SamplePair s = draw_samples(pilot_pair, c.n_x, c.n_y, c.burnin, c.thinning,
                                          derive_seed(c.seed, kPilotStream));
        const KliepProblem prob = make_problem(s);
        const auto grid = default_lambda_grid(prob, c.lambda_theta.grid_step, c.lambda_theta.grid_min);
        const GridJumpResult g = select_lambda_grid_jump(prob, grid, c.lambda_theta.jump, c.solver);
        t.lambda_theta = g.lambda;
        t.info["grid_jump"] = {{"jump_found", g.jump_found},
                               {"index", g.index},
                               {"grid_top", grid.front()},
                               {"support_sizes", g.support_sizes}};
    }
    t.info["lambda_theta"] = t.lambda_theta;
    t.info["lambda_k"] = t.lambda_k;
    return t;
}

PipelineConfig pipeline(const ExperimentConfig& c, const Tuning& t)
{
    PipelineConfig pc;
    pc.lambda_theta = t.lambda_theta;
    pc.lambda_k = t.lambda_k;
    pc.omega_rule = c.omega_rule;
    pc.refit_theta = c.refit_theta;
    pc.refit_omega = c.refit_omega;
    pc.solver = c.solver;
    pc.threads = 1;
    return pc;
}

/// All requested single-edge estimates for one sample pair.
std::vector<DebiasResult> single_edge_estimates(const KliepProblem& problem, const ExperimentConfig& c,
                                                const PipelineConfig& pc, int k, const Support& true_support)
{
    const SparseSolution step1 = sparse_kliep(problem, pc.lambda_theta, c.solver);
    // Debiasing every edge puts the variance at the full one-step vector; {k} alone leaves it at theta_check.
    std::optional<SparklieFit> fit;
    std::size_t slot = 0;
    auto need_fit = [&]() -> const SparklieFit& {
        if (!fit) {
            fit = fit_sparklie1(problem, pc, step1, c.full_variance_point ? std::vector<int>{} : std::vector<int>{k});
            slot = c.full_variance_point ? static_cast<std::size_t>(k) : 0;
        }
        return *fit;
    };
    std::vector<DebiasResult> out;
    for (Method m : c.methods) {
        switch (m) {
        case Method::sparklie1: out.push_back(need_fit().results[slot]); break;
        case Method::sparklie2: out.push_back(sparklie2(problem, need_fit(), slot, c.solver)); break;
        case Method::naive: out.push_back(naive_refit(problem, step1.value, k, c.solver)); break;
        case Method::oracle: out.push_back(oracle_fit(problem, true_support, k, c.solver)); break;
        }
    }
    return out;
}

GraphPair custom_pair(const ExperimentConfig& c)
{
    return make_graph_pair(read_graph_json(c.graph_x), read_graph_json(c.graph_y), "custom");
}

json table_to_json(const CsvTable& t)
{
    json rows = json::array();
    for (const auto& r : t.rows) {
        json o;
        for (std::size_t i = 0; i < t.header.size(); ++i) o[t.header[i]] = r[i];
        rows.push_back(o);
    }
    return rows;
}

ExperimentReport single_edge_coverage(const ExperimentConfig& c, const GraphPair& pair, int k)
{
    const auto start = Clock::now();
    const int threads = resolve_threads(c.threads);
    const EdgeMap edges(pair.x.nodes());
    const Support truth = support_of(pair.theta_star);
    const double theta_k = pair.theta_star[k];
    const Tuning tune = resolve_tuning(c, pair);
    const PipelineConfig pc = pipeline(c, tune);

    std::vector<std::vector<DebiasResult>> per_rep(static_cast<std::size_t>(c.reps));
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(c.reps));
    parallel_for(per_rep.size(), threads, [&](std::size_t r) {
        seeds[r] = rep_seed(c.seed, 0, static_cast<int>(r));
        const KliepProblem prob =
            make_problem(draw_samples(pair, c.n_x, c.n_y, c.burnin, c.thinning, seeds[r]));
        per_rep[r] = single_edge_estimates(prob, c, pc, k, truth);
    });

    const auto [u, v] = edges.edge(k);
    const double alpha0 = c.alphas.front();
    ExperimentReport rep;
    rep.experiment = to_string(c.experiment);
    rep.reps.header = {"rep", "seed", "method", "k", "u", "v", "theta_star", "theta_hat", "sigma_hat",
                       "ci_lo", "ci_hi", "covered", "z", "p_value", "degenerate", "ill_posed"};
    for (std::size_t r = 0; r < per_rep.size(); ++r)
        for (const DebiasResult& d : per_rep[r]) {
            const Interval iv = ci(d, alpha0);
            const ZTest zt = z_stat(d);
            rep.reps.rows.push_back({fmt(static_cast<int>(r)), fmt_seed(seeds[r]), to_string(d.method), fmt(k + 1),
                                     fmt(u + 1), fmt(v + 1), fmt(theta_k), fmt(d.theta_hat),
                                     fmt(std::sqrt(d.sigma_hat2)), fmt(iv.lo), fmt(iv.hi),
                                     fmt(iv.lo <= theta_k && theta_k <= iv.hi), fmt(zt.z), fmt(zt.p_value),
                                     fmt(d.degenerate), fmt(d.ill_posed)});
        }

    rep.summary.header = {"method", "alpha", "reps", "coverage", "coverage_se", "bias", "rmse",
                          "mean_sigma_hat", "reject_rate", "reject_se"};
    CsvTable qq;
    qq.header = {"method", "i", "normal_quantile", "standardized_error"};
    for (std::size_t mi = 0; mi < c.methods.size(); ++mi) {
        std::vector<double> std_err;
        double bias = 0.0, sq = 0.0, sig = 0.0;
        for (const auto& rr : per_rep) {
            const DebiasResult& d = rr[mi];
            bias += d.theta_hat - theta_k;
            sq += (d.theta_hat - theta_k) * (d.theta_hat - theta_k);
            sig += std::sqrt(d.sigma_hat2);
            std_err.push_back(std::sqrt(static_cast<double>(d.n)) * (d.theta_hat - theta_k) / std::sqrt(d.sigma_hat2));
        }
        const double reps_d = c.reps;
        for (double a : c.alphas) {
            int covered = 0, rejected = 0;
            for (const auto& rr : per_rep) {
                const Interval iv = ci(rr[mi], a);
                covered += iv.lo <= theta_k && theta_k <= iv.hi;
                rejected += z_stat(rr[mi]).p_value < a;
            }
            const double cov = covered / reps_d, rej = rejected / reps_d;
            rep.summary.rows.push_back({to_string(c.methods[mi]), fmt(a), fmt(c.reps), fmt(cov),
                                        fmt(binom_se(cov, c.reps)), fmt(bias / reps_d),
                                        fmt(std::sqrt(sq / reps_d)), fmt(sig / reps_d), fmt(rej),
                                        fmt(binom_se(rej, c.reps))});
        }
        std::sort(std_err.begin(), std_err.end());
        for (std::size_t i = 0; i < std_err.size(); ++i)
            qq.rows.push_back({to_string(c.methods[mi]), fmt(static_cast<int>(i) + 1),
                               fmt(normal_quantile((static_cast<double>(i) + 0.5) / reps_d)), fmt(std_err[i])});
    }
    rep.qq = std::move(qq);

    const SamplePair probe = draw_samples(pair, c.n_x, c.n_y, c.burnin, c.thinning, rep_seed(c.seed, 0, 0));
    rep.info = {{"config", c.to_json()},
                {"tuning", tune.info},
                {"edge", {{"k", k + 1}, {"u", u + 1}, {"v", v + 1}, {"theta_star", theta_k}}},
                {"true_support_size", truth.size()},
                {"gibbs_lag1_autocorr_max", max_lag1_autocorrelation(ising_suff_stats(probe.x))},
                {"summary", table_to_json(rep.summary)}};
    rep.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return rep;
}

} // namespace

ExperimentReport run_coverage(const ExperimentConfig& config)
{
    config.validate();
    const GraphPair pair = make_pair(config.pair, config.nodes, derive_seed(config.seed, kGraphStream));
    return single_edge_coverage(config, pair, designated_edge(config.pair, config.nodes));
}

ExperimentReport run_power_single(const ExperimentConfig& c)
{
    c.validate();
    const auto start = Clock::now();
    const int threads = resolve_threads(c.threads);
    const std::uint64_t graph_seed = derive_seed(c.seed, kGraphStream);
    const int k = designated_edge("power", c.nodes);

    const Tuning tune = resolve_tuning(c, make_power_pair(c.nuisances.front(), 0.0, c.nodes, graph_seed));
    const PipelineConfig pc = pipeline(c, tune);

    struct Cell {
        Nuisance setting;
        double delta;
    };
    std::vector<Cell> cells;
    for (Nuisance s : c.nuisances)
        for (double d : c.deltas) cells.push_back({s, d});

    const std::size_t reps = static_cast<std::size_t>(c.reps);
    std::vector<std::vector<DebiasResult>> out(cells.size() * reps);
    std::vector<double> theta_k(cells.size());
    for (std::size_t ci_ = 0; ci_ < cells.size(); ++ci_)
        theta_k[ci_] = make_power_pair(cells[ci_].setting, cells[ci_].delta, c.nodes, graph_seed).theta_star[k];

    // Replicate r uses the same chain seeds in every cell (common random numbers across the delta grid).
    parallel_for(out.size(), threads, [&](std::size_t job) {
        const std::size_t cell = job / reps, r = job % reps;
        const GraphPair pair = make_power_pair(cells[cell].setting, cells[cell].delta, c.nodes, graph_seed);
        const KliepProblem prob = make_problem(
            draw_samples(pair, c.n_x, c.n_y, c.burnin, c.thinning, rep_seed(c.seed, 0, static_cast<int>(r))));
        out[job] = single_edge_estimates(prob, c, pc, k, support_of(pair.theta_star));
    });

    ExperimentReport rep;
    rep.experiment = to_string(c.experiment);
    rep.reps.header = {"nuisance", "delta", "rep", "seed", "method", "theta_star", "theta_hat", "sigma_hat", "z",
                       "p_value"};
    rep.summary.header = {"nuisance", "delta", "method", "alpha", "reps", "reject_rate", "reject_se"};
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        for (std::size_t r = 0; r < reps; ++r)
            for (const DebiasResult& d : out[cell * reps + r]) {
                const ZTest zt = z_stat(d);
                rep.reps.rows.push_back({to_string(cells[cell].setting), fmt(cells[cell].delta),
                                         fmt(static_cast<int>(r)), fmt_seed(rep_seed(c.seed, 0, static_cast<int>(r))),
                                         to_string(d.method), fmt(theta_k[cell]), fmt(d.theta_hat),
                                         fmt(std::sqrt(d.sigma_hat2)), fmt(zt.z), fmt(zt.p_value)});
            }
        for (std::size_t mi = 0; mi < c.methods.size(); ++mi)
            for (double a : c.alphas) {
                int rejected = 0;
                for (std::size_t r = 0; r < reps; ++r) rejected += z_stat(out[cell * reps + r][mi]).p_value < a;
                const double rate = rejected / static_cast<double>(c.reps);
                rep.summary.rows.push_back({to_string(cells[cell].setting), fmt(cells[cell].delta),
                                            to_string(c.methods[mi]), fmt(a), fmt(c.reps), fmt(rate),
                                            fmt(binom_se(rate, c.reps))});
            }
    }
    rep.info = {{"config", c.to_json()},
                {"tuning", tune.info},
                {"edge", {{"k", k + 1}, {"u", 5}, {"v", 6}}},
                {"summary", table_to_json(rep.summary)}};
    rep.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return rep;
}

namespace {

struct GlobalOutcome {
    std::vector<GlobalTestResult> results;
    int excluded = 0;
    bool unreliable = false;
    int support_size = 0;
};

GlobalOutcome run_global_once(const KliepProblem& prob, const ExperimentConfig& c, const PipelineConfig& pc,
                              std::uint64_t seed)
{
    GlobalTestOptions go;
    go.method = c.sketch;
    go.n_b = c.n_b;
    go.seed = derive_seed(seed, 3);
    go.centering = c.centering;
    go.alphas = c.alphas;
    const GlobalTest gt = global_test(prob, Vector::Zero(prob.dim()), pc, go);
    GlobalOutcome o;
    o.results = gt.results;
    o.excluded = gt.sketches.t.excluded;
    o.unreliable = gt.sketches.t.unreliable;
    o.support_size = static_cast<int>(gt.fit.step1.support.size());
    return o;
}

} // namespace

ExperimentReport run_type1_global(const ExperimentConfig& c)
{
    c.validate();
    const auto start = Clock::now();
    const int threads = resolve_threads(c.threads);
    const IsingModel g = make_null_graph(c.null_kind, c.nodes, derive_seed(c.seed, kGraphStream));
    const GraphPair pair = make_graph_pair(g, g, "null-" + to_string(c.null_kind));
    const Tuning tune = resolve_tuning(c, pair);
    const PipelineConfig pc = pipeline(c, tune);

    std::vector<GlobalOutcome> out(static_cast<std::size_t>(c.reps));
    parallel_for(out.size(), threads, [&](std::size_t r) {
        const std::uint64_t s = rep_seed(c.seed, 0, static_cast<int>(r));
        out[r] = run_global_once(make_problem(draw_samples(pair, c.n_x, c.n_y, c.burnin, c.thinning, s)), c, pc, s);
    });

    ExperimentReport rep;
    rep.experiment = to_string(c.experiment);
    rep.reps.header = {"rep", "seed", "stat", "alpha", "statistic", "critical", "reject", "excluded", "unreliable",
                       "step1_support"};
    for (std::size_t r = 0; r < out.size(); ++r)
        for (const GlobalTestResult& t : out[r].results)
            rep.reps.rows.push_back({fmt(static_cast<int>(r)), fmt_seed(rep_seed(c.seed, 0, static_cast<int>(r))),
                                     to_string(t.kind), fmt(t.alpha), fmt(t.statistic), fmt(t.critical),
                                     fmt(t.reject), fmt(out[r].excluded), fmt(out[r].unreliable),
                                     fmt(out[r].support_size)});

    rep.summary.header = {"stat", "alpha", "reps", "reject_rate", "reject_se"};
    const std::size_t per = out.front().results.size();
    for (std::size_t i = 0; i < per; ++i) {
        int rejected = 0;
        for (const auto& o : out) rejected += o.results[i].reject;
        const double rate = rejected / static_cast<double>(c.reps);
        rep.summary.rows.push_back({to_string(out.front().results[i].kind), fmt(out.front().results[i].alpha),
                                    fmt(c.reps), fmt(rate), fmt(binom_se(rate, c.reps))});
    }
    const SamplePair probe = draw_samples(pair, c.n_x, c.n_y, c.burnin, c.thinning, rep_seed(c.seed, 0, 0));
    rep.info = {{"config", c.to_json()},
                {"tuning", tune.info},
                {"gibbs_lag1_autocorr_max", max_lag1_autocorrelation(ising_suff_stats(probe.x))},
                {"summary", table_to_json(rep.summary)}};
    rep.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return rep;
}

ExperimentReport run_power_global(const ExperimentConfig& c)
{
    c.validate();
    const auto start = Clock::now();
    const int threads = resolve_threads(c.threads);
    const IsingModel base = make_null_graph(c.null_kind, c.nodes, derive_seed(c.seed, kGraphStream));
    const Tuning tune = resolve_tuning(c, make_graph_pair(base, base, "null"));
    const PipelineConfig pc = pipeline(c, tune);

    struct Cell {
        int s;
        double level;
    };
    std::vector<Cell> cells;
    for (int s : c.s_theta)
        for (double l : c.levels) cells.push_back({s, l});

    const std::size_t reps = static_cast<std::size_t>(c.reps);
    std::vector<GlobalOutcome> out(cells.size() * reps);
    // Within a replicate, the changed edges and the uniform draws behind delta are shared across levels.
    parallel_for(out.size(), threads, [&](std::size_t job) {
        const std::size_t cell = job / reps;
        const int r = static_cast<int>(job % reps);
        const std::uint64_t s = rep_seed(c.seed, 0, r);
        const GraphPair pair =
            perturb_graph(base, cells[cell].s, cells[cell].level, derive_seed(s, 100 + static_cast<std::uint64_t>(cells[cell].s)));
        out[job] = run_global_once(make_problem(draw_samples(pair, c.n_x, c.n_y, c.burnin, c.thinning, s)), c, pc, s);
    });

    ExperimentReport rep;
    rep.experiment = to_string(c.experiment);
    rep.reps.header = {"s_theta", "level", "rep", "seed", "stat", "alpha", "statistic", "critical", "reject",
                       "excluded"};
    rep.summary.header = {"s_theta", "level", "stat", "alpha", "reps", "power", "power_se"};
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        for (std::size_t r = 0; r < reps; ++r) {
            const GlobalOutcome& o = out[cell * reps + r];
            for (const GlobalTestResult& t : o.results)
                rep.reps.rows.push_back({fmt(cells[cell].s), fmt(cells[cell].level), fmt(static_cast<int>(r)),
                                         fmt_seed(rep_seed(c.seed, 0, static_cast<int>(r))), to_string(t.kind),
                                         fmt(t.alpha), fmt(t.statistic), fmt(t.critical), fmt(t.reject),
                                         fmt(o.excluded)});
        }
        const std::size_t per = out[cell * reps].results.size();
        for (std::size_t i = 0; i < per; ++i) {
            int rejected = 0;
            for (std::size_t r = 0; r < reps; ++r) rejected += out[cell * reps + r].results[i].reject;
            const double rate = rejected / static_cast<double>(c.reps);
            const GlobalTestResult& t0 = out[cell * reps].results[i];
            rep.summary.rows.push_back({fmt(cells[cell].s), fmt(cells[cell].level), to_string(t0.kind),
                                        fmt(t0.alpha), fmt(c.reps), fmt(rate), fmt(binom_se(rate, c.reps))});
        }
    }
    rep.info = {{"config", c.to_json()}, {"tuning", tune.info}, {"summary", table_to_json(rep.summary)}};
    rep.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& config)
{
    switch (config.experiment) {
    case ExperimentKind::coverage: return run_coverage(config);
    case ExperimentKind::power_single: return run_power_single(config);
    case ExperimentKind::type1_global: return run_type1_global(config);
    case ExperimentKind::power_global: return run_power_global(config);
    case ExperimentKind::custom: {
        config.validate();
        const GraphPair pair = custom_pair(config);
        const int p = static_cast<int>(pair.theta_star.size());
        require(config.edge >= 1 && config.edge <= p, "config: custom experiments need edge in [1, p]");
        ExperimentConfig c = config;
        c.nodes = pair.x.nodes();
        return single_edge_coverage(c, pair, config.edge - 1);
    }
    }
    throw ArgumentError("unhandled experiment kind");
}

} // namespace diffnet
