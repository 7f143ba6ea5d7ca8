// Command-line front end: simulate, fit, infer, bootstrap, experiment.

#include "diffnet/bootstrap.hpp"
#include "diffnet/harness.hpp"
#include "diffnet/inference.hpp"
#include "diffnet/io.hpp"
#include "diffnet/ising.hpp"
#include "diffnet/model.hpp"
#include "diffnet/parallel.hpp"
#include "diffnet/random.hpp"
#include "diffnet/solvers.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace diffnet;

namespace {

struct Common {
    std::uint64_t seed = 1;
    int threads = 0;
};

struct DataArgs {
    std::string x, y;
};

struct TuningArgs {
    std::optional<double> lambda_theta;  // unset: sqrt rule with c_theta
    double c_theta = 2.0;
    std::optional<double> lambda_k;      // unset: sqrt rule with c_k
    double c_k = std::sqrt(2.0);
    std::string omega_rule = "scaled";
    bool refit_theta = false;
    bool refit_omega = false;
};

void add_data(CLI::App* app, DataArgs& d)
{
    app->add_option("--x", d.x, "x-sample CSV (sidecar <file>.json or <stem>.json)")->required()->check(CLI::ExistingFile);
    app->add_option("--y", d.y, "y-sample CSV")->required()->check(CLI::ExistingFile);
}

void add_tuning(CLI::App* app, TuningArgs& t, bool with_omega)
{
    app->add_option("--lambda-theta", t.lambda_theta, "Step-1 penalty (default: c_theta * sqrt(log p / n_x))");
    app->add_option("--c-theta", t.c_theta, "multiplier of the sqrt rule for lambda_theta");
    if (!with_omega) return;
    app->add_option("--lambda-k", t.lambda_k, "Step-2 penalty or scaled-lasso level (default: c_k * sqrt(log p / n_y))");
    app->add_option("--c-k", t.c_k, "multiplier of the sqrt rule for lambda_k");
    app->add_option("--omega-rule", t.omega_rule, "fixed | scaled")->check(CLI::IsMember({"fixed", "scaled"}));
    app->add_flag("--refit-theta", t.refit_theta, "refit Step 1 on its support");
    app->add_flag("--refit-omega", t.refit_omega, "refit Step 2 on its support");
}

KliepProblem load_problem(const DataArgs& d)
{
    return KliepProblem(load_sufficient_stats(d.x), load_sufficient_stats(d.y));
}

double resolve_lambda(const std::optional<double>& given, int p, int n, double c, const char* flag)
{
    if (!given) return lambda_sqrt_rule(p, n, c);
    if (!(*given > 0.0) || !std::isfinite(*given))
        throw ArgumentError(std::string(flag) + " must be positive");
    return *given;
}

PipelineConfig make_pipeline(const KliepProblem& prob, const TuningArgs& t, int threads)
{
    PipelineConfig pc;
    pc.lambda_theta = resolve_lambda(t.lambda_theta, prob.dim(), prob.n_x(), t.c_theta, "--lambda-theta");
    pc.lambda_k = resolve_lambda(t.lambda_k, prob.dim(), prob.n_y(), t.c_k, "--lambda-k");
    pc.omega_rule = parse_omega_rule(t.omega_rule);
    pc.refit_theta = t.refit_theta;
    pc.refit_omega = t.refit_omega;
    pc.threads = threads;
    return pc;
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

std::vector<int> parse_edges(const std::string& spec, int p)
{
    std::vector<int> out;
    if (spec.empty() || spec == "all") return out;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const int k = std::stoi(tok);
        require(k >= 1 && k <= p, "edge " + tok + " outside [1, " + std::to_string(p) + "]");
        out.push_back(k - 1);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string pair = "chain1";
    std::string graph_x, graph_y;
    std::string null_kind;
    int nodes = 10;
    int n_x = 150, n_y = 300;
    int burnin = 3000, thinning = 50;
    std::string out = "sim";
};

int cmd_simulate(const SimulateArgs& a, const Common& c)
{
    const std::uint64_t graph_seed = derive_seed(c.seed, 0x67);
    GraphPair pair = [&] {
        if (!a.graph_x.empty()) return make_graph_pair(read_graph_json(a.graph_x), read_graph_json(a.graph_y), "custom");
        if (!a.null_kind.empty()) {
            const IsingModel g = make_null_graph(parse_null_kind(a.null_kind), a.nodes, graph_seed);
            return make_graph_pair(g, g, "null");
        }
        return make_pair(a.pair, a.nodes, graph_seed);
    }();
    const SamplePair s = draw_samples(pair, a.n_x, a.n_y, a.burnin, a.thinning, c.seed);

    const fs::path dir = a.out;
    fs::create_directories(dir);
    write_matrix_csv(dir / "x.csv", s.x);
    write_matrix_csv(dir / "y.csv", s.y);
    write_sidecar(dir / "x.json", {pair.x.nodes(), Encoding::ising});
    write_sidecar(dir / "y.json", {pair.y.nodes(), Encoding::ising});
    write_graph_json(dir / "graph_x.json", pair.x);
    write_graph_json(dir / "graph_y.json", pair.y);

    const EdgeMap edges(pair.x.nodes());
    CsvTable t;
    t.header = {"k", "u", "v", "theta_star"};
    for (int k : support_of(pair.theta_star)) {
        const auto [u, v] = edges.edge(k);
        t.rows.push_back({std::to_string(k + 1), std::to_string(u + 1), std::to_string(v + 1),
                          format_double(pair.theta_star[k])});
    }
    t.write(dir / "theta_star.csv");
    write_json(dir / "summary.json", {{"label", pair.label},
                                      {"m", pair.x.nodes()},
                                      {"n_x", a.n_x},
                                      {"n_y", a.n_y},
                                      {"burnin", a.burnin},
                                      {"thinning", a.thinning},
                                      {"seed", c.seed},
                                      {"changed_edges", t.rows.size()}});
    std::cout << "wrote samples and graphs to " << dir.string() << '\n';
    return 0;
}

int cmd_fit(const DataArgs& d, const TuningArgs& t, bool refit, const std::string& out, const Common&)
{
    const KliepProblem prob = load_problem(d);
    const double lambda = resolve_lambda(t.lambda_theta, prob.dim(), prob.n_x(), t.c_theta, "--lambda-theta");
    const SparseSolution sol = sparse_kliep(prob, lambda);
    Vector theta = sol.value;
    if (refit) theta = refit_support(prob, sol.support).theta;

    const EdgeMap edges(EdgeMap::nodes_for_edges(prob.dim()));
    CsvTable tab;
    tab.header = {"k", "u", "v", "theta"};
    for (int k : support_of(theta)) {
        const auto [u, v] = edges.edge(k);
        tab.rows.push_back({std::to_string(k + 1), std::to_string(u + 1), std::to_string(v + 1), format_double(theta[k])});
    }
    const fs::path dir = out;
    fs::create_directories(dir);
    tab.write(dir / "theta.csv");
    write_json(dir / "summary.json", {{"lambda_theta", lambda},
                                      {"support_size", tab.rows.size()},
                                      {"iterations", sol.iterations},
                                      {"converged", sol.converged},
                                      {"kkt_residual", sol.kkt_residual},
                                      {"objective", sol.objective},
                                      {"refit", refit}});
    std::cout << tab.str();
    return 0;
}

json record(const DebiasResult& r, const EdgeMap& edges, double alpha, const PipelineConfig& pc)
{
    const auto [u, v] = edges.edge(r.k);
    const Interval iv = ci(r, alpha);
    const ZTest z = z_stat(r);
    return {{"k", r.k + 1},
            {"u", u + 1},
            {"v", v + 1},
            {"theta_hat", r.theta_hat},
            {"sigma_hat", std::sqrt(r.sigma_hat2)},
            {"z", z.z},
            {"p_value", z.p_value},
            {"ci_lo", iv.lo},
            {"ci_hi", iv.hi},
            {"method", to_string(r.method)},
            {"lambda_theta", pc.lambda_theta},
            {"lambda_k", pc.lambda_k}};
}

int cmd_infer(const DataArgs& d, const TuningArgs& t, const std::string& edge_spec, const std::vector<std::string>& methods,
              double alpha, const std::string& out, const Common& c)
{
    const KliepProblem prob = load_problem(d);
    const PipelineConfig pc = make_pipeline(prob, t, resolve_threads(c.threads));
    const SparklieFit fit = fit_sparklie1(prob, pc, parse_edges(edge_spec, prob.dim()));
    const EdgeMap edges(EdgeMap::nodes_for_edges(prob.dim()));

    std::vector<std::vector<DebiasResult>> per(fit.edges.size());
    parallel_for(fit.edges.size(), pc.threads, [&](std::size_t j) {
        for (const std::string& m : methods) {
            switch (parse_method(m)) {
            case Method::sparklie1: per[j].push_back(fit.results[j]); break;
            case Method::sparklie2: per[j].push_back(sparklie2(prob, fit, j)); break;
            case Method::naive: per[j].push_back(naive_refit(prob, fit.step1.value, fit.edges[j])); break;
            case Method::oracle: throw ArgumentError("infer: the oracle method needs the true support");
            }
        }
    });

    json records = json::array();
    CsvTable tab;
    tab.header = {"k", "u", "v", "theta_hat", "sigma_hat", "z", "p_value", "ci_lo", "ci_hi", "method",
                  "lambda_theta", "lambda_k"};
    for (const auto& rs : per)
        for (const DebiasResult& r : rs) {
            const json j = record(r, edges, alpha, pc);
            records.push_back(j);
            tab.rows.push_back({j["k"].dump(), j["u"].dump(), j["v"].dump(), format_double(r.theta_hat),
                                format_double(j["sigma_hat"].get<double>()), format_double(j["z"].get<double>()),
                                format_double(j["p_value"].get<double>()), format_double(j["ci_lo"].get<double>()),
                                format_double(j["ci_hi"].get<double>()), to_string(r.method),
                                format_double(pc.lambda_theta), format_double(pc.lambda_k)});
        }
    const fs::path dir = out;
    fs::create_directories(dir);
    tab.write(dir / "results.csv");
    write_json(dir / "results.json", records);
    write_json(dir / "summary.json", {{"lambda_theta", pc.lambda_theta},
                                      {"lambda_k", pc.lambda_k},
                                      {"omega_rule", to_string(pc.omega_rule)},
                                      {"alpha", alpha},
                                      {"step1_support_size", fit.step1.support.size()},
                                      {"step1_converged", fit.step1.converged},
                                      {"n_x", prob.n_x()},
                                      {"n_y", prob.n_y()},
                                      {"edges", fit.edges.size()}});
    std::cout << tab.str();
    return 0;
}

int cmd_bootstrap(const DataArgs& d, const TuningArgs& t, const std::string& method, int n_b,
                  const std::vector<double>& alphas, bool recenter, const std::string& out, const Common& c)
{
    const KliepProblem prob = load_problem(d);
    const PipelineConfig pc = make_pipeline(prob, t, resolve_threads(c.threads));
    GlobalTestOptions go;
    go.method = parse_sketch_method(method);
    go.n_b = n_b;
    go.seed = c.seed;
    go.alphas = alphas;
    go.centering = recenter ? EmpiricalCentering::recentered : EmpiricalCentering::as_published;
    const GlobalTest gt = global_test(prob, Vector::Zero(prob.dim()), pc, go);

    const fs::path dir = out;
    fs::create_directories(dir);
    CsvTable sk;
    sk.header = {"b", "T", "W"};
    const Vector& ts = gt.sketches.t.stats;
    const Vector& ws = gt.sketches.w->stats;
    for (Eigen::Index b = 0; b < ts.size(); ++b)
        sk.rows.push_back({std::to_string(b + 1), format_double(ts[b]), format_double(ws[b])});
    sk.write(dir / "sketch.csv");

    CsvTable q;
    q.header = {"stat", "alpha", "quantile", "statistic", "reject"};
    json tests = json::array();
    for (const GlobalTestResult& r : gt.results) {
        q.rows.push_back({to_string(r.kind), format_double(r.alpha), format_double(r.critical),
                          format_double(r.statistic), r.reject ? "1" : "0"});
        tests.push_back({{"stat", to_string(r.kind)},
                         {"alpha", r.alpha},
                         {"statistic", r.statistic},
                         {"critical", r.critical},
                         {"reject", r.reject}});
    }
    q.write(dir / "quantiles.csv");

    // Simultaneous intervals at the first alpha.
    const EdgeMap edges(EdgeMap::nodes_for_edges(prob.dim()));
    const Vector sigma = gt.fit.sigma_hat();
    const auto ci_t = simultaneous_ci(gt.fit.theta_hat, quantile(gt.sketches.t, alphas.front()), prob.n());
    const auto ci_w = simultaneous_ci(gt.fit.theta_hat, quantile(*gt.sketches.w, alphas.front()), prob.n(), sigma);
    CsvTable sci;
    sci.header = {"k", "u", "v", "theta_hat", "sigma_hat", "T_lo", "T_hi", "W_lo", "W_hi"};
    for (int k = 0; k < prob.dim(); ++k) {
        const auto [u, v] = edges.edge(k);
        const auto kk = static_cast<std::size_t>(k);
        sci.rows.push_back({std::to_string(k + 1), std::to_string(u + 1), std::to_string(v + 1),
                            format_double(gt.fit.theta_hat[k]), format_double(sigma[k]), format_double(ci_t[kk].lo),
                            format_double(ci_t[kk].hi), format_double(ci_w[kk].lo), format_double(ci_w[kk].hi)});
    }
    sci.write(dir / "simultaneous_ci.csv");
    write_json(dir / "summary.json", {{"method", method},
                                      {"n_b", n_b},
                                      {"seed", c.seed},
                                      {"lambda_theta", pc.lambda_theta},
                                      {"lambda_k", pc.lambda_k},
                                      {"excluded", gt.sketches.t.excluded},
                                      {"unreliable", gt.sketches.t.unreliable},
                                      {"tests", tests}});
    std::cout << q.str();
    return 0;
}

int cmd_experiment(const std::string& config_path, bool paper_scale, const std::string& out, const Common& c,
                   bool seed_given, bool threads_given)
{
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (paper_scale) cfg.apply_paper_scale();
    if (seed_given) cfg.seed = c.seed;
    if (threads_given) cfg.threads = c.threads;
    const ExperimentReport rep = run_experiment(cfg);
    rep.write(out);
    std::cout << rep.summary.str() << "wrote report to " << out << " (" << rep.wall_seconds << " s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Differential network inference for pairwise Markov networks"};
    app.require_subcommand(1);
    Common common;
    auto* seed_opt = app.add_option("--seed", common.seed, "root RNG seed");
    auto* threads_opt = app.add_option("--threads", common.threads, "worker threads (fallback: $DIFFNET_THREADS)");
    seed_opt->check(CLI::NonNegativeNumber);
    threads_opt->check(CLI::NonNegativeNumber);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "draw Gibbs samples from a graph pair");
    simulate->add_option("--pair", sim.pair, "chain1 | chain2 | tree1 | tree2")
        ->check(CLI::IsMember({"chain1", "chain2", "tree1", "tree2"}));
    simulate->add_option("--null-kind", sim.null_kind, "identical graphs of 5-node chains: positive | mixed | negative");
    simulate->add_option("--graph-x", sim.graph_x, "x-graph JSON")->check(CLI::ExistingFile);
    simulate->add_option("--graph-y", sim.graph_y, "y-graph JSON")->check(CLI::ExistingFile);
    simulate->add_option("--nodes", sim.nodes, "number of nodes m");
    simulate->add_option("--n-x", sim.n_x);
    simulate->add_option("--n-y", sim.n_y);
    simulate->add_option("--burnin", sim.burnin);
    simulate->add_option("--thinning", sim.thinning);
    simulate->add_option("--out", sim.out, "output directory");

    DataArgs fit_data;
    TuningArgs fit_tune;
    bool fit_refit = false;
    std::string fit_out = "fit";
    auto* fit = app.add_subcommand("fit", "l1-penalized KLIEP");
    add_data(fit, fit_data);
    add_tuning(fit, fit_tune, false);
    fit->add_flag("--refit", fit_refit, "unpenalized refit on the selected support");
    fit->add_option("--out", fit_out, "output directory");

    DataArgs inf_data;
    TuningArgs inf_tune;
    std::string inf_edges = "all";
    std::vector<std::string> inf_methods{"sparklie1"};
    double inf_alpha = 0.05;
    std::string inf_out = "infer";
    auto* infer = app.add_subcommand("infer", "per-edge debiased estimates, intervals and tests");
    add_data(infer, inf_data);
    add_tuning(infer, inf_tune, true);
    infer->add_option("--edges", inf_edges, "comma-separated 1-based edge indices, or all");
    infer->add_option("--methods", inf_methods, "sparklie1 sparklie2 naive")
        ->check(CLI::IsMember({"sparklie1", "sparklie2", "naive"}));
    infer->add_option("--alpha", inf_alpha)->check(CLI::Range(0.0, 1.0));
    infer->add_option("--out", inf_out, "output directory");

    DataArgs bs_data;
    TuningArgs bs_tune;
    std::string bs_method = "multiplier";
    int bs_nb = 500;
    std::vector<double> bs_alphas{0.10, 0.05, 0.01};
    bool bs_recenter = false;
    std::string bs_out = "bootstrap";
    auto* boot = app.add_subcommand("bootstrap", "bootstrap sketch, quantiles and the equal-graph test");
    add_data(boot, bs_data);
    add_tuning(boot, bs_tune, true);
    boot->add_option("--method", bs_method, "empirical | multiplier")->check(CLI::IsMember({"empirical", "multiplier"}));
    boot->add_option("--n-b", bs_nb, "bootstrap replicates")->check(CLI::PositiveNumber);
    boot->add_option("--alpha", bs_alphas, "levels")->check(CLI::Range(0.0, 1.0));
    boot->add_flag("--recenter", bs_recenter, "add rather than subtract the gradient-at-estimate term (empirical)");
    boot->add_option("--out", bs_out, "output directory");

    std::string exp_config;
    bool paper_scale = false;
    std::string exp_out = "report";
    auto* exp = app.add_subcommand("experiment", "run a simulation study from a JSON config");
    exp->add_option("--config", exp_config)->required()->check(CLI::ExistingFile);
    exp->add_flag("--paper-scale", paper_scale, "1000 replications with the original chain lengths");
    exp->add_option("--out", exp_out, "output directory");

    // Subcommand options may also follow the subcommand name.
    for (auto* sub : {simulate, fit, infer, boot, exp}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);
    try {
        if (*simulate) return cmd_simulate(sim, common);
        if (*fit) return cmd_fit(fit_data, fit_tune, fit_refit, fit_out, common);
        if (*infer) return cmd_infer(inf_data, inf_tune, inf_edges, inf_methods, inf_alpha, inf_out, common);
        if (*boot) return cmd_bootstrap(bs_data, bs_tune, bs_method, bs_nb, bs_alphas, bs_recenter, bs_out, common);
        if (*exp)
            return cmd_experiment(exp_config, paper_scale, exp_out, common, seed_opt->count() > 0,
                                  threads_opt->count() > 0);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
