#include "diffnet/bootstrap.hpp"
#include "diffnet/harness.hpp"
#include "diffnet/inference.hpp"
#include "diffnet/ising.hpp"
#include "diffnet/kliep.hpp"
#include "diffnet/model.hpp"
#include "diffnet/solvers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace diffnet;

namespace {

SolverOptions solver_options(int max_iter, double tol)
{
    SolverOptions o;
    o.max_iter = max_iter;
    o.tol = tol;
    return o;
}

py::dict solution_dict(const SparseSolution& s)
{
    py::dict d;
    d["value"] = s.value;
    d["support"] = s.support;
    d["lambda"] = s.lambda;
    d["iterations"] = s.iterations;
    d["converged"] = s.converged;
    d["kkt_residual"] = s.kkt_residual;
    d["objective"] = s.objective;
    return d;
}

py::dict table_dict(const CsvTable& t)
{
    py::dict d;
    d["header"] = t.header;
    d["rows"] = t.rows;
    d["csv"] = t.str();
    return d;
}

} // namespace

PYBIND11_MODULE(_diffnet, mod)
{
    mod.doc() = "Differential Ising network estimation and inference";

    py::register_exception<ArgumentError>(mod, "ArgumentError", PyExc_ValueError);
    py::register_exception<DataError>(mod, "DataError", PyExc_RuntimeError);

    mod.def("edge_count", &edge_count, py::arg("nodes"));
    mod.def("edge_index", [](int m, int u, int v) { return EdgeMap(m).index(u, v); },
            py::arg("nodes"), py::arg("u"), py::arg("v"));
    mod.def("edge_pair", [](int m, int k) { return EdgeMap(m).edge(k); }, py::arg("nodes"), py::arg("k"));
    mod.def("ising_suff_stats", &ising_suff_stats, py::arg("samples"));

    mod.def("gibbs_sample",
            [](int m, const Vector& gamma, int n, int burnin, int thinning, std::uint64_t seed) {
                return gibbs_sample(IsingModel(m, gamma), n, burnin, thinning, seed);
            },
            py::arg("nodes"), py::arg("gamma"), py::arg("n"), py::arg("burnin") = 3000,
            py::arg("thinning") = 50, py::arg("seed") = 0);

    mod.def("loss", [](const Vector& th, const Matrix& px, const Matrix& py_) {
                return loss(th, KliepProblem(px, py_));
            },
            py::arg("theta"), py::arg("psi_x"), py::arg("psi_y"));
    mod.def("gradient", [](const Vector& th, const Matrix& px, const Matrix& py_) {
                return gradient(th, KliepProblem(px, py_));
            },
            py::arg("theta"), py::arg("psi_x"), py::arg("psi_y"));
    mod.def("hessian", [](const Vector& th, const Matrix& py_) { return hessian(th, py_); },
            py::arg("theta"), py::arg("psi_y"));

    mod.def("sparse_kliep",
            [](const Matrix& px, const Matrix& py_, double lambda, int max_iter, double tol) {
                return solution_dict(sparse_kliep(KliepProblem(px, py_), lambda, solver_options(max_iter, tol)));
            },
            py::arg("psi_x"), py::arg("psi_y"), py::arg("lambda_theta"), py::arg("max_iter") = 10000,
            py::arg("tol") = 1e-7);

    mod.def("fit_sparklie1",
            [](const Matrix& px, const Matrix& py_, double lambda_theta, double lambda_k,
               const std::string& omega_rule, std::vector<int> edges, int threads) {
                PipelineConfig cfg;
                cfg.lambda_theta = lambda_theta;
                cfg.lambda_k = lambda_k;
                cfg.omega_rule = parse_omega_rule(omega_rule);
                cfg.threads = threads;
                const KliepProblem prob(px, py_);
                const SparklieFit fit = fit_sparklie1(prob, cfg, std::move(edges));
                py::list results;
                for (const auto& r : fit.results) {
                    const Interval c = ci(r, 0.05);
                    const ZTest z = z_stat(r);
                    py::dict d;
                    d["k"] = r.k;
                    d["theta_hat"] = r.theta_hat;
                    d["sigma_hat"] = std::sqrt(r.sigma_hat2);
                    d["z"] = z.z;
                    d["p_value"] = z.p_value;
                    d["ci_lo"] = c.lo;
                    d["ci_hi"] = c.hi;
                    d["degenerate"] = r.degenerate;
                    results.append(d);
                }
                py::dict out;
                out["theta_check"] = fit.theta_check;
                out["theta_hat"] = fit.theta_hat;
                out["omega"] = fit.omega;
                out["edges"] = fit.edges;
                out["step1"] = solution_dict(fit.step1);
                out["results"] = results;
                return out;
            },
            py::arg("psi_x"), py::arg("psi_y"), py::arg("lambda_theta"), py::arg("lambda_k"),
            py::arg("omega_rule") = "scaled", py::arg("edges") = std::vector<int>{}, py::arg("threads") = 1);

    mod.def("global_test",
            [](const Matrix& px, const Matrix& py_, double lambda_theta, double lambda_k,
               const std::string& method, int n_b, std::uint64_t seed, std::vector<double> alphas,
               std::optional<Vector> theta0, int threads) {
                const KliepProblem prob(px, py_);
                PipelineConfig cfg;
                cfg.lambda_theta = lambda_theta;
                cfg.lambda_k = lambda_k;
                cfg.omega_rule = OmegaRule::fixed;
                cfg.threads = threads;
                GlobalTestOptions o;
                o.method = parse_sketch_method(method);
                o.n_b = n_b;
                o.seed = seed;
                o.alphas = std::move(alphas);
                const Vector t0 = theta0 ? *theta0 : Vector::Zero(prob.dim());
                const GlobalTest g = global_test(prob, t0, cfg, o);
                py::list rows;
                for (const auto& r : g.results) {
                    py::dict d;
                    d["stat"] = to_string(r.kind);
                    d["alpha"] = r.alpha;
                    d["statistic"] = r.statistic;
                    d["critical"] = r.critical;
                    d["reject"] = r.reject;
                    rows.append(d);
                }
                return rows;
            },
            py::arg("psi_x"), py::arg("psi_y"), py::arg("lambda_theta"), py::arg("lambda_k"),
            py::arg("method") = "empirical", py::arg("n_b") = 200, py::arg("seed") = 0,
            py::arg("alphas") = std::vector<double>{0.05}, py::arg("theta0") = py::none(), py::arg("threads") = 1);

    mod.def("run_experiment",
            [](const std::string& config_json, bool paper_scale) {
                ExperimentConfig c = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
                if (paper_scale) c.apply_paper_scale();
                c.validate();
                ExperimentReport rep;
                {
                    py::gil_scoped_release release;
                    rep = run_experiment(c);
                }
                py::dict out;
                out["experiment"] = rep.experiment;
                out["summary"] = table_dict(rep.summary);
                out["reps"] = table_dict(rep.reps);
                out["info"] = rep.info.dump();
                out["wall_seconds"] = rep.wall_seconds;
                return out;
            },
            py::arg("config_json"), py::arg("paper_scale") = false);
}
