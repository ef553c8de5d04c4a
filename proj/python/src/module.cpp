#include "demoreg/behavior_cloning.hpp"
#include "demoreg/environment.hpp"
#include "demoreg/experiment.hpp"
#include "demoreg/generators.hpp"
#include "demoreg/pipelines.hpp"
#include "demoreg/planning.hpp"
#include "demoreg/ucbvi_ent.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace demoreg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& flat, std::vector<py::ssize_t> shape) {
    Array out(shape);
    std::copy(flat.begin(), flat.end(), out.mutable_data());
    return out;
}

std::vector<double> from_array(const Array& a, const std::vector<py::ssize_t>& shape, const char* what) {
    if (a.ndim() != static_cast<py::ssize_t>(shape.size())) throw ConfigError(std::string(what) + ": wrong rank");
    for (std::size_t i = 0; i < shape.size(); ++i)
        if (a.shape(i) != shape[i]) throw ConfigError(std::string(what) + ": wrong shape");
    return {a.data(), a.data() + a.size()};
}

py::tuple values(const ValueTable& vt, const Policy& pi) {
    return py::make_tuple(to_array(vt.v, {vt.H + 1, vt.S}), to_array(vt.q, {vt.H, vt.S, vt.A}), pi);
}

} // namespace

PYBIND11_MODULE(_demoreg, m) {
    m.doc() = "Demonstration-regularized RL and RLHF";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<PipelineError>(m, "PipelineError", PyExc_RuntimeError);

    py::class_<TabularMdp>(m, "TabularMdp")
        .def(py::init([](const Array& p, const Array& r, int s1) {
                 if (p.ndim() != 4) throw ConfigError("p must have shape (H, S, A, S)");
                 const int H = static_cast<int>(p.shape(0)), S = static_cast<int>(p.shape(1)),
                           A = static_cast<int>(p.shape(2));
                 TabularMdp mdp(S, A, H, s1);
                 mdp.p = from_array(p, {H, S, A, S}, "p");
                 mdp.r = from_array(r, {H, S, A}, "r");
                 mdp.validate();
                 return mdp;
             }),
             py::arg("p"), py::arg("r"), py::arg("s1") = 0)
        .def_readonly("S", &TabularMdp::S)
        .def_readonly("A", &TabularMdp::A)
        .def_readonly("H", &TabularMdp::H)
        .def_readonly("s1", &TabularMdp::s1)
        .def_property_readonly("p", [](const TabularMdp& mdp) { return to_array(mdp.p, {mdp.H, mdp.S, mdp.A, mdp.S}); })
        .def_property_readonly("r", [](const TabularMdp& mdp) { return to_array(mdp.r, {mdp.H, mdp.S, mdp.A}); });

    py::class_<Policy>(m, "Policy")
        .def(py::init([](const Array& prob) {
                 if (prob.ndim() != 3) throw ConfigError("prob must have shape (H, S, A)");
                 Policy pi(static_cast<int>(prob.shape(0)), static_cast<int>(prob.shape(1)),
                           static_cast<int>(prob.shape(2)));
                 pi.prob = from_array(prob, {pi.H, pi.S, pi.A}, "prob");
                 pi.validate();
                 return pi;
             }),
             py::arg("prob"))
        .def_static("uniform", &Policy::uniform, py::arg("H"), py::arg("S"), py::arg("A"))
        .def_readonly("H", &Policy::H)
        .def_readonly("S", &Policy::S)
        .def_readonly("A", &Policy::A)
        .def_property_readonly("prob", [](const Policy& pi) { return to_array(pi.prob, {pi.H, pi.S, pi.A}); });

    m.def("river_swim", [](int S, int H) { return generate_river_swim(S, H); }, py::arg("S"), py::arg("H"));
    m.def("chain", &generate_chain, py::arg("S"), py::arg("A"), py::arg("H"));
    m.def("random_tabular", &generate_random_tabular, py::arg("S"), py::arg("A"), py::arg("H"), py::arg("seed"),
          py::arg("sparsity") = 0.0);
    m.def("expert_policy", [](const TabularMdp& mdp, double lambda) { return generate_expert(mdp, lambda).policy; },
          py::arg("mdp"), py::arg("lambda_expert"));

    m.def("value_iteration", [](const TabularMdp& mdp) {
        const auto [vt, pi] = value_iteration(mdp);
        return values(vt, pi);
    }, py::arg("mdp"), "Returns (V, Q, greedy policy).");
    m.def("regularized_value_iteration", [](const TabularMdp& mdp, const Policy& ref, double lambda) {
        const auto [vt, pi] = regularized_value_iteration(mdp, ref, lambda);
        return values(vt, pi);
    }, py::arg("mdp"), py::arg("ref"), py::arg("lambda_"));
    m.def("policy_evaluation", [](const TabularMdp& mdp, const Policy& pi, double lambda, const Policy* ref) {
        const ValueTable vt = lambda > 0.0 && ref ? policy_evaluation_regularized(mdp, pi, *ref, lambda)
                                                  : policy_evaluation(mdp, pi);
        return to_array(vt.v, {vt.H + 1, vt.S});
    }, py::arg("mdp"), py::arg("policy"), py::arg("lambda_") = 0.0, py::arg("ref") = nullptr);
    m.def("kl_trajectory", &kl_trajectory, py::arg("mdp"), py::arg("pi"), py::arg("pi_prime"));

    m.def("behavior_clone", [](const TabularMdp& mdp, const Policy& expert, std::size_t n, std::uint64_t seed) {
        const RewardFreeEnvironment env(mdp);
        return bc_tabular(collect_demonstrations(env, expert, n, seed));
    }, py::arg("mdp"), py::arg("expert"), py::arg("n"), py::arg("seed"));
    m.def("bc_tabular_kl_bound", &bc_tabular_kl_bound, py::arg("S"), py::arg("A"), py::arg("H"), py::arg("N"),
          py::arg("delta"));
    m.def("select_lambda", &select_lambda, py::arg("eps_rl"), py::arg("eps_kl_sq"), py::arg("floor_H") = py::none());

    m.def("ucbvi_ent_plus", [](const TabularMdp& mdp, const Policy& ref, double lambda, double eps, double delta,
                               std::uint64_t seed, std::int64_t max_episodes) {
        const TabularEnvironment env(mdp);
        UcbviOptions opts;
        opts.max_episodes = max_episodes;
        opts.record_trace = false;
        BpiResult res;
        {
            py::gil_scoped_release release;
            res = run_ucbvi_ent_plus(env, ref, lambda, eps, delta, seed, opts);
        }
        py::dict out;
        out["policy"] = res.policy;
        out["episodes"] = res.episodes;
        out["samples"] = res.samples;
        out["stopped"] = res.stopped;
        out["final_gap"] = res.final_gap;
        return out;
    }, py::arg("mdp"), py::arg("ref"), py::arg("lambda_"), py::arg("eps"), py::arg("delta"), py::arg("seed"),
          py::arg("max_episodes") = 10'000'000);

    m.def("demonstration_regularized_rl", [](const TabularMdp& mdp, const Policy& expert, std::size_t n_exp,
                                             double eps, double delta, std::uint64_t seed, bool diagnostic) {
        const TabularEnvironment env(mdp);
        const auto demos = collect_demonstrations(env, expert, n_exp, derive_seed(seed, "demos"));
        PipelineConfig cfg;
        cfg.eps = eps;
        cfg.delta = delta;
        cfg.diagnostic = diagnostic;
        const PipelineOracle oracle{&mdp, &expert};
        PipelineResult res;
        {
            py::gil_scoped_release release;
            res = demonstration_regularized_rl(env, demos, cfg, derive_seed(seed, "pipeline"), oracle);
        }
        py::dict out;
        out["policy"] = res.policy.components.at(0);
        out["bc_policy"] = res.bc_policy;
        out["episodes"] = res.episodes;
        out["stopped"] = res.stopped;
        out["lambda"] = res.budgets.lambda;
        out["eps_kl_sq"] = res.budgets.eps_kl_sq;
        if (res.diagnostics) {
            out["suboptimality"] = res.diagnostics->suboptimality;
            out["composite_bound"] = res.diagnostics->composite_bound;
        }
        return out;
    }, py::arg("mdp"), py::arg("expert"), py::arg("n_exp"), py::arg("eps"), py::arg("delta") = 0.1,
          py::arg("seed") = 0, py::arg("diagnostic") = false);

    m.def("run_sweep", [](const std::string& config_json, const std::string& out_dir) {
        io::json j;
        try {
            j = io::json::parse(config_json);
        } catch (const io::json::exception& e) {
            throw ConfigError(e.what());
        }
        const auto cfg = experiment_config_from_json(j);
        std::vector<SweepRow> rows;
        {
            py::gil_scoped_release release;
            rows = run_sweep(cfg, out_dir);
        }
        return rows.size();
    }, py::arg("config_json"), py::arg("out_dir"), "Runs a sweep and returns the number of rows written.");

    m.def("scaling_summary", [](const std::string& results_csv) {
        py::list out;
        for (const auto& s : scaling_summary(read_results(results_csv))) {
            py::dict d;
            d["algorithm"] = s.algorithm;
            d["n_exp"] = s.n_exp;
            d["median_episodes"] = s.median_episodes;
            d["slope"] = s.slope;
            d["ci"] = py::make_tuple(s.ci_low, s.ci_high);
            out.append(d);
        }
        return out;
    }, py::arg("results_csv"));
}
