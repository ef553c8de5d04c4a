// demoreg command-line tool.
#include "demoreg/behavior_cloning.hpp"
#include "demoreg/experiment.hpp"
#include "demoreg/generators.hpp"
#include "demoreg/io.hpp"
#include "demoreg/lsvi_ent.hpp"
#include "demoreg/pipelines.hpp"
#include "demoreg/planning.hpp"
#include "demoreg/ucbvi_ent.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace demoreg;
using io::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out;
    bool oracle = false;
};

fs::path require_out(const Globals& g, const char* fallback) {
    return g.out.empty() ? fs::path(fallback) : fs::path(g.out);
}

Policy load_ref(const std::string& path, const TabularMdp& mdp) {
    if (path.empty()) return Policy::uniform(mdp.H, mdp.S, mdp.A);
    Policy ref = io::policy_from_json(io::parse_file(path));
    if (!ref.matches(mdp)) throw ConfigError("reference policy does not match the MDP");
    return ref;
}

Policy load_expert(const std::string& path, const io::MdpFile& file, double lambda_expert) {
    if (!path.empty()) {
        Policy pi = io::policy_from_json(io::parse_file(path));
        if (!pi.matches(file.tabular)) throw ConfigError("expert policy does not match the MDP");
        return pi;
    }
    if (file.linear)
        return softmax_linear_policy(file.linear->features, file.linear->H,
                                     linear_expert_weights(*file.linear, lambda_expert));
    return generate_expert(file.tabular, lambda_expert).policy;
}

DemonstrationSet load_demos(const std::string& path, const TabularMdp& mdp) {
    return DemonstrationSet(mdp.S, mdp.A, mdp.H, io::read_trajectories(path));
}

PipelineMode parse_mode(const std::string& mode) {
    if (mode == "tabular") return PipelineMode::tabular;
    if (mode == "linear") return PipelineMode::linear;
    throw ConfigError("unknown mode '" + mode + "'");
}

json budgets_json(const PipelineBudgets& b) {
    return json{{"eps_exp", b.eps_exp},     {"eps_kl_sq", b.eps_kl_sq}, {"eps_rl", b.eps_rl},
                {"eps_rm_sq", b.eps_rm_sq}, {"lambda", b.lambda},       {"n_exp", b.n_exp},
                {"n_rm", b.n_rm},           {"delta", b.delta},         {"delta_split", b.delta_split},
                {"kl_measured", b.kl_measured}};
}

json diagnostics_json(const DiagnosticReport& d) {
    return json{{"v_star", d.v_star},
                {"v_policy", d.v_policy},
                {"suboptimality", d.suboptimality},
                {"eps_exp", d.eps_exp},
                {"kl", d.kl},
                {"eps_rl_realized", d.eps_rl_realized},
                {"eps_rm_sq", d.eps_rm_sq},
                {"composite_bound", d.composite_bound},
                {"bound_holds", d.bound_holds}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Demonstration-regularised RL and RLHF toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
    app.add_option("--out", g.out, "Output file or directory");
    app.add_flag("--oracle-diagnostics", g.oracle, "Report oracle quantities (true model required)");
    app.fallthrough();

    // gen-mdp
    auto* gen_mdp = app.add_subcommand("gen-mdp", "Generate an MDP instance");
    std::string kind = "random";
    int S = 4, A = 2, H = 4, d = 4;
    double sparsity = 0.0;
    gen_mdp->add_option("--kind", kind, "random | river | chain | linear")
        ->check(CLI::IsMember({"random", "river", "chain", "linear"}))
        ->capture_default_str();
    gen_mdp->add_option("--S", S)->capture_default_str();
    gen_mdp->add_option("--A", A)->capture_default_str();
    gen_mdp->add_option("--H", H)->capture_default_str();
    gen_mdp->add_option("--d", d)->capture_default_str();
    gen_mdp->add_option("--sparsity", sparsity)->capture_default_str();

    // gen-demos
    auto* gen_demos = app.add_subcommand("gen-demos", "Sample expert demonstrations");
    std::string mdp_path, expert_path, expert_out;
    std::size_t n = 100;
    double lambda_expert = 0.02;
    gen_demos->add_option("--mdp", mdp_path)->required();
    gen_demos->add_option("--n", n)->capture_default_str();
    gen_demos->add_option("--lambda-expert", lambda_expert)->capture_default_str();
    gen_demos->add_option("--expert", expert_path, "Expert policy JSON (default: regularised optimum)");
    gen_demos->add_option("--expert-out", expert_out, "Also write the expert policy here");

    // bc
    auto* bc = app.add_subcommand("bc", "Behaviour cloning");
    std::string demos_path, mode = "tabular";
    double kappa = -1.0, radius = 1.0;
    bc->add_option("--mdp", mdp_path)->required();
    bc->add_option("--demos", demos_path)->required();
    bc->add_option("--mode", mode)->check(CLI::IsMember({"tabular", "linear"}))->capture_default_str();
    bc->add_option("--kappa", kappa, "Smoothing weight; negative selects A/(N+A)")->capture_default_str();
    bc->add_option("--R", radius)->capture_default_str();
    bc->add_option("--expert", expert_path);
    bc->add_option("--lambda-expert", lambda_expert)->capture_default_str();

    // solve-exact
    auto* solve = app.add_subcommand("solve-exact", "Exact (regularised) planning");
    double lambda = 0.0;
    std::string ref_path;
    solve->add_option("--mdp", mdp_path)->required();
    solve->add_option("--lambda", lambda, "0 for unregularised")->capture_default_str();
    solve->add_option("--ref", ref_path, "Reference policy (default uniform)");

    // bpi-tabular
    auto* bpi_tab = app.add_subcommand("bpi-tabular", "Regularised BPI on a tabular MDP");
    double eps = 0.5, delta = 0.1;
    std::int64_t max_episodes = 10'000'000, every = 1;
    bool wallclock = false;
    bpi_tab->add_option("--mdp", mdp_path)->required();
    bpi_tab->add_option("--ref", ref_path);
    bpi_tab->add_option("--lambda", lambda)->required();
    bpi_tab->add_option("--eps", eps)->capture_default_str();
    bpi_tab->add_option("--delta", delta)->capture_default_str();
    bpi_tab->add_option("--max-episodes", max_episodes)->capture_default_str();
    bpi_tab->add_option("--telemetry-every", every)->check(CLI::PositiveNumber)->capture_default_str();
    bpi_tab->add_flag("--wallclock", wallclock, "Fill the wallclock_ms column");

    // bpi-linear
    auto* bpi_lin = app.add_subcommand("bpi-linear", "Regularised BPI on a linear MDP (fixed budget)");
    std::int64_t T = 1000;
    bpi_lin->add_option("--mdp", mdp_path)->required();
    bpi_lin->add_option("--ref", ref_path);
    bpi_lin->add_option("--lambda", lambda)->required();
    bpi_lin->add_option("--T", T)->capture_default_str();
    bpi_lin->add_option("--delta", delta)->capture_default_str();

    // rlhf
    auto* rlhf = app.add_subcommand("rlhf", "Demonstration-regularised RLHF pipeline");
    std::size_t n_rm = 10'000;
    rlhf->add_option("--mdp", mdp_path)->required();
    rlhf->add_option("--demos", demos_path)->required();
    rlhf->add_option("--n-rm", n_rm)->capture_default_str();
    rlhf->add_option("--eps", eps)->capture_default_str();
    rlhf->add_option("--delta", delta)->capture_default_str();
    rlhf->add_option("--mode", mode)->check(CLI::IsMember({"tabular", "linear"}))->capture_default_str();
    rlhf->add_option("--max-episodes", max_episodes)->capture_default_str();
    rlhf->add_option("--T", T, "Episode budget in linear mode")->capture_default_str();
    rlhf->add_option("--expert", expert_path, "Expert for oracle diagnostics");
    rlhf->add_option("--lambda-expert", lambda_expert)->capture_default_str();

    // run
    auto* run = app.add_subcommand("run", "Seeded sweep from a JSON config");
    std::string config_path;
    run->add_option("--config", config_path)->required();

    // scaling-summary
    auto* summary = app.add_subcommand("scaling-summary", "Fit log(median episodes) against log(N^E)");
    std::string results_path;
    summary->add_option("--results", results_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen_mdp->parsed()) {
            const fs::path out = require_out(g, "mdp.json");
            json j;
            if (kind == "random") j = io::mdp_to_json(generate_random_tabular(S, A, H, g.seed, sparsity));
            else if (kind == "river") j = io::mdp_to_json(generate_river_swim(S, H, {}, A));
            else if (kind == "chain") j = io::mdp_to_json(generate_chain(S, A, H));
            else j = io::mdp_to_json(generate_random_linear(S, A, H, d, g.seed));
            io::write_file(out, io::dump(j) + '\n');
        } else if (gen_demos->parsed()) {
            const auto file = io::read_mdp(mdp_path);
            const Policy expert = load_expert(expert_path, file, lambda_expert);
            const TabularEnvironment env(file.tabular);
            const auto demos = collect_demonstrations(env, expert, n, g.seed);
            io::write_trajectories(require_out(g, "demos.jsonl"), demos.trajectories());
            if (!expert_out.empty()) io::write_file(expert_out, io::dump(io::policy_to_json(expert)) + '\n');
        } else if (bc->parsed()) {
            const auto file = io::read_mdp(mdp_path);
            const auto demos = load_demos(demos_path, file.tabular);
            Policy pi;
            json report;
            if (parse_mode(mode) == PipelineMode::tabular) {
                pi = bc_tabular(demos);
                if (kappa >= 0.0) pi = kappa_smooth(pi, kappa);
            } else {
                if (!file.linear) throw ConfigError("linear behaviour cloning needs a linear MDP file");
                BcConfig cfg;
                cfg.kappa = kappa;
                cfg.R = radius;
                cfg.seed = g.seed;
                auto res = bc_linear(demos, file.linear->features, cfg);
                pi = std::move(res.policy);
                report["kappa"] = res.kappa;
                report["objective"] = res.objective;
            }
            io::write_file(require_out(g, "bc_policy.json"), io::dump(io::policy_to_json(pi)) + '\n');
            if (g.oracle) {
                const Policy expert = load_expert(expert_path, file, lambda_expert);
                const double kl = kl_trajectory(file.tabular, expert, pi);
                report["kl"] = kl;
                report["pinsker_gap_bound"] = pinsker_value_gap_bound(file.tabular.H, kl);
                report["value_gap"] = policy_evaluation(file.tabular, expert).V(0, file.tabular.s1) -
                                      policy_evaluation(file.tabular, pi).V(0, file.tabular.s1);
            }
            if (!report.empty()) std::cout << io::dump(report) << '\n';
        } else if (solve->parsed()) {
            const auto file = io::read_mdp(mdp_path);
            const TabularMdp& mdp = file.tabular;
            const auto [values, policy] =
                lambda > 0.0 ? regularized_value_iteration(mdp, load_ref(ref_path, mdp), lambda) : value_iteration(mdp);
            const int qd[] = {mdp.H, mdp.S, mdp.A}, vd[] = {mdp.H + 1, mdp.S};
            json j;
            j["lambda"] = lambda;
            j["value"] = values.V(0, mdp.s1);
            j["Q"] = io::tensor(values.q, qd);
            j["V"] = io::tensor(values.v, vd);
            j["policy"] = io::policy_to_json(policy);
            io::write_file(require_out(g, "solution.json"), io::dump(j) + '\n');
        } else if (bpi_tab->parsed()) {
            const auto file = io::read_mdp(mdp_path);
            const TabularMdp& mdp = file.tabular;
            const Policy ref = load_ref(ref_path, mdp);
            const fs::path out = require_out(g, "bpi_out");
            fs::create_directories(out);
            std::ofstream tel(out / "telemetry.csv", std::ios::binary);
            tel << "episode,G1,V_hat_gap,wallclock_ms\n";
            double optimum = 0.0;
            if (g.oracle) optimum = regularized_value_iteration(mdp, ref, lambda).first.V(0, mdp.s1);
            const auto start = std::chrono::steady_clock::now();
            UcbviOptions opts;
            opts.max_episodes = max_episodes;
            opts.record_trace = false;
            opts.observer = [&](const EpisodeView& view) {
                if (view.h_prime >= 0 && view.episode % every != 0 && view.episode != 1) return;
                std::string line = std::to_string(view.episode) + ',' +
                                   io::format_double(view.state.gap_at_start(mdp.s1)) + ',';
                if (g.oracle)
                    line += io::format_double(
                        optimum - policy_evaluation_regularized(mdp, view.state.bar_pi, ref, lambda).V(0, mdp.s1));
                line += ',';
                if (wallclock)
                    line += io::format_double(
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
                tel << line << '\n';
            };
            const TabularEnvironment env(mdp);
            const auto res = run_ucbvi_ent_plus(env, ref, lambda, eps, delta, g.seed, opts);
            io::write_file(out / "result.json", io::dump(io::bpi_result_to_json(res)) + '\n');
            io::write_file(out / "policy.json", io::dump(io::policy_to_json(res.policy)) + '\n');
            if (!res.stopped) {
                std::cerr << "warning: episode budget exhausted before the stopping rule fired\n";
            }
        } else if (bpi_lin->parsed()) {
            const auto file = io::read_mdp(mdp_path);
            if (!file.linear) throw ConfigError("bpi-linear needs a linear MDP file");
            const TabularMdp& mdp = file.tabular;
            const Policy ref = load_ref(ref_path, mdp);
            const fs::path out = require_out(g, "lsvi_out");
            LsviOptions opts;
            if (g.oracle) opts.oracle = &mdp;
            const TabularEnvironment env(mdp);
            const auto res = run_lsvi_ent(env, file.linear->features, ref, lambda, T, delta, g.seed, opts);
            std::string text = "episode";
            for (int h = 1; h <= mdp.H; ++h) text += ",logdet_h" + std::to_string(h);
            text += ",suboptimality\n";
            for (const auto& row : res.telemetry) {
                text += std::to_string(row.episode);
                for (double x : row.log_det) text += ',' + io::format_double(x);
                text += ',' + (std::isnan(row.suboptimality) ? std::string() : io::format_double(row.suboptimality));
                text += '\n';
            }
            io::write_file(out / "telemetry.csv", text);
            io::write_file(out / "mixture.json", io::dump(io::mixture_to_json(res.mixture)) + '\n');
        } else if (rlhf->parsed()) {
            const auto file = io::read_mdp(mdp_path);
            const TabularMdp& mdp = file.tabular;
            const auto demos = load_demos(demos_path, mdp);
            const RewardFreeEnvironment env(mdp);
            const PreferenceOracle prefs(mdp.S, mdp.A, mdp.H, mdp.r, LinkFunction::sigmoid(mdp.H));
            RlhfConfig cfg;
            cfg.base.eps = eps;
            cfg.base.delta = delta;
            cfg.base.mode = parse_mode(mode);
            cfg.base.max_episodes = max_episodes;
            cfg.base.lsvi_episodes = T;
            cfg.base.diagnostic = g.oracle;
            cfg.base.bc.seed = derive_seed(g.seed, "bc");
            if (cfg.base.mode == PipelineMode::linear) {
                if (!file.linear) throw ConfigError("linear mode needs a linear MDP file");
                cfg.base.features = &file.linear->features;
            }
            cfg.n_rm = n_rm;
            Policy expert;
            PipelineOracle oracle;
            if (g.oracle) {
                expert = load_expert(expert_path, file, lambda_expert);
                oracle = {&mdp, &expert};
            }
            const auto res = demonstration_regularized_rlhf(env, demos, prefs, cfg, g.seed, oracle);
            const fs::path out = require_out(g, "rlhf_out");
            io::write_file(out / "policy.json", io::dump(io::mixture_to_json(res.policy)) + '\n');
            if (res.reward_fit)
                io::write_file(out / "reward_model.json", io::dump(io::reward_model_to_json(res.reward_fit->model)) + '\n');
            json manifest;
            manifest["mdp"] = mdp_path;
            manifest["mdp_hash"] = content_hash(io::dump(io::mdp_to_json(mdp)));
            manifest["demos"] = demos_path;
            manifest["n_exp"] = demos.size();
            manifest["n_rm"] = n_rm;
            manifest["eps"] = eps;
            manifest["delta"] = delta;
            manifest["mode"] = mode;
            manifest["seed"] = g.seed;
            manifest["derived_seeds"] = {{"preferences", derive_seed(g.seed, "preferences")},
                                         {"bpi", derive_seed(g.seed, "bpi")}};
            manifest["episodes"] = res.episodes;
            manifest["stopped"] = res.stopped;
            manifest["budgets"] = budgets_json(res.budgets);
            if (res.diagnostics) manifest["diagnostics"] = diagnostics_json(*res.diagnostics);
            io::write_file(out / "manifest.json", io::dump(manifest) + '\n');
        } else if (run->parsed()) {
            auto cfg = experiment_config_from_json(io::parse_file(config_path));
            if (g.oracle) cfg.oracle_diagnostics = true;
            run_sweep(cfg, require_out(g, "results"));
        } else if (summary->parsed()) {
            const auto rows = read_results(results_path);
            write_summary(require_out(g, "summary.csv"), scaling_summary(rows, 1000, g.seed));
        }
    } catch (const PipelineError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.config_error() ? 2 : 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
