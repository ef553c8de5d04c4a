#include "demoreg/pipelines.hpp"

#include "demoreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace demoreg {

double select_lambda(double eps_rl, double eps_kl_sq, std::optional<int> floor_H) {
    if (!(eps_rl > 0.0)) throw DomainError("eps_rl must be positive");
    if (!(eps_kl_sq >= 0.0)) throw DomainError("eps_kl_sq must be nonnegative");
    if (eps_kl_sq == 0.0) return kInfinity;
    double lambda = eps_rl / eps_kl_sq;
    if (floor_H) lambda = std::max(lambda, static_cast<double>(*floor_H));
    return lambda;
}

namespace {

template <class F>
auto stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const PipelineError&) {
        throw;
    } catch (const ConfigError& e) {
        throw PipelineError(name, e.what(), true);
    } catch (const DomainError& e) {
        throw PipelineError(name, e.what(), true);
    } catch (const std::exception& e) {
        throw PipelineError(name, e.what(), false);
    }
}

void check_config(const PipelineConfig& cfg, const TransitionSampler& env, const DemonstrationSet& demos,
                  const PipelineOracle& oracle) {
    if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (!(cfg.c_kl > 0.0)) throw ConfigError("c_kl must be positive");
    if (demos.S() != env.num_states() || demos.A() != env.num_actions() || demos.H() != env.horizon())
        throw ConfigError("demonstrations do not match the environment");
    if (cfg.mode == PipelineMode::linear && !cfg.features)
        throw ConfigError("linear mode needs a feature map");
    if (cfg.diagnostic && (!oracle.mdp || !oracle.expert))
        throw ConfigError("diagnostic mode needs the true model and the expert");
}

Policy clone(const DemonstrationSet& demos, const PipelineConfig& cfg) {
    if (cfg.mode == PipelineMode::tabular) return bc_tabular(demos);
    return bc_linear(demos, *cfg.features, cfg.bc).policy;
}

/// Bound (times c_kl) or exact KL(expert || bc).
double kl_budget(const DemonstrationSet& demos, const Policy& bc, const PipelineConfig& cfg,
                 double delta_bc, const PipelineOracle& oracle, bool& measured) {
    measured = cfg.diagnostic;
    if (cfg.diagnostic) return kl_trajectory(*oracle.mdp, *oracle.expert, bc);
    const int S = demos.S(), A = demos.A(), H = demos.H();
    if (cfg.mode == PipelineMode::tabular) return cfg.c_kl * bc_tabular_kl_bound(S, A, H, demos.size(), delta_bc);
    return cfg.c_kl * bc_linear_kl_bound(cfg.features->d, A, H, demos.size(), cfg.bc.R, delta_bc);
}

struct BpiOutcome {
    MixturePolicy policy;
    std::int64_t episodes = 0;
    bool stopped = true;
};

BpiOutcome regularized_bpi(const Environment& env, const Policy& ref, double lambda, double eps_rl,
                           double delta_rl, const PipelineConfig& cfg, std::uint64_t seed) {
    BpiOutcome out;
    if (std::isinf(lambda)) {
        out.policy.components.push_back(ref);
        return out;
    }
    if (cfg.mode == PipelineMode::tabular) {
        UcbviOptions opts;
        opts.max_episodes = cfg.max_episodes;
        opts.record_trace = false;
        auto res = run_ucbvi_ent_plus(env, ref, lambda, eps_rl, delta_rl, seed, opts);
        out.policy.components.push_back(std::move(res.policy));
        out.episodes = res.episodes;
        out.stopped = res.stopped;
    } else {
        LsviOptions opts;
        opts.record_telemetry = false;
        auto res = run_lsvi_ent(env, *cfg.features, ref, lambda, cfg.lsvi_episodes, delta_rl, seed, opts);
        out.policy = std::move(res.mixture);
        out.episodes = cfg.lsvi_episodes;
    }
    return out;
}

double mean_value(const TabularMdp& mdp, const MixturePolicy& mix) {
    double total = 0.0;
    for (const auto& pi : mix.components) total += policy_evaluation(mdp, pi).V(0, mdp.s1);
    return total / static_cast<double>(mix.components.size());
}

/// Regularised suboptimality of the mixture against `ref` in `mdp`.
double regularized_gap(const TabularMdp& mdp, const MixturePolicy& mix, const Policy& ref, double lambda) {
    if (std::isinf(lambda)) return 0.0;
    const double best = regularized_value_iteration(mdp, ref, lambda).first.V(0, mdp.s1);
    return best - mixture_value_regularized(mdp, mix, ref, lambda);
}

double scaled_kl(double lambda, double kl) { return kl == 0.0 ? 0.0 : lambda * kl; }

} // namespace

PipelineResult demonstration_regularized_rl(const Environment& env, const DemonstrationSet& demos,
                                            const PipelineConfig& cfg, std::uint64_t seed,
                                            const PipelineOracle& oracle) {
    stage("config", [&] { check_config(cfg, env, demos, oracle); return 0; });
    PipelineResult result;
    auto& b = result.budgets;
    b.eps_rl = cfg.eps / 4.0;
    b.delta = cfg.delta;
    b.delta_split = {cfg.delta / 2.0, cfg.delta / 2.0};
    b.n_exp = demos.size();
    b.eps_exp = std::numeric_limits<double>::quiet_NaN();
    b.eps_rm_sq = std::numeric_limits<double>::quiet_NaN();

    result.bc_policy = stage("behavior_cloning", [&] { return clone(demos, cfg); });
    b.eps_kl_sq = stage("kl_budget", [&] {
        return kl_budget(demos, result.bc_policy, cfg, b.delta_split[0], oracle, b.kl_measured);
    });
    b.lambda = stage("select_lambda", [&] { return select_lambda(b.eps_rl, b.eps_kl_sq); });

    auto bpi = stage("regularized_bpi", [&] {
        return regularized_bpi(env, result.bc_policy, b.lambda, b.eps_rl, b.delta_split[1], cfg,
                               derive_seed(seed, "bpi"));
    });
    result.policy = std::move(bpi.policy);
    result.episodes = bpi.episodes;
    result.stopped = bpi.stopped;

    if (cfg.diagnostic) {
        stage("diagnostics", [&] {
            const TabularMdp& mdp = *oracle.mdp;
            DiagnosticReport rep;
            rep.v_star = value_iteration(mdp).first.V(0, mdp.s1);
            rep.v_policy = mean_value(mdp, result.policy);
            rep.suboptimality = rep.v_star - rep.v_policy;
            rep.eps_exp = rep.v_star - policy_evaluation(mdp, *oracle.expert).V(0, mdp.s1);
            rep.kl = b.eps_kl_sq;
            rep.eps_rl_realized = regularized_gap(mdp, result.policy, result.bc_policy, b.lambda);
            rep.eps_rm_sq = std::numeric_limits<double>::quiet_NaN();
            rep.composite_bound = rep.eps_exp + rep.eps_rl_realized + scaled_kl(b.lambda, rep.kl);
            rep.bound_holds = rep.suboptimality <= rep.composite_bound + 1e-9;
            b.eps_exp = rep.eps_exp;
            result.diagnostics = rep;
            return 0;
        });
    }
    return result;
}

PipelineResult demonstration_regularized_rlhf(const TransitionSampler& env,
                                              const DemonstrationSet& demos,
                                              const PreferenceOracle& preferences,
                                              const RlhfConfig& cfg, std::uint64_t seed,
                                              const PipelineOracle& oracle) {
    const PipelineConfig& base = cfg.base;
    stage("config", [&] {
        check_config(base, env, demos, oracle);
        if (cfg.reward_override &&
            cfg.reward_override->size() != static_cast<std::size_t>(env.horizon()) * env.num_states() * env.num_actions())
            throw ConfigError("reward override has wrong size");
        return 0;
    });
    const int S = env.num_states(), A = env.num_actions(), H = env.horizon();
    PipelineResult result;
    auto& b = result.budgets;
    b.eps_rl = base.eps / 15.0;
    b.delta = base.delta;
    b.delta_split = {base.delta / 3.0, base.delta / 3.0, base.delta / 3.0};
    b.n_exp = demos.size();
    b.n_rm = cfg.n_rm;
    b.eps_exp = std::numeric_limits<double>::quiet_NaN();
    b.eps_rm_sq = std::numeric_limits<double>::quiet_NaN();

    result.bc_policy = stage("behavior_cloning", [&] { return clone(demos, base); });
    b.eps_kl_sq = stage("kl_budget", [&] {
        return kl_budget(demos, result.bc_policy, base, b.delta_split[0], oracle, b.kl_measured);
    });
    b.lambda = stage("select_lambda", [&] { return select_lambda(b.eps_rl, b.eps_kl_sq, H); });

    std::vector<double> r_hat;
    if (cfg.reward_override) {
        r_hat = *cfg.reward_override;
    } else {
        const auto data = stage("collect_preferences", [&] {
            return collect_preferences(env, result.bc_policy, cfg.n_rm, preferences,
                                       derive_seed(seed, "preferences"), "bc");
        });
        result.reward_fit = stage("reward_mle", [&] {
            const RewardClass cls = base.mode == PipelineMode::tabular ? RewardClass::tabular(S, A, H)
                                                                       : RewardClass::linear(*base.features, H);
            return reward_mle(data, cls, preferences.link(), cfg.mle);
        });
        r_hat = result.reward_fit->model.cell_rewards();
    }
    for (double& x : r_hat) x = std::clamp(x, 0.0, 1.0);
    result.reward_used = r_hat;

    const RewardOverlayEnvironment learner_env(env, r_hat);
    auto bpi = stage("regularized_bpi", [&] {
        return regularized_bpi(learner_env, result.bc_policy, b.lambda, b.eps_rl, b.delta_split[2], base,
                               derive_seed(seed, "bpi"));
    });
    result.policy = std::move(bpi.policy);
    result.episodes = bpi.episodes;
    result.stopped = bpi.stopped;

    if (base.diagnostic) {
        stage("diagnostics", [&] {
            const TabularMdp& mdp = *oracle.mdp;
            TabularMdp fitted = mdp;
            fitted.r = r_hat;
            DiagnosticReport rep;
            rep.v_star = value_iteration(mdp).first.V(0, mdp.s1);
            rep.v_policy = mean_value(mdp, result.policy);
            rep.suboptimality = rep.v_star - rep.v_policy;
            rep.eps_exp = rep.v_star - policy_evaluation(mdp, *oracle.expert).V(0, mdp.s1);
            rep.kl = b.eps_kl_sq;
            rep.eps_rl_realized = regularized_gap(fitted, result.policy, result.bc_policy, b.lambda);
            rep.eps_rm_sq = reward_error_variance(r_hat, mdp.r, result.bc_policy, env, cfg.n_mc,
                                                  derive_seed(seed, "variance"))
                                .variance;
            rep.composite_bound = 3.0 * (rep.eps_exp + rep.eps_rl_realized) + 9.0 / H * rep.eps_rm_sq +
                                  scaled_kl(b.lambda + 4.0 * H, rep.kl);
            rep.bound_holds = rep.suboptimality <= rep.composite_bound + 1e-9;
            b.eps_exp = rep.eps_exp;
            b.eps_rm_sq = rep.eps_rm_sq;
            result.diagnostics = rep;
            return 0;
        });
    }
    return result;
}

} // namespace demoreg
