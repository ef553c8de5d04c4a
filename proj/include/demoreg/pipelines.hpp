#pragma once

#include "demoreg/behavior_cloning.hpp"
#include "demoreg/environment.hpp"
#include "demoreg/lsvi_ent.hpp"
#include "demoreg/planning.hpp"
#include "demoreg/preference.hpp"
#include "demoreg/ucbvi_ent.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace demoreg {

/// A stage failure. `config` is set when the cause was invalid input.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what, bool config)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), config_(config) {}
    const std::string& stage() const noexcept { return stage_; }
    bool config_error() const noexcept { return config_; }

private:
    std::string stage_;
    bool config_;
};

/// lambda = eps_rl / eps_kl_sq, raised to floor_H when given.
/// eps_kl_sq == 0 returns +infinity: the cloned policy is already exact and
/// the pipelines return it without exploring. Negative inputs throw DomainError.
double select_lambda(double eps_rl, double eps_kl_sq, std::optional<int> floor_H = std::nullopt);

enum class PipelineMode { tabular, linear };

struct PipelineBudgets {
    double eps_exp = 0.0;   ///< NaN unless measured
    double eps_kl_sq = 0.0; ///< bound or measured KL, may be +inf
    double eps_rl = 0.0;
    double eps_rm_sq = 0.0; ///< NaN unless measured (RLHF only)
    double lambda = 0.0;
    std::size_t n_exp = 0;
    std::size_t n_rm = 0;
    double delta = 0.0;
    std::vector<double> delta_split; ///< per stage, sums to delta
    bool kl_measured = false;
};

/// Ground truth for oracle-diagnostic mode; never passed to the learners.
struct PipelineOracle {
    const TabularMdp* mdp = nullptr; ///< with true rewards
    const Policy* expert = nullptr;
};

struct PipelineConfig {
    double eps = 0.5;
    double delta = 0.1;
    PipelineMode mode = PipelineMode::tabular;
    double c_kl = 1.0;             ///< multiplier on the theoretical KL bound
    bool diagnostic = false;       ///< substitute the exact KL for the bound
    std::int64_t max_episodes = 10'000'000;
    std::int64_t lsvi_episodes = 1000; ///< fixed budget in linear mode
    const FeatureMap* features = nullptr; ///< required in linear mode
    BcConfig bc;                   ///< linear behaviour cloning
};

struct DiagnosticReport {
    double v_star = 0.0;          ///< optimal unregularised value at s1
    double v_policy = 0.0;        ///< value of the returned policy
    double suboptimality = 0.0;
    double eps_exp = 0.0;         ///< V* - V^expert
    double kl = 0.0;              ///< KL_traj(expert || bc)
    double eps_rl_realized = 0.0; ///< regularised suboptimality against pi^BC
    double eps_rm_sq = 0.0;       ///< RLHF only
    double composite_bound = 0.0;
    bool bound_holds = true;
};

struct PipelineResult {
    MixturePolicy policy; ///< one component in tabular mode
    Policy bc_policy;
    PipelineBudgets budgets;
    std::int64_t episodes = 0; ///< stopping index, 0 if BPI was skipped
    bool stopped = true;
    std::optional<MleResult> reward_fit;
    std::optional<DiagnosticReport> diagnostics;
    std::vector<double> reward_used; ///< RLHF: clipped r_hat [h][s][a]
};

/// Behaviour cloning followed by regularised BPI toward the cloned policy.
/// eps_rl = eps / 4 and (delta / 2, delta / 2) for the two stages.
PipelineResult demonstration_regularized_rl(const Environment& env, const DemonstrationSet& demos,
                                            const PipelineConfig& cfg, std::uint64_t seed,
                                            const PipelineOracle& oracle = {});

struct RlhfConfig {
    PipelineConfig base;
    std::size_t n_rm = 10'000;
    MleConfig mle;
    std::size_t n_mc = 100'000;                     ///< samples for the diagnostic reward variance
    const std::vector<double>* reward_override = nullptr; ///< debug: skip the MLE
};

/// Behaviour cloning, preference collection under pi^BC, reward MLE, then
/// regularised BPI on r_hat clipped to [0,1]. eps_rl = eps / 15, delta / 3 per
/// stage, lambda at least H. The learner sees transitions and preference bits only.
PipelineResult demonstration_regularized_rlhf(const TransitionSampler& env,
                                              const DemonstrationSet& demos,
                                              const PreferenceOracle& preferences,
                                              const RlhfConfig& cfg, std::uint64_t seed,
                                              const PipelineOracle& oracle = {});

} // namespace demoreg
