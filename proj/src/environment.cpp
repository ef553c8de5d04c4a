#include "demoreg/environment.hpp"

namespace demoreg {

RewardOverlayEnvironment::RewardOverlayEnvironment(const TransitionSampler& transitions,
                                                   std::vector<double> rewards)
    : base_(transitions), rewards_(std::move(rewards)) {
    const auto expected = static_cast<std::size_t>(base_.horizon()) * base_.num_states() *
                          base_.num_actions();
    if (rewards_.size() != expected) throw ConfigError("reward overlay has wrong size");
}

Trajectory sample_trajectory(const TransitionSampler& env, const Policy& policy, Rng& rng,
                             bool with_rewards) {
    if (policy.H != env.horizon() || policy.S != env.num_states() || policy.A != env.num_actions())
        throw ConfigError("policy dimensions do not match the environment");
    const auto* rewarded = with_rewards ? dynamic_cast<const Environment*>(&env) : nullptr;
    if (with_rewards && rewarded == nullptr)
        throw ConfigError("rewards requested from a reward-free environment");

    Trajectory tau;
    tau.steps.reserve(env.horizon());
    if (rewarded) tau.rewards.emplace().reserve(env.horizon());
    int s = env.initial_state();
    for (int h = 0; h < env.horizon(); ++h) {
        const int a = rng.categorical(policy.row(h, s));
        tau.steps.push_back({s, a});
        if (rewarded) tau.rewards->push_back(rewarded->observe_reward(h, s, a));
        if (h + 1 < env.horizon()) s = env.sample_next(h, s, a, rng);
    }
    return tau;
}

Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy, std::uint64_t seed,
                             bool with_rewards) {
    Rng rng(seed);
    const TabularEnvironment env(mdp);
    return sample_trajectory(env, policy, rng, with_rewards);
}

void validate_trajectory(const Trajectory& tau, int S, int A, int H) {
    if (tau.length() != H) throw ConfigError("trajectory length differs from the horizon");
    for (const auto& step : tau.steps)
        if (step.s < 0 || step.s >= S || step.a < 0 || step.a >= A)
            throw ConfigError("trajectory state/action index out of range");
    if (tau.rewards && static_cast<int>(tau.rewards->size()) != H)
        throw ConfigError("trajectory reward sequence length differs from the horizon");
}

double trajectory_return(const Trajectory& tau, std::span<const double> rewards, int S, int A) {
    double total = 0.0;
    for (int h = 0; h < tau.length(); ++h) {
        const auto& st = tau.steps[h];
        total += rewards[(static_cast<std::size_t>(h) * S + st.s) * A + st.a];
    }
    return total;
}

} // namespace demoreg
