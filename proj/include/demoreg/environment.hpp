#pragma once

#include "demoreg/rng.hpp"
#include "demoreg/types.hpp"

#include <vector>

namespace demoreg {

/// Reward-free black-box access: the learner can only draw next states.
class TransitionSampler {
public:
    virtual ~TransitionSampler() = default;
    virtual int num_states() const = 0;
    virtual int num_actions() const = 0;
    virtual int horizon() const = 0;
    virtual int initial_state() const = 0;
    virtual int sample_next(int h, int s, int a, Rng& rng) const = 0;
};

/// Black-box access with rewards revealed for visited (h, s, a).
class Environment : public TransitionSampler {
public:
    virtual double observe_reward(int h, int s, int a) const = 0;
};

/// Simulator over a known tabular model.
class TabularEnvironment final : public Environment {
public:
    explicit TabularEnvironment(const TabularMdp& mdp) : mdp_(mdp) {}

    int num_states() const override { return mdp_.S; }
    int num_actions() const override { return mdp_.A; }
    int horizon() const override { return mdp_.H; }
    int initial_state() const override { return mdp_.s1; }
    int sample_next(int h, int s, int a, Rng& rng) const override {
        return rng.categorical(mdp_.next(h, s, a));
    }
    double observe_reward(int h, int s, int a) const override { return mdp_.reward(h, s, a); }

private:
    const TabularMdp& mdp_;
};

/// Transitions of a tabular model with its rewards withheld.
class RewardFreeEnvironment final : public TransitionSampler {
public:
    explicit RewardFreeEnvironment(const TabularMdp& mdp) : mdp_(mdp) {}

    int num_states() const override { return mdp_.S; }
    int num_actions() const override { return mdp_.A; }
    int horizon() const override { return mdp_.H; }
    int initial_state() const override { return mdp_.s1; }
    int sample_next(int h, int s, int a, Rng& rng) const override {
        return rng.categorical(mdp_.next(h, s, a));
    }

private:
    const TabularMdp& mdp_;
};

/// Attaches a learner-supplied reward table [h][s][a] to reward-free transitions.
class RewardOverlayEnvironment final : public Environment {
public:
    RewardOverlayEnvironment(const TransitionSampler& transitions, std::vector<double> rewards);

    int num_states() const override { return base_.num_states(); }
    int num_actions() const override { return base_.num_actions(); }
    int horizon() const override { return base_.horizon(); }
    int initial_state() const override { return base_.initial_state(); }
    int sample_next(int h, int s, int a, Rng& rng) const override {
        return base_.sample_next(h, s, a, rng);
    }
    double observe_reward(int h, int s, int a) const override {
        return rewards_[(static_cast<std::size_t>(h) * base_.num_states() + s) * base_.num_actions() + a];
    }

private:
    const TransitionSampler& base_;
    std::vector<double> rewards_;
};

/// One episode under `policy`. Rewards are recorded when `env` is an
/// Environment and `with_rewards` is set.
Trajectory sample_trajectory(const TransitionSampler& env, const Policy& policy, Rng& rng,
                             bool with_rewards = false);

/// Seeded convenience overload on a known model.
Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy, std::uint64_t seed,
                             bool with_rewards = false);

/// Throws ConfigError unless the trajectory has length H and indices in range.
void validate_trajectory(const Trajectory& tau, int S, int A, int H);

/// Sum of per-step rewards of a trajectory under a reward table [h][s][a].
double trajectory_return(const Trajectory& tau, std::span<const double> rewards, int S, int A);

} // namespace demoreg
