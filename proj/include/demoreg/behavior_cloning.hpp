#pragma once

#include "demoreg/linear_mdp.hpp"
#include "demoreg/rng.hpp"
#include "demoreg/types.hpp"

#include <cstdint>
#include <vector>

namespace demoreg {

class TransitionSampler;

/// Reward-free expert trajectories sharing one horizon.
class DemonstrationSet {
public:
    DemonstrationSet(int S, int A, int H) : S_(S), A_(A), H_(H) {}
    DemonstrationSet(int S, int A, int H, std::vector<Trajectory> trajectories);

    void add(Trajectory tau);

    int S() const noexcept { return S_; }
    int A() const noexcept { return A_; }
    int H() const noexcept { return H_; }
    std::size_t size() const noexcept { return trajectories_.size(); }
    bool empty() const noexcept { return trajectories_.empty(); }
    const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }

    /// N_h(s, a), [h][s][a]; computed on first use.
    const std::vector<std::int64_t>& counts() const;
    std::int64_t count(int h, int s, int a) const {
        return counts()[(static_cast<std::size_t>(h) * S_ + s) * A_ + a];
    }
    std::int64_t count(int h, int s) const;

private:
    int S_, A_, H_;
    std::vector<Trajectory> trajectories_;
    mutable std::vector<std::int64_t> counts_;
};

/// N i.i.d. reward-free trajectories of `expert`.
DemonstrationSet collect_demonstrations(const TransitionSampler& env, const Policy& expert,
                                        std::size_t n, std::uint64_t seed);

/// pi_h(a|s) = (N_h(s,a) + 1) / (N_h(s) + A).
Policy bc_tabular(const DemonstrationSet& demos);

/// (1 - kappa) pi + kappa / A. Throws DomainError unless 0 <= kappa <= 1.
Policy kappa_smooth(const Policy& policy, double kappa);

struct GradientDescentConfig {
    double step_size = 0.1; ///< step at iteration k is step_size / sqrt(k)
    int max_iters = 10'000;
    double tolerance = 1e-8; ///< on the accepted objective decrease
    int restarts = 5;
};

struct BcConfig {
    double kappa = -1.0; ///< negative selects A / (N + A)
    double R = 1.0;
    GradientDescentConfig gd;
    std::uint64_t seed = 0;
};

struct LinearBcResult {
    Policy policy;
    std::vector<std::vector<double>> weights; ///< [h][i]
    std::vector<double> objective;            ///< final per-step negative log-likelihood
    double kappa = 0.0;
    /// Per-step objective after every accepted iterate of the best restart.
    std::vector<std::vector<double>> objective_trace;
};

/// Mean negative log-likelihood at step h of the kappa-mixed softmax-linear
/// policy with weights w. Returns 0 when no demonstration reaches step h.
double bc_linear_objective(const DemonstrationSet& demos, const FeatureMap& features, int h,
                           std::span<const double> w, double kappa);

/// Projected gradient descent on the ball ||w_h|| <= R, independently per step.
LinearBcResult bc_linear(const DemonstrationSet& demos, const FeatureMap& features,
                         const BcConfig& cfg);

/// H * sqrt(kl / 2); infinity passes through.
double pinsker_value_gap_bound(int H, double kl);

/// High-probability bound on KL_traj(expert || bc_tabular) for N >= A:
///   6 S A H log(2 e^4 N) log(12 H N^2 / delta) / N + 18 A H / N,
/// capped by H log(N + A), which holds for any expert since bc_tabular
/// entries are at least 1 / (N + A).
double bc_tabular_kl_bound(int S, int A, int H, std::size_t N, double delta);

/// Same for the kappa-mixed softmax-linear class:
///   8 d H log(2 e^3 A N) (log(48 N^2 R) + log(H / delta)) / N + 18 A H / N,
/// with the same H log(N + A) cap (entries are at least kappa / A = 1 / (N + A)).
double bc_linear_kl_bound(int d, int A, int H, std::size_t N, double R, double delta);

} // namespace demoreg
