#pragma once

#include "demoreg/environment.hpp"
#include "demoreg/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace demoreg {

/// Confidence-level functions of the tabular concentration events:
///   beta_kl(n) = log(2SAH/delta) + S log(e(1+n)),  beta_cnt = log(2SAH/delta).
struct ConfidenceParams {
    int S = 0;
    int A = 0;
    int H = 0;
    double delta = 0.1;
    /// Scales both transition and gap bonuses. 1 is the calibrated choice;
    /// 0 turns the backups into plain (regularised) planning on p_hat.
    double bonus_multiplier = 1.0;

    double beta_kl(std::int64_t n) const;
    double beta_cnt() const;
};

/// sqrt(2 H^2 beta / n); +infinity for n == 0, which clips uQ to H and lQ to 0.
double hoeffding_bonus(std::int64_t n, int H, double beta);

/// min(5 H^2 beta / n, H); H for n == 0.
double gap_bonus(std::int64_t n, int H, double beta);

/// Visit counts and empirical kernel. Rows of p_hat with n == 0 are uniform 1/S.
struct CountTables {
    int S = 0;
    int A = 0;
    int H = 0;
    std::vector<std::int64_t> n;      ///< [h][s][a]
    std::vector<std::int64_t> n_next; ///< [h][s][a][s']
    std::vector<double> p_hat;        ///< [h][s][a][s']

    CountTables() = default;
    CountTables(int states, int actions, int horizon);

    /// Pretends every cell was visited `visits` times with p_hat equal to the true kernel.
    static CountTables exact(const TabularMdp& mdp, std::int64_t visits);

    std::size_t cell(int h, int s, int a) const noexcept {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    std::int64_t visits(int h, int s, int a) const noexcept { return n[cell(h, s, a)]; }
    std::span<const double> kernel(int h, int s, int a) const noexcept {
        return {p_hat.data() + cell(h, s, a) * S, static_cast<std::size_t>(S)};
    }
    void add(int h, int s, int a, int s_next);
};

/// Upper/lower confidence bounds on the optimal regularised values, the
/// optimistic policy, and the gap recursion tables.
struct ConfidenceState {
    int S = 0;
    int A = 0;
    int H = 0;
    std::vector<double> uQ, lQ; ///< [h][s][a] in [0, H]
    std::vector<double> uV, lV; ///< [h][s], h = 0..H
    std::vector<double> bp;     ///< transition bonus [h][s][a]
    std::vector<double> W;      ///< [h][s][a]
    std::vector<double> G;      ///< [h][s], h = 0..H
    Policy bar_pi;

    ConfidenceState() = default;
    ConfidenceState(int states, int actions, int horizon);

    std::size_t cell(int h, int s, int a) const noexcept {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    std::size_t state_cell(int h, int s) const noexcept { return static_cast<std::size_t>(h) * S + s; }
    double width(int h, int s, int a) const noexcept { return uQ[cell(h, s, a)] - lQ[cell(h, s, a)]; }
    /// argmax_a (uQ - lQ)(h, s, a), ties to the lowest index.
    int widest_action(int h, int s) const noexcept;
    double gap_at_start(int s1) const noexcept { return G[state_cell(0, s1)]; }
};

/// Optimistic and pessimistic regularised backups. `rewards` is [h][s][a];
/// entries of unvisited cells are never read.
ConfidenceState optimistic_backup(const CountTables& counts, std::span<const double> rewards,
                                  const Policy& ref, double lambda, const ConfidenceParams& params);

/// In-place variant reusing the buffers of `state`.
void optimistic_backup_into(ConfidenceState& state, const CountTables& counts,
                            std::span<const double> rewards, const Policy& ref, double lambda,
                            const ConfidenceParams& params);

/// Fills W and G from G_{H} = 0 backwards; requires uQ, lQ, bar_pi of the same episode.
void gap_backup(ConfidenceState& state, const CountTables& counts, const ConfidenceParams& params,
                double lambda);

/// bar_pi everywhere except step h_prime (1-based; 0 means no change), where
/// it plays the widest-interval action.
Policy exploratory_policy(const ConfidenceState& state, int h_prime);

struct EpisodeView {
    std::int64_t episode = 0; ///< 1-based iteration index
    int h_prime = -1;         ///< exploratory step drawn for this episode, -1 when stopping
    const ConfidenceState& state;
    const CountTables& counts;
};

struct UcbviOptions {
    std::int64_t max_episodes = 1'000'000;
    bool record_trace = true;
    double bonus_multiplier = 1.0;
    /// Called once per iteration after the backups and the stopping check.
    std::function<void(const EpisodeView&)> observer;
};

struct BpiResult {
    Policy policy;
    std::int64_t episodes = 0; ///< stopping index (1-based); samples + 1 when stopped
    std::int64_t samples = 0;  ///< trajectories drawn
    std::vector<double> gap_trace;
    bool stopped = false;
    double final_gap = 0.0;
};

/// Adaptive regularised best-policy identification.
BpiResult run_ucbvi_ent_plus(const Environment& env, const Policy& ref, double lambda,
                             double epsilon, double delta, std::uint64_t seed,
                             const UcbviOptions& options = {});

} // namespace demoreg
