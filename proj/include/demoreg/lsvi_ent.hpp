#pragma once

#include "demoreg/environment.hpp"
#include "demoreg/linear_mdp.hpp"
#include "demoreg/planning.hpp"
#include "demoreg/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace demoreg {

/// beta_cnt(delta, t) = 4 log(8 e H (2t + 1) / delta) + 4 d log(3t) + 3.
double lsvi_beta_cnt(int d, int H, double delta, double t);

struct LsviConstants {
    double alpha = 1.0;       ///< 2 (beta_cnt(delta, T) + 1)
    double bonus_scale = 1.0; ///< 32 d H sqrt(log(24 e d H T / delta))
};

/// Throws ConfigError unless d, H, T >= 1 and delta in (0, 1).
LsviConstants lsvi_constants(int d, int H, std::int64_t T, double delta);

/// Ridge statistics and the latest optimistic/pessimistic tables.
///
/// Samples are kept as sufficient statistics: the regression target at step h
/// is r + V_{h+1}(s'), so sum_tau phi_tau (r_tau + V(s'_tau)) equals
/// phi_r[h] + next_phi[h] * V for the finite next-state set.
struct LsviState {
    int S = 0;
    int A = 0;
    int H = 0;
    int d = 0;
    double alpha = 1.0;
    double bonus_scale = 1.0;
    std::int64_t samples = 0; ///< episodes added so far

    std::vector<Eigen::MatrixXd> gram;     ///< Lambda_h = alpha I + sum phi phi^T
    std::vector<Eigen::VectorXd> phi_r;    ///< sum phi r
    std::vector<Eigen::MatrixXd> next_phi; ///< d x S, column s' sums phi over transitions into s'
    std::vector<Eigen::VectorXd> uw, lw;   ///< latest regression weights

    std::vector<double> uQ, lQ; ///< [h][s][a]
    std::vector<double> uV, lV; ///< [h][s], h = 0..H
    std::vector<double> bonus;  ///< [h][s][a]
    Policy bar_pi;

    LsviState() = default;
    LsviState(int states, int actions, int horizon, int dim, const LsviConstants& constants);

    std::size_t cell(int h, int s, int a) const noexcept {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    std::size_t state_cell(int h, int s) const noexcept { return static_cast<std::size_t>(h) * S + s; }
    double width(int h, int s, int a) const noexcept { return uQ[cell(h, s, a)] - lQ[cell(h, s, a)]; }
    int widest_action(int h, int s) const noexcept;

    /// Adds one (phi(s, a), r, s') triple at step h with the given weight.
    /// s_next < 0 marks a terminal transition (target without a next value).
    void add(const FeatureMap& features, int h, int s, int a, double r, int s_next,
             double weight = 1.0);

    double log_det_gram(int h) const;
};

/// Backward ridge pass: weights, Q bounds with +-bonus_multiplier * B sqrt(phi^T Lambda^{-1} phi),
/// V bounds clipped to [0, H], and bar_pi from the optimistic soft maximiser.
void lsvi_backup(LsviState& state, const Policy& ref, double lambda, const FeatureMap& features,
                 double bonus_multiplier = 1.0);

struct LsviTelemetryRow {
    std::int64_t episode = 0;
    std::vector<double> log_det; ///< per step
    double suboptimality = 0.0;  ///< of the running mixture; NaN without an oracle
};

struct LsviEpisodeView {
    std::int64_t episode = 0; ///< 1-based
    int h_prime = 0;          ///< 0-based exploratory step
    const LsviState& state;
};

struct LsviOptions {
    /// First admissible exploratory index; h' ~ Unif{first..H}, where h' = 0
    /// leaves bar_pi unchanged and h' >= 1 perturbs step h' - 1.
    int h_prime_first = 1;
    double bonus_multiplier = 1.0;
    bool record_telemetry = true;
    /// Known model for the suboptimality column; never read by the learner.
    const TabularMdp* oracle = nullptr;
    std::function<void(const LsviEpisodeView&)> observer;
};

struct LsviResult {
    MixturePolicy mixture;
    std::vector<LsviTelemetryRow> telemetry;
    LsviConstants constants;
    double max_weight_ratio = 0.0; ///< max over episodes of ||w|| / (2H sqrt(d t / alpha))
};

/// Fixed-budget regularised BPI with linear function approximation.
/// Runs T episodes and returns the uniform mixture of the optimistic policies.
LsviResult run_lsvi_ent(const Environment& env, const FeatureMap& features, const Policy& ref,
                        double lambda, std::int64_t T, double delta, std::uint64_t seed,
                        const LsviOptions& options = {});

} // namespace demoreg
