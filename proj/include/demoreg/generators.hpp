#pragma once

#include "demoreg/linear_mdp.hpp"
#include "demoreg/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace demoreg {

/// Dirichlet(1,...,1) transitions, Uniform[0,1] rewards zeroed with
/// probability `reward_sparsity`. Initial state 0.
TabularMdp generate_random_tabular(int S, int A, int H, std::uint64_t seed,
                                   double reward_sparsity = 0.0);

/// Features drawn from Dirichlet(1) on the d-simplex, measures mu_h[i] from
/// Dirichlet(1) over states, theta_h uniform on [0,1]^d.
LinearMdp generate_random_linear(int S, int A, int H, int d, std::uint64_t seed);

/// One-hot embedding (d = S*A) that reproduces `mdp` exactly.
LinearMdp linear_from_tabular(const TabularMdp& mdp);

struct RiverSwimParams {
    double p_right = 0.6;   ///< interior: move right
    double p_left = 0.05;   ///< interior: slip left when swimming right
    double left_reward = 0.05;
    double right_reward = 1.0;
};

/// River-swim chain: action 0 drifts left deterministically (small reward at
/// the left bank), action 1 swims right stochastically (large reward at the
/// right bank). Extra actions, if any, behave like action 0.
TabularMdp generate_river_swim(int S, int H, const RiverSwimParams& params = {}, int A = 2);

/// Deterministic chain: action 0 advances, every other action resets to
/// state 0. Reward 1 for advancing from the last state.
TabularMdp generate_chain(int S, int A, int H);

struct Expert {
    Policy policy;
    double eps_exp_bound = 0.0; ///< lambda_expert * H * log A
};

/// Entropy-regularised optimal policy (reference = uniform).
Expert generate_expert(const TabularMdp& mdp, double lambda_expert);

/// Softmax-linear weights of the entropy-regularised optimal policy of a
/// linear MDP: pi_h(a|s) proportional to exp(<phi(s,a), w_h>) with
/// w_h = (theta_h + sum_s' mu_h(s') V*_{h+1}(s')) / lambda.
std::vector<std::vector<double>> linear_expert_weights(const LinearMdp& mdp, double lambda_expert);

/// Policy induced by per-step softmax-linear weights with kappa-mixing.
Policy softmax_linear_policy(const FeatureMap& features, int H,
                             const std::vector<std::vector<double>>& weights, double kappa = 0.0);

} // namespace demoreg
