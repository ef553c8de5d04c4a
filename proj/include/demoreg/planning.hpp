#pragma once

#include "demoreg/types.hpp"

#include <span>
#include <utility>
#include <vector>

namespace demoreg {

struct SoftMax {
    double value = 0.0;
    std::vector<double> policy;
};

/// Convex conjugate of lambda * KL(. || ref):
///   value  = max_{pi in simplex} <pi, x> - lambda KL(pi || ref)
///          = lambda log sum_a ref(a) exp(x_a / lambda)
///   policy = pi(a) proportional to ref(a) exp(x_a / lambda)
/// Throws DomainError if lambda <= 0 or ref has a non-positive entry.
SoftMax log_sum_exp_max(std::span<const double> x, std::span<const double> ref, double lambda);

/// Same as log_sum_exp_max but writes the maximiser into `out` (size A) and
/// skips argument checks. Hot-loop variant for the learners.
double log_sum_exp_max_into(std::span<const double> x, std::span<const double> ref, double lambda,
                            std::span<double> out) noexcept;

/// Optimal values and policy of the MDP regularised toward `ref` with weight lambda > 0.
std::pair<ValueTable, Policy> regularized_value_iteration(const TabularMdp& mdp, const Policy& ref,
                                                          double lambda);

/// Unregularised optimal values and greedy policy (ties to the lowest action).
std::pair<ValueTable, Policy> value_iteration(const TabularMdp& mdp);

/// Values of `policy` in the MDP regularised toward `ref`; lambda == 0 gives
/// plain evaluation and ignores `ref`.
ValueTable policy_evaluation_regularized(const TabularMdp& mdp, const Policy& policy,
                                         const Policy& ref, double lambda);

/// Plain (unregularised) value of `policy`.
ValueTable policy_evaluation(const TabularMdp& mdp, const Policy& policy);

/// Exact forward visitation probabilities.
OccupancyTable occupancy_measure(const TabularMdp& mdp, const Policy& policy);

/// Trajectory KL: sum_h sum_s d^pi_h(s) KL(pi_h(s) || pi'_h(s)).
/// Returns +infinity when pi leaves the support of pi' at a visited state.
double kl_trajectory(const TabularMdp& mdp, const Policy& pi, const Policy& pi_prime);

/// Equal-weight mixture of Markov policies (executed by drawing one component
/// per episode).
struct MixturePolicy {
    std::vector<Policy> components;
};

/// Regularised value at s1 of a mixture: mean of the component values.
double mixture_value_regularized(const TabularMdp& mdp, const MixturePolicy& mix, const Policy& ref,
                                 double lambda);

} // namespace demoreg
