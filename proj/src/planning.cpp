#include "demoreg/planning.hpp"

#include <algorithm>
#include <cmath>

namespace demoreg {

namespace {

void require_match(const TabularMdp& mdp, const Policy& pi, const char* what) {
    if (!pi.matches(mdp))
        throw ConfigError(std::string(what) + " dimensions do not match the MDP");
}

void require_positive_ref(const Policy& ref) {
    for (double x : ref.prob)
        if (!(x > 0.0)) throw DomainError("reference policy must be strictly positive");
}

double expected_next(const TabularMdp& mdp, const ValueTable& vt, int h, int s, int a) {
    const auto row = mdp.next(h, s, a);
    double acc = 0.0;
    for (int sp = 0; sp < mdp.S; ++sp) acc += row[sp] * vt.V(h + 1, sp);
    return acc;
}

} // namespace

double log_sum_exp_max_into(std::span<const double> x, std::span<const double> ref, double lambda,
                            std::span<double> out) noexcept {
    const std::size_t n = x.size();
    double shift = -kInfinity;
    for (std::size_t a = 0; a < n; ++a) {
        out[a] = x[a] / lambda + std::log(ref[a]);
        shift = std::max(shift, out[a]);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        out[a] = std::exp(out[a] - shift);
        total += out[a];
    }
    for (std::size_t a = 0; a < n; ++a) out[a] /= total;
    return lambda * (shift + std::log(total));
}

SoftMax log_sum_exp_max(std::span<const double> x, std::span<const double> ref, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (x.size() != ref.size() || x.empty()) throw ConfigError("x and ref must have equal nonzero size");
    for (double q : ref)
        if (!(q > 0.0)) throw DomainError("reference distribution must be strictly positive");
    SoftMax out;
    out.policy.resize(x.size());
    out.value = log_sum_exp_max_into(x, ref, lambda, out.policy);
    return out;
}

std::pair<ValueTable, Policy> regularized_value_iteration(const TabularMdp& mdp, const Policy& ref,
                                                          double lambda) {
    require_match(mdp, ref, "reference policy");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    require_positive_ref(ref);

    ValueTable vt(mdp.H, mdp.S, mdp.A);
    Policy pi(mdp.H, mdp.S, mdp.A);
    for (int h = mdp.H - 1; h >= 0; --h)
        for (int s = 0; s < mdp.S; ++s) {
            for (int a = 0; a < mdp.A; ++a)
                vt.Q(h, s, a) = mdp.reward(h, s, a) + expected_next(mdp, vt, h, s, a);
            vt.V(h, s) = log_sum_exp_max_into(vt.q_row(h, s), ref.row(h, s), lambda, pi.row(h, s));
        }
    return {std::move(vt), std::move(pi)};
}

std::pair<ValueTable, Policy> value_iteration(const TabularMdp& mdp) {
    ValueTable vt(mdp.H, mdp.S, mdp.A);
    Policy pi(mdp.H, mdp.S, mdp.A);
    for (int h = mdp.H - 1; h >= 0; --h)
        for (int s = 0; s < mdp.S; ++s) {
            int best = 0;
            for (int a = 0; a < mdp.A; ++a) {
                vt.Q(h, s, a) = mdp.reward(h, s, a) + expected_next(mdp, vt, h, s, a);
                if (vt.Q(h, s, a) > vt.Q(h, s, best)) best = a;
            }
            vt.V(h, s) = vt.Q(h, s, best);
            pi(h, s, best) = 1.0;
        }
    return {std::move(vt), std::move(pi)};
}

ValueTable policy_evaluation_regularized(const TabularMdp& mdp, const Policy& policy,
                                         const Policy& ref, double lambda) {
    require_match(mdp, policy, "policy");
    if (lambda < 0.0) throw DomainError("lambda must be nonnegative");
    if (lambda > 0.0) require_match(mdp, ref, "reference policy");

    ValueTable vt(mdp.H, mdp.S, mdp.A);
    for (int h = mdp.H - 1; h >= 0; --h)
        for (int s = 0; s < mdp.S; ++s) {
            double v = 0.0;
            for (int a = 0; a < mdp.A; ++a) {
                vt.Q(h, s, a) = mdp.reward(h, s, a) + expected_next(mdp, vt, h, s, a);
                v += policy(h, s, a) * vt.Q(h, s, a);
            }
            if (lambda > 0.0) {
                const double kl = kl_divergence(policy.row(h, s), ref.row(h, s));
                if (!std::isfinite(kl))
                    throw DomainError("policy puts mass where the reference policy is zero");
                v -= lambda * kl;
            }
            vt.V(h, s) = v;
        }
    return vt;
}

ValueTable policy_evaluation(const TabularMdp& mdp, const Policy& policy) {
    return policy_evaluation_regularized(mdp, policy, policy, 0.0);
}

OccupancyTable occupancy_measure(const TabularMdp& mdp, const Policy& policy) {
    require_match(mdp, policy, "policy");
    OccupancyTable occ{mdp.H, mdp.S, mdp.A,
                       std::vector<double>(static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A, 0.0)};
    std::vector<double> state_prob(mdp.S, 0.0);
    std::vector<double> next_prob(mdp.S, 0.0);
    state_prob[mdp.s1] = 1.0;
    for (int h = 0; h < mdp.H; ++h) {
        std::fill(next_prob.begin(), next_prob.end(), 0.0);
        for (int s = 0; s < mdp.S; ++s) {
            if (state_prob[s] == 0.0) continue;
            for (int a = 0; a < mdp.A; ++a) {
                const double mass = state_prob[s] * policy(h, s, a);
                occ.d[(static_cast<std::size_t>(h) * mdp.S + s) * mdp.A + a] = mass;
                if (mass == 0.0) continue;
                const auto row = mdp.next(h, s, a);
                for (int sp = 0; sp < mdp.S; ++sp) next_prob[sp] += mass * row[sp];
            }
        }
        state_prob.swap(next_prob);
    }
    return occ;
}

double kl_trajectory(const TabularMdp& mdp, const Policy& pi, const Policy& pi_prime) {
    require_match(mdp, pi_prime, "policy");
    const OccupancyTable occ = occupancy_measure(mdp, pi);
    double total = 0.0;
    for (int h = 0; h < mdp.H; ++h)
        for (int s = 0; s < mdp.S; ++s) {
            const double ds = occ.state(h, s);
            if (ds <= 0.0) continue;
            const double kl = kl_divergence(pi.row(h, s), pi_prime.row(h, s));
            if (!std::isfinite(kl)) return kInfinity;
            total += ds * kl;
        }
    return total;
}

double mixture_value_regularized(const TabularMdp& mdp, const MixturePolicy& mix, const Policy& ref,
                                 double lambda) {
    if (mix.components.empty()) throw ConfigError("empty mixture");
    double total = 0.0;
    for (const auto& component : mix.components)
        total += policy_evaluation_regularized(mdp, component, ref, lambda).V(0, mdp.s1);
    return total / static_cast<double>(mix.components.size());
}

} // namespace demoreg
