#include "demoreg/generators.hpp"

#include "demoreg/planning.hpp"
#include "demoreg/rng.hpp"

#include <algorithm>
#include <cmath>

namespace demoreg {

namespace {

void fill_dirichlet(Rng& rng, std::span<double> out) {
    double total = 0.0;
    for (double& x : out) {
        x = rng.exponential();
        total += x;
    }
    for (double& x : out) x /= total;
}

} // namespace

TabularMdp generate_random_tabular(int S, int A, int H, std::uint64_t seed, double reward_sparsity) {
    if (!(reward_sparsity >= 0.0 && reward_sparsity <= 1.0))
        throw ConfigError("reward_sparsity must lie in [0,1]");
    TabularMdp mdp(S, A, H, 0);
    Rng rng(seed);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                fill_dirichlet(rng, mdp.next(h, s, a));
                const double rew = rng.uniform();
                const bool zeroed = rng.uniform() < reward_sparsity;
                mdp.reward(h, s, a) = zeroed ? 0.0 : rew;
            }
    return mdp;
}

LinearMdp generate_random_linear(int S, int A, int H, int d, std::uint64_t seed) {
    if (S < 1 || A < 2 || H < 1 || d < 1) throw ConfigError("invalid linear MDP sizes");
    LinearMdp m;
    m.S = S;
    m.A = A;
    m.H = H;
    m.d = d;
    m.s1 = 0;
    m.features = {S, A, d, std::vector<double>(static_cast<std::size_t>(S) * A * d)};
    m.theta.resize(static_cast<std::size_t>(H) * d);
    m.mu.resize(static_cast<std::size_t>(H) * d * S);

    Rng rng(seed);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
            fill_dirichlet(rng, {m.features.phi.data() + (static_cast<std::size_t>(s) * A + a) * d,
                                 static_cast<std::size_t>(d)});
    for (int h = 0; h < H; ++h) {
        for (int i = 0; i < d; ++i) {
            m.theta[static_cast<std::size_t>(h) * d + i] = rng.uniform();
            fill_dirichlet(rng, {m.mu.data() + (static_cast<std::size_t>(h) * d + i) * S,
                                 static_cast<std::size_t>(S)});
        }
    }
    m.rebuild_latent();
    return m;
}

LinearMdp linear_from_tabular(const TabularMdp& mdp) {
    mdp.validate();
    LinearMdp m;
    m.S = mdp.S;
    m.A = mdp.A;
    m.H = mdp.H;
    m.d = mdp.S * mdp.A;
    m.s1 = mdp.s1;
    m.features = {m.S, m.A, m.d, std::vector<double>(static_cast<std::size_t>(m.S) * m.A * m.d, 0.0)};
    for (int s = 0; s < m.S; ++s)
        for (int a = 0; a < m.A; ++a) {
            const int i = s * m.A + a;
            m.features.phi[static_cast<std::size_t>(i) * m.d + i] = 1.0;
        }
    m.theta.assign(static_cast<std::size_t>(m.H) * m.d, 0.0);
    m.mu.assign(static_cast<std::size_t>(m.H) * m.d * m.S, 0.0);
    for (int h = 0; h < m.H; ++h)
        for (int s = 0; s < m.S; ++s)
            for (int a = 0; a < m.A; ++a) {
                const int i = s * m.A + a;
                m.theta[static_cast<std::size_t>(h) * m.d + i] = mdp.reward(h, s, a);
                const auto row = mdp.next(h, s, a);
                std::copy(row.begin(), row.end(),
                          m.mu.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(h) * m.d + i) * m.S));
            }
    m.rebuild_latent();
    return m;
}

TabularMdp generate_river_swim(int S, int H, const RiverSwimParams& params, int A) {
    if (S < 2) throw ConfigError("river swim needs at least two states");
    const double p_stay = 1.0 - params.p_right - params.p_left;
    if (params.p_right <= 0.0 || params.p_left < 0.0 || p_stay < 0.0)
        throw ConfigError("invalid river swim probabilities");
    TabularMdp mdp(S, A, H, 0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                auto row = mdp.next(h, s, a);
                if (a != 1) {
                    row[std::max(s - 1, 0)] = 1.0;
                    continue;
                }
                if (s == 0) {
                    row[1] = params.p_right;
                    row[0] = 1.0 - params.p_right;
                } else if (s == S - 1) {
                    row[s - 1] = params.p_left;
                    row[s] = 1.0 - params.p_left;
                } else {
                    row[s + 1] = params.p_right;
                    row[s] = p_stay;
                    row[s - 1] = params.p_left;
                }
            }
            if (s == 0) mdp.reward(h, 0, 0) = params.left_reward;
            if (s == S - 1) mdp.reward(h, s, 1) = params.right_reward;
        }
    return mdp;
}

TabularMdp generate_chain(int S, int A, int H) {
    TabularMdp mdp(S, A, H, 0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                auto row = mdp.next(h, s, a);
                if (a == 0) {
                    row[std::min(s + 1, S - 1)] = 1.0;
                    if (s == S - 1) mdp.reward(h, s, a) = 1.0;
                } else {
                    row[0] = 1.0;
                }
            }
    return mdp;
}

Expert generate_expert(const TabularMdp& mdp, double lambda_expert) {
    if (!(lambda_expert > 0.0)) throw DomainError("lambda_expert must be positive");
    auto [values, policy] =
        regularized_value_iteration(mdp, Policy::uniform(mdp.H, mdp.S, mdp.A), lambda_expert);
    return {std::move(policy), lambda_expert * mdp.H * std::log(static_cast<double>(mdp.A))};
}

std::vector<std::vector<double>> linear_expert_weights(const LinearMdp& mdp, double lambda_expert) {
    if (!(lambda_expert > 0.0)) throw DomainError("lambda_expert must be positive");
    const auto values =
        regularized_value_iteration(mdp.latent_tabular, Policy::uniform(mdp.H, mdp.S, mdp.A),
                                    lambda_expert)
            .first;
    std::vector<std::vector<double>> weights(mdp.H, std::vector<double>(mdp.d, 0.0));
    for (int h = 0; h < mdp.H; ++h)
        for (int i = 0; i < mdp.d; ++i) {
            double next = 0.0;
            const auto measure = mdp.mu_hi(h, i);
            for (int sp = 0; sp < mdp.S; ++sp) next += measure[sp] * values.V(h + 1, sp);
            weights[h][i] = (mdp.theta_h(h)[i] + next) / lambda_expert;
        }
    return weights;
}

Policy softmax_linear_policy(const FeatureMap& features, int H,
                             const std::vector<std::vector<double>>& weights, double kappa) {
    if (static_cast<int>(weights.size()) != H) throw ConfigError("need one weight vector per step");
    Policy pi(H, features.S, features.A);
    std::vector<double> logits(features.A);
    for (int h = 0; h < H; ++h) {
        if (static_cast<int>(weights[h].size()) != features.d)
            throw ConfigError("weight dimension differs from feature dimension");
        for (int s = 0; s < features.S; ++s) {
            double top = -kInfinity;
            for (int a = 0; a < features.A; ++a) {
                const auto f = features(s, a);
                double z = 0.0;
                for (int i = 0; i < features.d; ++i) z += f[i] * weights[h][i];
                logits[a] = z;
                top = std::max(top, z);
            }
            double total = 0.0;
            for (int a = 0; a < features.A; ++a) total += (logits[a] = std::exp(logits[a] - top));
            for (int a = 0; a < features.A; ++a)
                pi(h, s, a) = kappa / features.A + (1.0 - kappa) * logits[a] / total;
        }
    }
    return pi;
}

} // namespace demoreg
