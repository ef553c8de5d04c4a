#include "demoreg/linear_mdp.hpp"

#include <cmath>

namespace demoreg {

namespace {
constexpr double kLatentTolerance = 1e-9;

double dot(std::span<const double> x, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}
} // namespace

void LinearMdp::rebuild_latent() {
    TabularMdp m(S, A, H, s1);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const auto f = features(s, a);
                m.reward(h, s, a) = dot(f, theta_h(h));
                auto row = m.next(h, s, a);
                for (int i = 0; i < d; ++i) {
                    if (f[i] == 0.0) continue;
                    const auto measure = mu_hi(h, i);
                    for (int sp = 0; sp < S; ++sp) row[sp] += f[i] * measure[sp];
                }
            }
    latent_tabular = std::move(m);
}

void LinearMdp::validate() const {
    if (d < 1 || S < 1 || A < 2 || H < 1) throw ConfigError("invalid linear MDP sizes");
    if (features.S != S || features.A != A || features.d != d ||
        features.phi.size() != static_cast<std::size_t>(S) * A * d)
        throw ConfigError("feature map has wrong shape");
    if (theta.size() != static_cast<std::size_t>(H) * d) throw ConfigError("theta has wrong size");
    if (mu.size() != static_cast<std::size_t>(H) * d * S) throw ConfigError("mu has wrong size");

    const double sqrt_d = std::sqrt(static_cast<double>(d));
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const auto f = features(s, a);
            if (std::sqrt(dot(f, f)) > 1.0 + kLatentTolerance)
                throw ConfigError("feature norm exceeds one");
        }
    for (int h = 0; h < H; ++h) {
        const auto th = theta_h(h);
        if (std::sqrt(dot(th, th)) > sqrt_d + kLatentTolerance)
            throw ConfigError("theta norm exceeds sqrt(d)");
        double mass_sq = 0.0;
        for (int i = 0; i < d; ++i) {
            double mass = 0.0;
            for (double x : mu_hi(h, i)) mass += x;
            mass_sq += mass * mass;
        }
        if (std::sqrt(mass_sq) > sqrt_d + kLatentTolerance)
            throw ConfigError("mu total-mass norm exceeds sqrt(d)");
    }

    latent_tabular.validate();
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const auto f = features(s, a);
                if (std::abs(latent_tabular.reward(h, s, a) - dot(f, theta_h(h))) > kLatentTolerance)
                    throw ConfigError("latent rewards inconsistent with theta");
                const auto row = latent_tabular.next(h, s, a);
                for (int sp = 0; sp < S; ++sp) {
                    double expected = 0.0;
                    for (int i = 0; i < d; ++i) expected += f[i] * mu_hi(h, i)[sp];
                    if (std::abs(row[sp] - expected) > kLatentTolerance)
                        throw ConfigError("latent transitions inconsistent with mu");
                }
            }
}

} // namespace demoreg
