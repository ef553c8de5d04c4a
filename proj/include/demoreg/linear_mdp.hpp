#pragma once

#include "demoreg/types.hpp"

#include <span>
#include <vector>

namespace demoreg {

/// Known feature map phi(s, a) in R^d, shared by all steps.
struct FeatureMap {
    int S = 0;
    int A = 0;
    int d = 0;
    std::vector<double> phi; ///< [s][a][i]

    std::span<const double> operator()(int s, int a) const noexcept {
        return {phi.data() + (static_cast<std::size_t>(s) * A + a) * d, static_cast<std::size_t>(d)};
    }
};

/// Linear MDP: p_h(.|s,a) = sum_i phi_i(s,a) mu_h[i], r_h(s,a) = <phi(s,a), theta_h>.
/// The induced tabular model is kept for exact evaluation only; learners get
/// the feature map and a simulator.
struct LinearMdp {
    int S = 0;
    int A = 0;
    int H = 0;
    int d = 0;
    int s1 = 0;
    FeatureMap features;
    std::vector<double> theta; ///< [h][i]
    std::vector<double> mu;    ///< [h][i][s']
    TabularMdp latent_tabular;

    std::span<const double> theta_h(int h) const noexcept {
        return {theta.data() + static_cast<std::size_t>(h) * d, static_cast<std::size_t>(d)};
    }
    std::span<const double> mu_hi(int h, int i) const noexcept {
        return {mu.data() + (static_cast<std::size_t>(h) * d + i) * S, static_cast<std::size_t>(S)};
    }

    /// Rebuilds latent_tabular from (phi, theta, mu).
    void rebuild_latent();

    /// Throws ConfigError on any norm, measure, or consistency violation.
    void validate() const;
};

} // namespace demoreg
