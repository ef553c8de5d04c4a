#pragma once

#include "demoreg/rng.hpp"
#include "demoreg/types.hpp"

#include <vector>

namespace support {

/// Random strictly positive policy (rows from normalised exponentials).
inline demoreg::Policy random_policy(int H, int S, int A, demoreg::Rng& rng) {
    demoreg::Policy pi(H, S, A);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            double z = 0.0;
            for (int a = 0; a < A; ++a) z += pi(h, s, a) = rng.exponential();
            for (int a = 0; a < A; ++a) pi(h, s, a) /= z;
        }
    return pi;
}

/// Random probability vector of length n.
inline std::vector<double> random_simplex(int n, demoreg::Rng& rng) {
    std::vector<double> v(n);
    double z = 0.0;
    for (auto& x : v) z += x = rng.exponential();
    for (auto& x : v) x /= z;
    return v;
}

/// Two states, H = 2, every transition uniform.
inline demoreg::TabularMdp uniform_two_state() {
    demoreg::TabularMdp m(2, 2, 2);
    for (auto& x : m.p) x = 0.5;
    for (std::size_t i = 0; i < m.r.size(); ++i) m.r[i] = 0.1 * static_cast<double>(i % 7);
    return m;
}

/// Deterministic chain: action 0 moves to s + 1 (capped), action 1 stays.
inline demoreg::TabularMdp deterministic_chain(int S, int H) {
    demoreg::TabularMdp m(S, 2, H);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            m.next(h, s, 0)[std::min(s + 1, S - 1)] = 1.0;
            m.next(h, s, 1)[s] = 1.0;
            m.reward(h, s, 0) = s == S - 1 ? 1.0 : 0.0;
        }
    return m;
}

inline demoreg::Policy deterministic_policy(int H, int S, int A, int action) {
    demoreg::Policy pi(H, S, A);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) pi(h, s, action) = 1.0;
    return pi;
}

} // namespace support
