// Independent reference computations used only by the tests. Nothing here
// calls into the planning code under test.
#pragma once

#include "demoreg/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using demoreg::Policy;
using demoreg::TabularMdp;

/// <pi, x> - lambda KL(pi || ref), straight from the definition.
inline double regularized_objective(const std::vector<double>& pi, const std::vector<double>& x,
                                    const std::vector<double>& ref, double lambda) {
    double lin = 0.0, kl = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) {
        lin += pi[a] * x[a];
        if (pi[a] > 0.0) kl += pi[a] * std::log(pi[a] / ref[a]);
    }
    return lin - lambda * kl;
}

struct GridMax {
    double value;
    std::vector<double> argmax;
};

/// Maximises the regularised objective over the 1-simplex (A = 2) on a
/// uniform grid of the given resolution.
inline GridMax grid_max_1d(const std::vector<double>& x, const std::vector<double>& ref, double lambda,
                           double resolution) {
    GridMax best{-std::numeric_limits<double>::infinity(), {}};
    const long steps = std::lround(1.0 / resolution);
    for (long i = 0; i <= steps; ++i) {
        const double p = static_cast<double>(i) / steps;
        const std::vector<double> pi{p, 1.0 - p};
        const double v = regularized_objective(pi, x, ref, lambda);
        if (v > best.value) best = {v, pi};
    }
    return best;
}

/// Coarse-to-fine grid search on the 1- or 2-simplex. Each level searches a
/// window of +-2 cells around the previous optimum with a 10x finer grid,
/// until the cell width reaches `resolution`.
inline GridMax grid_max(const std::vector<double>& x, const std::vector<double>& ref, double lambda,
                        double resolution) {
    const std::size_t A = x.size();
    auto eval = [&](double p0, double p1) {
        std::vector<double> pi = A == 2 ? std::vector<double>{p0, 1.0 - p0} : std::vector<double>{p0, p1, 1.0 - p0 - p1};
        return std::pair{regularized_objective(pi, x, ref, lambda), pi};
    };
    double lo0 = 0.0, hi0 = 1.0, lo1 = 0.0, hi1 = A == 3 ? 1.0 : 0.0;
    double width = 0.01;
    GridMax best{-std::numeric_limits<double>::infinity(), {}};
    double b0 = 0.0, b1 = 0.0;
    for (;;) {
        const long n0 = std::lround((hi0 - lo0) / width);
        const long n1 = A == 3 ? std::lround((hi1 - lo1) / width) : 0;
        for (long i = 0; i <= n0; ++i) {
            const double p0 = std::min(1.0, lo0 + i * width);
            for (long j = 0; j <= n1; ++j) {
                const double p1 = A == 3 ? std::min(1.0, lo1 + j * width) : 0.0;
                if (A == 3 && p0 + p1 > 1.0 + 1e-15) continue;
                auto [v, pi] = eval(p0, A == 3 ? std::min(p1, 1.0 - p0) : 0.0);
                if (v > best.value) {
                    best = {v, pi};
                    b0 = p0;
                    b1 = p1;
                }
            }
        }
        if (width <= resolution * (1 + 1e-9)) break;
        lo0 = std::max(0.0, b0 - 2 * width);
        hi0 = std::min(1.0, b0 + 2 * width);
        if (A == 3) {
            lo1 = std::max(0.0, b1 - 2 * width);
            hi1 = std::min(1.0, b1 + 2 * width);
        }
        width /= 10.0;
    }
    return best;
}

struct Path {
    double prob;
    std::vector<int> states;
    std::vector<int> actions;
};

/// Every trajectory with positive probability under `pi`, depth-first.
inline std::vector<Path> enumerate(const TabularMdp& m, const Policy& pi) {
    std::vector<Path> out;
    std::function<void(int, int, Path)> rec = [&](int h, int s, Path path) {
        if (h == m.H) {
            out.push_back(std::move(path));
            return;
        }
        for (int a = 0; a < m.A; ++a) {
            const double pa = pi(h, s, a);
            if (pa == 0.0) continue;
            if (h + 1 == m.H) {
                Path next = path;
                next.prob *= pa;
                next.states.push_back(s);
                next.actions.push_back(a);
                rec(h + 1, -1, std::move(next));
                continue;
            }
            for (int sp = 0; sp < m.S; ++sp) {
                const double ps = m.p[((static_cast<std::size_t>(h) * m.S + s) * m.A + a) * m.S + sp];
                if (ps == 0.0) continue;
                Path next = path;
                next.prob *= pa * ps;
                next.states.push_back(s);
                next.actions.push_back(a);
                rec(h + 1, sp, std::move(next));
            }
        }
    };
    rec(0, m.s1, Path{1.0, {}, {}});
    return out;
}

inline double path_return(const TabularMdp& m, const Path& p) {
    double r = 0.0;
    for (int h = 0; h < m.H; ++h) r += m.r[(static_cast<std::size_t>(h) * m.S + p.states[h]) * m.A + p.actions[h]];
    return r;
}

/// Probability of the state-action sequence of `path` under `pi` (same transitions).
inline double path_prob(const TabularMdp& m, const Policy& pi, const Path& path) {
    double prob = 1.0;
    for (int h = 0; h < m.H; ++h) {
        prob *= pi(h, path.states[h], path.actions[h]);
        if (h + 1 < m.H)
            prob *= m.p[((static_cast<std::size_t>(h) * m.S + path.states[h]) * m.A + path.actions[h]) * m.S +
                        path.states[h + 1]];
    }
    return prob;
}

/// KL between the trajectory distributions of pi and pi_prime by enumeration.
inline double trajectory_kl(const TabularMdp& m, const Policy& pi, const Policy& pi_prime) {
    double kl = 0.0;
    for (const auto& path : enumerate(m, pi)) {
        const double q = path_prob(m, pi_prime, path);
        if (q == 0.0) return std::numeric_limits<double>::infinity();
        kl += path.prob * std::log(path.prob / q);
    }
    return kl;
}

/// E_pi[sum r] by enumeration.
inline double expected_return(const TabularMdp& m, const Policy& pi) {
    double v = 0.0;
    for (const auto& path : enumerate(m, pi)) v += path.prob * path_return(m, path);
    return v;
}

/// Unregularised optimal value by exhaustive search over deterministic Markov
/// policies (small instances only).
inline double brute_force_optimum(const TabularMdp& m) {
    const long cells = static_cast<long>(m.H) * m.S;
    long total = 1;
    for (long i = 0; i < cells; ++i) total *= m.A;
    double best = -std::numeric_limits<double>::infinity();
    for (long code = 0; code < total; ++code) {
        Policy pi(m.H, m.S, m.A, 0.0);
        long c = code;
        for (int h = 0; h < m.H; ++h)
            for (int s = 0; s < m.S; ++s) {
                pi(h, s, static_cast<int>(c % m.A)) = 1.0;
                c /= m.A;
            }
        best = std::max(best, expected_return(m, pi));
    }
    return best;
}

/// Slope of the least-squares line through (log x, log y).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

} // namespace oracle
