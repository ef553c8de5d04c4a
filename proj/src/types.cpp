#include "demoreg/types.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace demoreg {

TabularMdp::TabularMdp(int states, int actions, int horizon, int initial)
    : S(states), A(actions), H(horizon), s1(initial) {
    if (states < 1 || actions < 2 || horizon < 1)
        throw ConfigError("TabularMdp requires S >= 1, A >= 2, H >= 1");
    p.assign(static_cast<std::size_t>(H) * S * A * S, 0.0);
    r.assign(static_cast<std::size_t>(H) * S * A, 0.0);
}

void TabularMdp::validate() const {
    if (S < 1 || A < 2 || H < 1)
        throw ConfigError("TabularMdp requires S >= 1, A >= 2, H >= 1");
    if (s1 < 0 || s1 >= S) throw ConfigError("initial state out of range");
    if (p.size() != static_cast<std::size_t>(H) * S * A * S)
        throw ConfigError("transition tensor has wrong size");
    if (r.size() != static_cast<std::size_t>(H) * S * A)
        throw ConfigError("reward tensor has wrong size");
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const auto row = next(h, s, a);
                double total = 0.0;
                for (double x : row) {
                    if (!(x >= 0.0) || !std::isfinite(x)) {
                        std::ostringstream msg;
                        msg << "invalid transition probability at (h=" << h << ", s=" << s
                            << ", a=" << a << ")";
                        throw ConfigError(msg.str());
                    }
                    total += x;
                }
                if (std::abs(total - 1.0) > kProbTolerance) {
                    std::ostringstream msg;
                    msg << "transition row (h=" << h << ", s=" << s << ", a=" << a
                        << ") sums to " << total;
                    throw ConfigError(msg.str());
                }
                const double rew = reward(h, s, a);
                if (!(rew >= 0.0 && rew <= 1.0)) {
                    std::ostringstream msg;
                    msg << "reward (h=" << h << ", s=" << s << ", a=" << a << ") = " << rew
                        << " outside [0,1]";
                    throw ConfigError(msg.str());
                }
            }
}

Policy::Policy(int horizon, int states, int actions, double fill)
    : H(horizon), S(states), A(actions),
      prob(static_cast<std::size_t>(horizon) * states * actions, fill) {}

Policy Policy::uniform(int horizon, int states, int actions) {
    return Policy(horizon, states, actions, 1.0 / actions);
}

void Policy::validate() const {
    if (prob.size() != static_cast<std::size_t>(H) * S * A)
        throw ConfigError("policy tensor has wrong size");
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            double total = 0.0;
            for (double x : row(h, s)) {
                if (!(x >= 0.0)) throw ConfigError("negative or NaN policy entry");
                total += x;
            }
            if (std::abs(total - 1.0) > kProbTolerance)
                throw ConfigError("policy row does not sum to one");
        }
}

double Policy::min_entry() const {
    return prob.empty() ? 0.0 : *std::min_element(prob.begin(), prob.end());
}

double OccupancyTable::state(int h, int s) const noexcept {
    const auto begin = d.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(h) * S + s) * A);
    return std::accumulate(begin, begin + A, 0.0);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInfinity;
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(kl, 0.0);
}

} // namespace demoreg
