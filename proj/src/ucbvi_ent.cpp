#include "demoreg/ucbvi_ent.hpp"

#include "demoreg/planning.hpp"
#include "demoreg/rng.hpp"

#include <algorithm>
#include <cmath>

namespace demoreg {

double ConfidenceParams::beta_kl(std::int64_t n) const {
    return std::log(2.0 * S * A * H / delta) + S * std::log(M_E * (1.0 + static_cast<double>(n)));
}

double ConfidenceParams::beta_cnt() const { return std::log(2.0 * S * A * H / delta); }

double hoeffding_bonus(std::int64_t n, int H, double beta) {
    if (n <= 0) return kInfinity;
    return std::sqrt(2.0 * H * H * beta / static_cast<double>(n));
}

double gap_bonus(std::int64_t n, int H, double beta) {
    if (n <= 0) return H;
    return std::min(5.0 * H * H * beta / static_cast<double>(n), static_cast<double>(H));
}

CountTables::CountTables(int states, int actions, int horizon)
    : S(states), A(actions), H(horizon),
      n(static_cast<std::size_t>(horizon) * states * actions, 0),
      n_next(static_cast<std::size_t>(horizon) * states * actions * states, 0),
      p_hat(static_cast<std::size_t>(horizon) * states * actions * states, 1.0 / states) {}

CountTables CountTables::exact(const TabularMdp& mdp, std::int64_t visits) {
    CountTables c(mdp.S, mdp.A, mdp.H);
    std::fill(c.n.begin(), c.n.end(), visits);
    c.p_hat = mdp.p;
    for (std::size_t i = 0; i < c.n_next.size(); ++i)
        c.n_next[i] = static_cast<std::int64_t>(std::llround(mdp.p[i] * static_cast<double>(visits)));
    return c;
}

void CountTables::add(int h, int s, int a, int s_next) {
    const std::size_t c = cell(h, s, a);
    const std::int64_t total = ++n[c];
    ++n_next[c * S + s_next];
    const double inv = 1.0 / static_cast<double>(total);
    for (int sp = 0; sp < S; ++sp)
        p_hat[c * S + sp] = static_cast<double>(n_next[c * S + sp]) * inv;
}

ConfidenceState::ConfidenceState(int states, int actions, int horizon)
    : S(states), A(actions), H(horizon),
      uQ(static_cast<std::size_t>(horizon) * states * actions, 0.0), lQ(uQ.size(), 0.0),
      uV(static_cast<std::size_t>(horizon + 1) * states, 0.0), lV(uV.size(), 0.0),
      bp(uQ.size(), 0.0), W(uQ.size(), 0.0), G(uV.size(), 0.0),
      bar_pi(horizon, states, actions) {}

int ConfidenceState::widest_action(int h, int s) const noexcept {
    int best = 0;
    double best_width = width(h, s, 0);
    for (int a = 1; a < A; ++a) {
        const double w = width(h, s, a);
        if (w > best_width) {
            best = a;
            best_width = w;
        }
    }
    return best;
}

namespace {

/// Per-cell bonus tables; kept in sync with the counts during a run.
struct BonusTables {
    std::vector<double> transition; ///< b^p, +inf for unvisited cells
    std::vector<double> gap;        ///< b^gap, H for unvisited cells

    BonusTables(const CountTables& counts, const ConfidenceParams& params)
        : transition(counts.n.size()), gap(counts.n.size()) {
        for (std::size_t c = 0; c < counts.n.size(); ++c) refresh(c, counts.n[c], params);
    }

    void refresh(std::size_t c, std::int64_t visits, const ConfidenceParams& params) {
        if (visits == 0) {
            transition[c] = kInfinity;
            gap[c] = params.H;
            return;
        }
        const double beta = params.beta_kl(visits);
        transition[c] = params.bonus_multiplier * hoeffding_bonus(visits, params.H, beta);
        gap[c] = params.bonus_multiplier * gap_bonus(visits, params.H, beta);
    }
};

/// F(x) = lambda log sum_a exp(x_a / lambda + log ref_a), with the maximiser in `out`.
inline double soft_max_logref(const double* x, const double* log_ref, int A, double inv_lambda,
                              double lambda, double* out) noexcept {
    double shift = -kInfinity;
    for (int a = 0; a < A; ++a) {
        out[a] = x[a] * inv_lambda + log_ref[a];
        shift = std::max(shift, out[a]);
    }
    double total = 0.0;
    for (int a = 0; a < A; ++a) {
        out[a] = std::exp(out[a] - shift);
        total += out[a];
    }
    const double inv_total = 1.0 / total;
    for (int a = 0; a < A; ++a) out[a] *= inv_total;
    return lambda * (shift + std::log(total));
}

void backup_core(ConfidenceState& st, const CountTables& counts, std::span<const double> rewards,
                 std::span<const double> log_ref, double lambda, const BonusTables& bonuses) {
    const int S = counts.S, A = counts.A, H = counts.H;
    const double cap = H;
    const double inv_lambda = 1.0 / lambda;
    std::vector<double> scratch(A);
    for (int s = 0; s < S; ++s) {
        st.uV[st.state_cell(H, s)] = 0.0;
        st.lV[st.state_cell(H, s)] = 0.0;
    }
    for (int h = H - 1; h >= 0; --h) {
        const double* uV_next = st.uV.data() + st.state_cell(h + 1, 0);
        const double* lV_next = st.lV.data() + st.state_cell(h + 1, 0);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const std::size_t c = counts.cell(h, s, a);
                const double bonus = bonuses.transition[c];
                st.bp[c] = bonus;
                if (counts.n[c] == 0) {
                    st.uQ[c] = cap;
                    st.lQ[c] = 0.0;
                    continue;
                }
                const double* kernel = counts.p_hat.data() + c * S;
                double up = 0.0, low = 0.0;
                for (int sp = 0; sp < S; ++sp) {
                    up += kernel[sp] * uV_next[sp];
                    low += kernel[sp] * lV_next[sp];
                }
                st.uQ[c] = std::clamp(rewards[c] + up + bonus, 0.0, cap);
                st.lQ[c] = std::clamp(rewards[c] + low - bonus, 0.0, cap);
                if (st.lQ[c] > st.uQ[c]) throw std::logic_error("lower Q bound exceeds upper Q bound");
            }
            const std::size_t row = st.cell(h, s, 0);
            st.uV[st.state_cell(h, s)] = soft_max_logref(st.uQ.data() + row, log_ref.data() + row, A,
                                                         inv_lambda, lambda,
                                                         st.bar_pi.prob.data() + row);
            st.lV[st.state_cell(h, s)] = soft_max_logref(st.lQ.data() + row, log_ref.data() + row, A,
                                                         inv_lambda, lambda, scratch.data());
            if (st.lV[st.state_cell(h, s)] > st.uV[st.state_cell(h, s)] + 1e-12)
                throw std::logic_error("lower V bound exceeds upper V bound");
        }
    }
}

void gap_core(ConfidenceState& st, const CountTables& counts, double lambda,
              const BonusTables& bonuses) {
    const int S = counts.S, A = counts.A, H = counts.H;
    const double cap = H;
    const double growth = 1.0 + 1.0 / H;
    const double half_inv_lambda = 0.5 / lambda;
    for (int s = 0; s < S; ++s) st.G[st.state_cell(H, s)] = 0.0;
    for (int h = H - 1; h >= 0; --h) {
        const double* G_next = st.G.data() + st.state_cell(h + 1, 0);
        for (int s = 0; s < S; ++s) {
            double mixed = 0.0;
            double widest_sq = 0.0;
            for (int a = 0; a < A; ++a) {
                const std::size_t c = counts.cell(h, s, a);
                double w = cap;
                if (counts.n[c] > 0) {
                    const double* kernel = counts.p_hat.data() + c * S;
                    double next = 0.0;
                    for (int sp = 0; sp < S; ++sp) next += kernel[sp] * G_next[sp];
                    w = growth * next + bonuses.gap[c];
                }
                st.W[c] = w;
                mixed += st.bar_pi.prob[c] * w;
                const double width = st.uQ[c] - st.lQ[c];
                widest_sq = std::max(widest_sq, width * width);
            }
            st.G[st.state_cell(h, s)] = std::clamp(mixed + widest_sq * half_inv_lambda, 0.0, cap);
        }
    }
}

std::vector<double> log_of(const Policy& ref) {
    std::vector<double> out(ref.prob.size());
    std::transform(ref.prob.begin(), ref.prob.end(), out.begin(), [](double x) { return std::log(x); });
    return out;
}

} // namespace

void optimistic_backup_into(ConfidenceState& st, const CountTables& counts,
                            std::span<const double> rewards, const Policy& ref, double lambda,
                            const ConfidenceParams& params) {
    backup_core(st, counts, rewards, log_of(ref), lambda, BonusTables(counts, params));
}

ConfidenceState optimistic_backup(const CountTables& counts, std::span<const double> rewards,
                                  const Policy& ref, double lambda, const ConfidenceParams& params) {
    if (ref.H != counts.H || ref.S != counts.S || ref.A != counts.A)
        throw ConfigError("reference policy dimensions do not match the counts");
    if (rewards.size() != counts.n.size()) throw ConfigError("reward table has wrong size");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    for (double x : ref.prob)
        if (!(x > 0.0)) throw DomainError("reference policy must be strictly positive");
    ConfidenceState st(counts.S, counts.A, counts.H);
    optimistic_backup_into(st, counts, rewards, ref, lambda, params);
    return st;
}

void gap_backup(ConfidenceState& st, const CountTables& counts, const ConfidenceParams& params,
                double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    gap_core(st, counts, lambda, BonusTables(counts, params));
}

Policy exploratory_policy(const ConfidenceState& st, int h_prime) {
    if (h_prime < 0 || h_prime > st.H) throw ConfigError("h_prime must lie in [0, H]");
    Policy pi = st.bar_pi;
    if (h_prime == 0) return pi;
    const int h = h_prime - 1;
    for (int s = 0; s < st.S; ++s) {
        auto row = pi.row(h, s);
        std::fill(row.begin(), row.end(), 0.0);
        row[st.widest_action(h, s)] = 1.0;
    }
    return pi;
}

BpiResult run_ucbvi_ent_plus(const Environment& env, const Policy& ref, double lambda,
                             double epsilon, double delta, std::uint64_t seed,
                             const UcbviOptions& options) {
    const int S = env.num_states(), A = env.num_actions(), H = env.horizon();
    if (ref.H != H || ref.S != S || ref.A != A)
        throw ConfigError("reference policy dimensions do not match the environment");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    for (double x : ref.prob)
        if (!(x > 0.0)) throw DomainError("reference policy must be strictly positive");

    const ConfidenceParams params{S, A, H, delta, options.bonus_multiplier};
    CountTables counts(S, A, H);
    ConfidenceState state(S, A, H);
    std::vector<double> rewards(counts.n.size(), 0.0);
    BonusTables bonuses(counts, params);
    const std::vector<double> log_ref = log_of(ref);
    Rng rng(seed);

    BpiResult result;
    for (std::int64_t t = 1;; ++t) {
        backup_core(state, counts, rewards, log_ref, lambda, bonuses);
        gap_core(state, counts, lambda, bonuses);
        const double gap = state.gap_at_start(env.initial_state());
        if (options.record_trace) result.gap_trace.push_back(gap);
        result.final_gap = gap;
        result.episodes = t;

        const bool stop = gap <= epsilon;
        const bool exhausted = !stop && result.samples >= options.max_episodes;
        const int h_prime = (stop || exhausted) ? -1 : rng.uniform_int(H + 1);
        if (options.observer) options.observer(EpisodeView{t, h_prime, state, counts});
        if (stop || exhausted) {
            result.stopped = stop;
            break;
        }

        int s = env.initial_state();
        for (int h = 0; h < H; ++h) {
            const int a = (h + 1 == h_prime) ? state.widest_action(h, s)
                                             : rng.categorical(state.bar_pi.row(h, s));
            const int s_next = env.sample_next(h, s, a, rng);
            const std::size_t c = counts.cell(h, s, a);
            if (counts.n[c] == 0) rewards[c] = env.observe_reward(h, s, a);
            counts.add(h, s, a, s_next);
            bonuses.refresh(c, counts.n[c], params);
            s = s_next;
        }
        ++result.samples;
    }
    result.policy = state.bar_pi;
    return result;
}

} // namespace demoreg
