#include "demoreg/lsvi_ent.hpp"

#include "demoreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace demoreg {

double lsvi_beta_cnt(int d, int H, double delta, double t) {
    return 4.0 * std::log(8.0 * M_E * H * (2.0 * t + 1.0) / delta) + 4.0 * d * std::log(3.0 * t) + 3.0;
}

LsviConstants lsvi_constants(int d, int H, std::int64_t T, double delta) {
    if (d < 1 || H < 1 || T < 1) throw ConfigError("lsvi_constants needs d, H, T >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    const double t = static_cast<double>(T);
    LsviConstants c;
    c.alpha = 2.0 * (lsvi_beta_cnt(d, H, delta, t) + 1.0);
    c.bonus_scale = 32.0 * d * H * std::sqrt(std::log(24.0 * M_E * d * H * t / delta));
    return c;
}

LsviState::LsviState(int states, int actions, int horizon, int dim, const LsviConstants& constants)
    : S(states), A(actions), H(horizon), d(dim), alpha(constants.alpha),
      bonus_scale(constants.bonus_scale),
      gram(horizon, constants.alpha * Eigen::MatrixXd::Identity(dim, dim)),
      phi_r(horizon, Eigen::VectorXd::Zero(dim)), next_phi(horizon, Eigen::MatrixXd::Zero(dim, states)),
      uw(horizon, Eigen::VectorXd::Zero(dim)), lw(horizon, Eigen::VectorXd::Zero(dim)),
      uQ(static_cast<std::size_t>(horizon) * states * actions, 0.0), lQ(uQ.size(), 0.0),
      uV(static_cast<std::size_t>(horizon + 1) * states, 0.0), lV(uV.size(), 0.0),
      bonus(uQ.size(), 0.0), bar_pi(horizon, states, actions) {}

int LsviState::widest_action(int h, int s) const noexcept {
    int best = 0;
    double best_width = width(h, s, 0);
    for (int a = 1; a < A; ++a)
        if (const double w = width(h, s, a); w > best_width) {
            best = a;
            best_width = w;
        }
    return best;
}

void LsviState::add(const FeatureMap& features, int h, int s, int a, double r, int s_next,
                    double weight) {
    const auto f = features(s, a);
    const Eigen::Map<const Eigen::VectorXd> phi(f.data(), d);
    gram[h].noalias() += weight * phi * phi.transpose();
    phi_r[h] += weight * r * phi;
    if (s_next >= 0) next_phi[h].col(s_next) += weight * phi;
}

double LsviState::log_det_gram(int h) const {
    const Eigen::LLT<Eigen::MatrixXd> llt(gram[h]);
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void lsvi_backup(LsviState& st, const Policy& ref, double lambda, const FeatureMap& features,
                 double bonus_multiplier) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (ref.H != st.H || ref.S != st.S || ref.A != st.A)
        throw ConfigError("reference policy dimensions do not match the state");
    if (features.S != st.S || features.A != st.A || features.d != st.d)
        throw ConfigError("feature map does not match the state");
    const int S = st.S, A = st.A, H = st.H, d = st.d;
    const double cap = H;
    const Eigen::Map<const Eigen::MatrixXd> Phi(features.phi.data(), d, static_cast<Eigen::Index>(S) * A);
    std::vector<double> scratch(A);

    for (int s = 0; s < S; ++s) {
        st.uV[st.state_cell(H, s)] = 0.0;
        st.lV[st.state_cell(H, s)] = 0.0;
    }
    for (int h = H - 1; h >= 0; --h) {
        const Eigen::LLT<Eigen::MatrixXd> llt(st.gram[h]);
        if (llt.info() != Eigen::Success) throw std::logic_error("Gram matrix is not positive definite");
        const Eigen::Map<const Eigen::VectorXd> uV_next(st.uV.data() + st.state_cell(h + 1, 0), S);
        const Eigen::Map<const Eigen::VectorXd> lV_next(st.lV.data() + st.state_cell(h + 1, 0), S);
        st.uw[h] = llt.solve(st.phi_r[h] + st.next_phi[h] * uV_next);
        st.lw[h] = llt.solve(st.phi_r[h] + st.next_phi[h] * lV_next);
        const Eigen::MatrixXd solved = llt.solve(Phi);
        const Eigen::VectorXd up = Phi.transpose() * st.uw[h];
        const Eigen::VectorXd low = Phi.transpose() * st.lw[h];
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                const Eigen::Index j = static_cast<Eigen::Index>(s) * A + a;
                const std::size_t c = st.cell(h, s, a);
                const double quad = std::max(Phi.col(j).dot(solved.col(j)), 0.0);
                st.bonus[c] = bonus_multiplier * st.bonus_scale * std::sqrt(quad);
                st.uQ[c] = up[j] + st.bonus[c];
                st.lQ[c] = low[j] - st.bonus[c];
            }
            const auto row = st.cell(h, s, 0);
            const std::span<const double> ref_row = ref.row(h, s);
            const double u = log_sum_exp_max_into({st.uQ.data() + row, static_cast<std::size_t>(A)}, ref_row,
                                                  lambda, st.bar_pi.row(h, s));
            const double l = log_sum_exp_max_into({st.lQ.data() + row, static_cast<std::size_t>(A)}, ref_row,
                                                  lambda, scratch);
            st.uV[st.state_cell(h, s)] = std::clamp(u, 0.0, cap);
            st.lV[st.state_cell(h, s)] = std::clamp(l, 0.0, cap);
        }
    }
}

LsviResult run_lsvi_ent(const Environment& env, const FeatureMap& features, const Policy& ref,
                        double lambda, std::int64_t T, double delta, std::uint64_t seed,
                        const LsviOptions& options) {
    const int S = env.num_states(), A = env.num_actions(), H = env.horizon();
    if (T < 1) throw ConfigError("T must be at least 1");
    if (features.S != S || features.A != A) throw ConfigError("feature map does not match the environment");
    if (ref.H != H || ref.S != S || ref.A != A)
        throw ConfigError("reference policy dimensions do not match the environment");
    if (options.h_prime_first < 0 || options.h_prime_first > H)
        throw ConfigError("h_prime_first must lie in [0, H]");
    if (options.oracle && (options.oracle->S != S || options.oracle->A != A || options.oracle->H != H))
        throw ConfigError("oracle model does not match the environment");
    for (double x : ref.prob)
        if (!(x > 0.0)) throw DomainError("reference policy must be strictly positive");

    LsviResult result;
    result.constants = lsvi_constants(features.d, H, T, delta);
    LsviState state(S, A, H, features.d, result.constants);
    Rng rng(seed);

    double optimum = 0.0, value_sum = 0.0;
    if (options.oracle)
        optimum = regularized_value_iteration(*options.oracle, ref, lambda).first.V(0, options.oracle->s1);

    const int span = H - options.h_prime_first + 1;
    for (std::int64_t t = 1; t <= T; ++t) {
        lsvi_backup(state, ref, lambda, features, options.bonus_multiplier);

        const double limit = 2.0 * H * std::sqrt(features.d * static_cast<double>(t) / state.alpha);
        for (int h = 0; h < H; ++h) {
            const double ratio = std::max(state.uw[h].norm(), state.lw[h].norm()) / limit;
            result.max_weight_ratio = std::max(result.max_weight_ratio, ratio);
            if (ratio > 1.0 + 1e-9) throw std::logic_error("ridge weight norm exceeds its bound");
        }
        result.mixture.components.push_back(state.bar_pi);

        const int h_prime = options.h_prime_first + rng.uniform_int(span);
        if (options.observer) options.observer(LsviEpisodeView{t, h_prime, state});
        if (options.record_telemetry) {
            LsviTelemetryRow row;
            row.episode = t;
            for (int h = 0; h < H; ++h) row.log_det.push_back(state.log_det_gram(h));
            row.suboptimality = std::numeric_limits<double>::quiet_NaN();
            if (options.oracle) {
                value_sum += policy_evaluation_regularized(*options.oracle, state.bar_pi, ref, lambda)
                                 .V(0, options.oracle->s1);
                row.suboptimality = optimum - value_sum / static_cast<double>(t);
            }
            result.telemetry.push_back(std::move(row));
        }

        int s = env.initial_state();
        for (int h = 0; h < H; ++h) {
            const int a = (h + 1 == h_prime) ? state.widest_action(h, s)
                                             : rng.categorical(state.bar_pi.row(h, s));
            const double r = env.observe_reward(h, s, a);
            const int s_next = h + 1 < H ? env.sample_next(h, s, a, rng) : -1;
            state.add(features, h, s, a, r, s_next);
            s = s_next;
        }
        ++state.samples;
    }
    return result;
}

} // namespace demoreg
