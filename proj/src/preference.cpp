#include "demoreg/preference.hpp"

#include "demoreg/environment.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace demoreg {

LinkFunction LinkFunction::sigmoid(int H) {
    if (H < 1) throw ConfigError("horizon must be positive");
    LinkFunction link;
    link.kind = Kind::sigmoid;
    link.sigma = [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };
    link.derivative = [](double x) {
        const double e = std::exp(-std::fabs(x));
        return e / ((1.0 + e) * (1.0 + e));
    };
    const double eH = std::exp(static_cast<double>(H));
    link.zeta = (1.0 + eH) * (1.0 + eH) / eH;
    return link;
}

LinkFunction LinkFunction::custom(std::function<double(double)> sigma,
                                  std::function<double(double)> derivative, double zeta, int H) {
    if (!sigma || !derivative) throw ConfigError("custom link needs sigma and its derivative");
    if (!(zeta > 0.0) || !std::isfinite(zeta)) throw ConfigError("zeta must be finite and positive");
    constexpr int kGrid = 1000;
    double previous = sigma(-H);
    for (int i = 1; i <= kGrid; ++i) {
        const double x = -H + 2.0 * H * i / kGrid;
        const double y = sigma(x);
        if (!(y > previous) || y < 0.0 || y > 1.0)
            throw ConfigError("custom link must be strictly increasing into [0,1]");
        previous = y;
    }
    LinkFunction link;
    link.kind = Kind::custom;
    link.sigma = std::move(sigma);
    link.derivative = std::move(derivative);
    link.zeta = zeta;
    return link;
}

double numeric_zeta(const LinkFunction& link, int H) {
    constexpr int kGrid = 2000;
    const double step = 2.0 * H / kGrid;
    double best_x = -H, best = link.derivative(-H);
    for (int i = 1; i <= kGrid; ++i) {
        const double x = -H + step * i;
        if (const double v = link.derivative(x); v < best) {
            best = v;
            best_x = x;
        }
    }
    // golden-section refinement inside the bracketing grid cell pair
    double lo = std::max(-static_cast<double>(H), best_x - step);
    double hi = std::min(static_cast<double>(H), best_x + step);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        if (link.derivative(x1) < link.derivative(x2)) hi = x2;
        else lo = x1;
    }
    best = std::min({best, link.derivative(0.5 * (lo + hi)), link.derivative(-H), link.derivative(H)});
    return 1.0 / best;
}

void PreferenceDataset::validate() const {
    for (const auto& rec : records) {
        validate_trajectory(rec.tau0, S, A, H);
        validate_trajectory(rec.tau1, S, A, H);
        if (rec.o != 0 && rec.o != 1) throw ConfigError("preference label must be 0 or 1");
    }
}

PreferenceOracle::PreferenceOracle(int S, int A, int H, std::vector<double> rewards, LinkFunction link)
    : S_(S), A_(A), H_(H), rewards_(std::move(rewards)), link_(std::move(link)) {
    if (rewards_.size() != static_cast<std::size_t>(H) * S * A)
        throw ConfigError("reward table has wrong size");
}

double PreferenceOracle::probability(const Trajectory& tau0, const Trajectory& tau1) const {
    validate_trajectory(tau0, S_, A_, H_);
    validate_trajectory(tau1, S_, A_, H_);
    return link_(trajectory_return(tau1, rewards_, S_, A_) - trajectory_return(tau0, rewards_, S_, A_));
}

int PreferenceOracle::query(const Trajectory& tau0, const Trajectory& tau1, Rng& rng) const {
    return rng.bernoulli(probability(tau0, tau1)) ? 1 : 0;
}

int preference_oracle(std::span<const double> rewards, int S, int A, const Trajectory& tau0,
                      const Trajectory& tau1, const LinkFunction& link, std::uint64_t seed) {
    Rng rng(seed);
    const double diff = trajectory_return(tau1, rewards, S, A) - trajectory_return(tau0, rewards, S, A);
    return rng.bernoulli(link(diff)) ? 1 : 0;
}

PreferenceDataset collect_preferences(const TransitionSampler& env, const Policy& sampler,
                                      std::size_t n, const PreferenceOracle& oracle,
                                      std::uint64_t seed, std::string sampler_id) {
    PreferenceDataset data{env.num_states(), env.num_actions(), env.horizon(), std::move(sampler_id), {}};
    data.records.reserve(n);
    Rng rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
        PreferenceRecord rec;
        rec.tau0 = sample_trajectory(env, sampler, rng, false);
        rec.tau1 = sample_trajectory(env, sampler, rng, false);
        rec.o = oracle.query(rec.tau0, rec.tau1, rng);
        data.records.push_back(std::move(rec));
    }
    return data;
}

RewardClass RewardClass::tabular(int S, int A, int H) {
    if (S < 1 || A < 1 || H < 1) throw ConfigError("reward class dimensions must be positive");
    return {RewardKind::tabular, S, A, H, {}};
}

RewardClass RewardClass::linear(const FeatureMap& features, int H) {
    if (features.d < 1 || H < 1) throw ConfigError("reward class dimensions must be positive");
    return {RewardKind::linear, features.S, features.A, H, features};
}

int RewardClass::dimension() const noexcept {
    return kind == RewardKind::tabular ? H * S * A : H * features.d;
}

std::vector<double> RewardModel::cell_rewards() const {
    if (cls.kind == RewardKind::tabular) return params;
    const int d = cls.features.d;
    std::vector<double> out(static_cast<std::size_t>(cls.H) * cls.S * cls.A);
    for (int h = 0; h < cls.H; ++h)
        for (int s = 0; s < cls.S; ++s)
            for (int a = 0; a < cls.A; ++a) {
                const auto f = cls.features(s, a);
                double v = 0.0;
                for (int i = 0; i < d; ++i) v += f[i] * params[static_cast<std::size_t>(h) * d + i];
                out[(static_cast<std::size_t>(h) * cls.S + s) * cls.A + a] = v;
            }
    return out;
}

double RewardModel::trajectory_reward(const Trajectory& tau) const {
    return trajectory_return(tau, cell_rewards(), cls.S, cls.A);
}

namespace {

struct Entry {
    int index;
    double value;
};

/// Sparse design row phi(tau1) - phi(tau0) of one record.
std::vector<Entry> design_row(const PreferenceRecord& rec, const RewardClass& cls) {
    std::map<int, double> acc;
    auto accumulate = [&](const Trajectory& tau, double sign) {
        for (int h = 0; h < cls.H; ++h) {
            const auto [s, a] = tau.steps[h];
            if (cls.kind == RewardKind::tabular) {
                acc[(h * cls.S + s) * cls.A + a] += sign;
            } else {
                const auto f = cls.features(s, a);
                for (int i = 0; i < cls.features.d; ++i) acc[h * cls.features.d + i] += sign * f[i];
            }
        }
    };
    accumulate(rec.tau1, 1.0);
    accumulate(rec.tau0, -1.0);
    std::vector<Entry> row;
    for (const auto& [i, v] : acc)
        if (v != 0.0) row.push_back({i, v});
    return row;
}

struct Problem {
    std::vector<std::vector<Entry>> rows;
    std::vector<int> labels;
    const LinkFunction& link;

    /// Mean log-likelihood; fills `grad` (ascent direction) when non-null.
    double evaluate(std::span<const double> x, std::vector<double>* grad) const {
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        double total = 0.0;
        const double inv_n = 1.0 / static_cast<double>(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double z = 0.0;
            for (const auto& e : rows[k]) z += e.value * x[e.index];
            const int o = labels[k];
            double ll, weight;
            if (link.kind == LinkFunction::Kind::sigmoid) {
                const double m = o ? z : -z; // log sigmoid(m)
                ll = -(std::log1p(std::exp(-std::fabs(m))) + std::max(-m, 0.0));
                weight = o - link.sigma(z);
            } else {
                const double p = link.sigma(z), dp = link.derivative(z);
                ll = o ? std::log(p) : std::log1p(-p);
                weight = o ? dp / p : -dp / (1.0 - p);
            }
            total += ll;
            if (grad)
                for (const auto& e : rows[k]) (*grad)[e.index] += inv_n * weight * e.value;
        }
        return total * inv_n;
    }
};

double norm_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace

void project_reward_params(const RewardClass& cls, std::span<double> params) {
    if (cls.kind == RewardKind::tabular) {
        for (double& x : params) x = std::clamp(x, 0.0, 1.0);
        return;
    }
    const int d = cls.features.d;
    const double radius = std::sqrt(static_cast<double>(d));
    for (int h = 0; h < cls.H; ++h) {
        auto block = params.subspan(static_cast<std::size_t>(h) * d, d);
        double n = 0.0;
        for (double x : block) n += x * x;
        n = std::sqrt(n);
        if (n > radius)
            for (double& x : block) x *= radius / n;
    }
}

double preference_log_likelihood(const PreferenceDataset& data, const RewardClass& cls,
                                 const LinkFunction& link, std::span<const double> params) {
    if (params.size() != static_cast<std::size_t>(cls.dimension()))
        throw ConfigError("parameter vector has wrong size");
    if (data.empty()) return 0.0;
    Problem problem{{}, {}, link};
    for (const auto& rec : data.records) {
        problem.rows.push_back(design_row(rec, cls));
        problem.labels.push_back(rec.o);
    }
    return problem.evaluate(params, nullptr);
}

MleResult reward_mle(const PreferenceDataset& data, const RewardClass& cls, const LinkFunction& link,
                     const MleConfig& cfg) {
    if (data.S != cls.S || data.A != cls.A || data.H != cls.H)
        throw ConfigError("reward class does not match the dataset");
    data.validate();
    const int p = cls.dimension();
    MleResult result;
    result.model.cls = cls;
    if (data.empty()) {
        result.model.params.assign(p, cls.kind == RewardKind::tabular ? 0.5 : 0.0);
        result.model.empty_data = true;
        result.converged = true;
        return result;
    }

    Problem problem{{}, {}, link};
    for (const auto& rec : data.records) {
        problem.rows.push_back(design_row(rec, cls));
        problem.labels.push_back(rec.o);
    }

    std::vector<double> x(p, cls.kind == RewardKind::tabular ? 0.5 : 0.0);
    std::vector<double> y = x, grad(p), z(p), probe(p);
    double fx = problem.evaluate(x, nullptr);
    if (!std::isfinite(fx)) throw OptimizationError("non-finite likelihood", x);
    result.objective_trace.push_back(fx);
    double step = cfg.initial_step, momentum = 1.0;

    auto mapping_norm = [&](const std::vector<double>& at, double t) {
        problem.evaluate(at, &grad);
        for (int i = 0; i < p; ++i) probe[i] = at[i] + t * grad[i];
        project_reward_params(cls, probe);
        return norm_diff(probe, at) / t;
    };

    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const double fy = problem.evaluate(y, &grad);
        if (!std::isfinite(fy)) throw OptimizationError("non-finite likelihood", y);
        // backtracking on the quadratic minorant
        for (int tries = 0; tries < 60; ++tries) {
            for (int i = 0; i < p; ++i) z[i] = y[i] + step * grad[i];
            project_reward_params(cls, z);
            double lin = 0.0, sq = 0.0;
            for (int i = 0; i < p; ++i) {
                lin += grad[i] * (z[i] - y[i]);
                sq += (z[i] - y[i]) * (z[i] - y[i]);
            }
            const double fz = problem.evaluate(z, nullptr);
            if (!std::isfinite(fz)) throw OptimizationError("non-finite likelihood", z);
            if (fz >= fy + lin - sq / (2.0 * step) - 1e-15) break;
            step *= 0.5;
        }
        const double fz = problem.evaluate(z, nullptr);
        if (fz >= fx) {
            const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            for (int i = 0; i < p; ++i) {
                const double xi = z[i];
                y[i] = xi + (momentum - 1.0) / next_momentum * (xi - x[i]);
                x[i] = xi;
            }
            project_reward_params(cls, y);
            momentum = next_momentum;
            fx = fz;
            result.objective_trace.push_back(fx);
        } else {
            y = x; // restart
            momentum = 1.0;
        }
        if (mapping_norm(x, step) <= cfg.grad_tol) {
            result.converged = true;
            ++it;
            break;
        }
    }
    result.iterations = it;
    result.gradient_norm = mapping_norm(x, step);
    result.objective = fx;
    result.model.params = std::move(x);
    return result;
}

double predicted_preference(const RewardModel& model, const Trajectory& tau0, const Trajectory& tau1,
                            const LinkFunction& link) {
    return link(model.trajectory_reward(tau1) - model.trajectory_reward(tau0));
}

VarianceEstimate reward_error_variance(std::span<const double> r_hat, std::span<const double> r_star,
                                       const Policy& policy, const TransitionSampler& env,
                                       std::size_t n_mc, std::uint64_t seed) {
    if (n_mc < 2) throw ConfigError("n_mc must be at least 2");
    if (r_hat.size() != r_star.size() || r_hat.size() != policy.prob.size())
        throw ConfigError("reward tables do not match the policy");
    const int S = env.num_states(), A = env.num_actions();
    Rng rng(seed);
    std::vector<double> diffs(n_mc);
    double mean = 0.0;
    for (std::size_t k = 0; k < n_mc; ++k) {
        const Trajectory tau = sample_trajectory(env, policy, rng, false);
        diffs[k] = trajectory_return(tau, r_star, S, A) - trajectory_return(tau, r_hat, S, A);
        mean += diffs[k];
    }
    const double n = static_cast<double>(n_mc);
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double x : diffs) {
        const double c = (x - mean) * (x - mean);
        m2 += c;
        m4 += c * c;
    }
    VarianceEstimate est;
    est.variance = m2 / (n - 1.0);
    const double central2 = m2 / n, central4 = m4 / n;
    est.std_error = std::sqrt(std::max(central4 - central2 * central2, 0.0) / n);
    return est;
}

} // namespace demoreg
