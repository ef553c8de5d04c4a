#include "demoreg/behavior_cloning.hpp"

#include "demoreg/environment.hpp"
#include "demoreg/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace demoreg {

DemonstrationSet::DemonstrationSet(int S, int A, int H, std::vector<Trajectory> trajectories)
    : S_(S), A_(A), H_(H) {
    for (auto& tau : trajectories) add(std::move(tau));
}

void DemonstrationSet::add(Trajectory tau) {
    validate_trajectory(tau, S_, A_, H_);
    tau.rewards.reset();
    trajectories_.push_back(std::move(tau));
    counts_.clear();
}

const std::vector<std::int64_t>& DemonstrationSet::counts() const {
    if (counts_.empty()) {
        counts_.assign(static_cast<std::size_t>(H_) * S_ * A_, 0);
        for (const auto& tau : trajectories_)
            for (int h = 0; h < H_; ++h)
                ++counts_[(static_cast<std::size_t>(h) * S_ + tau.steps[h].s) * A_ + tau.steps[h].a];
    }
    return counts_;
}

std::int64_t DemonstrationSet::count(int h, int s) const {
    std::int64_t total = 0;
    for (int a = 0; a < A_; ++a) total += count(h, s, a);
    return total;
}

DemonstrationSet collect_demonstrations(const TransitionSampler& env, const Policy& expert,
                                        std::size_t n, std::uint64_t seed) {
    DemonstrationSet demos(env.num_states(), env.num_actions(), env.horizon());
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) demos.add(sample_trajectory(env, expert, rng, false));
    return demos;
}

Policy bc_tabular(const DemonstrationSet& demos) {
    const int S = demos.S(), A = demos.A(), H = demos.H();
    Policy pi(H, S, A);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            const double denom = static_cast<double>(demos.count(h, s) + A);
            for (int a = 0; a < A; ++a)
                pi(h, s, a) = static_cast<double>(demos.count(h, s, a) + 1) / denom;
        }
    return pi;
}

Policy kappa_smooth(const Policy& policy, double kappa) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw DomainError("kappa must lie in [0,1]");
    Policy out = policy;
    const double floor = kappa / policy.A;
    for (double& x : out.prob) x = (1.0 - kappa) * x + floor;
    return out;
}

namespace {

struct StepData {
    struct Cell {
        int s;
        int a;
        double weight; // count / N
    };
    std::vector<Cell> cells;
};

StepData step_data(const DemonstrationSet& demos, int h) {
    StepData data;
    if (demos.empty()) return data;
    const double inv_n = 1.0 / static_cast<double>(demos.size());
    for (int s = 0; s < demos.S(); ++s)
        for (int a = 0; a < demos.A(); ++a)
            if (const auto c = demos.count(h, s, a); c > 0)
                data.cells.push_back({s, a, static_cast<double>(c) * inv_n});
    return data;
}

/// Objective and (optionally) gradient of the per-step negative log-likelihood.
double evaluate(const StepData& data, const FeatureMap& features, std::span<const double> w,
                double kappa, std::vector<double>* grad) {
    const int A = features.A, d = features.d;
    std::vector<double> logits(A);
    std::vector<double> mean_feature(d);
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    double objective = 0.0;
    for (const auto& cell : data.cells) {
        double top = -kInfinity;
        for (int a = 0; a < A; ++a) {
            const auto f = features(cell.s, a);
            double z = 0.0;
            for (int i = 0; i < d; ++i) z += f[i] * w[i];
            logits[a] = z;
            top = std::max(top, z);
        }
        double total = 0.0;
        for (int a = 0; a < A; ++a) total += (logits[a] = std::exp(logits[a] - top));
        for (int a = 0; a < A; ++a) logits[a] /= total; // softmax
        const double soft = logits[cell.a];
        const double prob = kappa / A + (1.0 - kappa) * soft;
        objective -= cell.weight * std::log(prob);
        if (!grad) continue;
        std::fill(mean_feature.begin(), mean_feature.end(), 0.0);
        for (int a = 0; a < A; ++a) {
            const auto f = features(cell.s, a);
            for (int i = 0; i < d; ++i) mean_feature[i] += logits[a] * f[i];
        }
        const double scale = cell.weight * (1.0 - kappa) * soft / prob;
        const auto f_taken = features(cell.s, cell.a);
        for (int i = 0; i < d; ++i) (*grad)[i] -= scale * (f_taken[i] - mean_feature[i]);
    }
    return objective;
}

void project_ball(std::vector<double>& w, double radius) {
    double norm_sq = 0.0;
    for (double x : w) norm_sq += x * x;
    const double norm = std::sqrt(norm_sq);
    if (norm > radius && norm > 0.0)
        for (double& x : w) x *= radius / norm;
}

struct DescentOutcome {
    std::vector<double> w;
    double objective;
    std::vector<double> trace;
};

DescentOutcome descend(const StepData& data, const FeatureMap& features, std::vector<double> w,
                       double kappa, double radius, const GradientDescentConfig& gd) {
    std::vector<double> grad(features.d), candidate(features.d);
    double objective = evaluate(data, features, w, kappa, nullptr);
    std::vector<double> trace{objective};
    constexpr int kMaxHalvings = 60;
    double scale = 1.0; // adaptive multiplier on the step_size / sqrt(k) schedule
    for (int k = 1; k <= gd.max_iters; ++k) {
        evaluate(data, features, w, kappa, &grad);
        for (double g : grad)
            if (!std::isfinite(g)) throw OptimizationError("non-finite gradient in behavior cloning", w);
        double step = scale * gd.step_size / std::sqrt(static_cast<double>(k));
        bool accepted = false;
        double next = objective;
        int halving = 0;
        for (; halving < kMaxHalvings; ++halving, step *= 0.5) {
            for (int i = 0; i < features.d; ++i) candidate[i] = w[i] - step * grad[i];
            project_ball(candidate, radius);
            next = evaluate(data, features, candidate, kappa, nullptr);
            if (!std::isfinite(next))
                throw OptimizationError("non-finite objective in behavior cloning", candidate);
            if (next <= objective) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        scale = halving == 0 ? std::min(scale * 2.0, 1e8) : scale * std::pow(0.5, halving);
        const double decrease = objective - next;
        w.swap(candidate);
        objective = next;
        trace.push_back(objective);
        if (decrease < gd.tolerance) break;
    }
    return {std::move(w), objective, std::move(trace)};
}

} // namespace

double bc_linear_objective(const DemonstrationSet& demos, const FeatureMap& features, int h,
                           std::span<const double> w, double kappa) {
    return evaluate(step_data(demos, h), features, w, kappa, nullptr);
}

LinearBcResult bc_linear(const DemonstrationSet& demos, const FeatureMap& features,
                         const BcConfig& cfg) {
    if (features.S != demos.S() || features.A != demos.A())
        throw ConfigError("feature map does not match the demonstrations");
    if (!(cfg.R > 0.0)) throw DomainError("R must be positive");
    const int H = demos.H(), A = demos.A(), d = features.d;
    const double kappa =
        cfg.kappa < 0.0 ? static_cast<double>(A) / (static_cast<double>(demos.size()) + A) : cfg.kappa;
    if (!(kappa >= 0.0 && kappa < 1.0) && !demos.empty())
        throw DomainError("kappa must lie in [0,1)");

    LinearBcResult result;
    result.kappa = kappa;
    Rng rng(cfg.seed);
    for (int h = 0; h < H; ++h) {
        const StepData data = step_data(demos, h);
        DescentOutcome best{std::vector<double>(d, 0.0), kInfinity, {}};
        for (int restart = 0; restart < std::max(cfg.gd.restarts, 1); ++restart) {
            std::vector<double> start(d, 0.0);
            if (restart > 0) {
                for (double& x : start) x = rng.normal();
                double norm = 0.0;
                for (double x : start) norm += x * x;
                norm = std::sqrt(norm);
                const double radius = cfg.R * std::pow(rng.uniform(), 1.0 / d);
                for (double& x : start) x *= radius / norm;
            }
            auto outcome = descend(data, features, std::move(start), kappa, cfg.R, cfg.gd);
            if (outcome.objective < best.objective) best = std::move(outcome);
        }
        result.weights.push_back(best.w);
        result.objective.push_back(best.objective);
        result.objective_trace.push_back(std::move(best.trace));
    }
    result.policy = softmax_linear_policy(features, H, result.weights, kappa);
    return result;
}

double pinsker_value_gap_bound(int H, double kl) {
    if (kl < 0.0) throw DomainError("kl must be nonnegative");
    if (std::isinf(kl)) return kInfinity;
    return H * std::sqrt(kl / 2.0);
}

double bc_tabular_kl_bound(int S, int A, int H, std::size_t N, double delta) {
    const double cap = H * std::log(static_cast<double>(N) + A);
    if (N < static_cast<std::size_t>(A)) return cap;
    const double n = static_cast<double>(N);
    const double bound = 6.0 * S * A * H * std::log(2.0 * std::exp(4.0) * n) *
                             std::log(12.0 * H * n * n / delta) / n +
                         18.0 * A * H / n;
    return std::min(bound, cap);
}

double bc_linear_kl_bound(int d, int A, int H, std::size_t N, double R, double delta) {
    const double cap = H * std::log(static_cast<double>(N) + A);
    if (N < static_cast<std::size_t>(A)) return cap;
    const double n = static_cast<double>(N);
    const double bound = 8.0 * d * H * std::log(2.0 * std::exp(3.0) * A * n) *
                             (std::log(48.0 * n * n * R) + std::log(H / delta)) / n +
                         18.0 * A * H / n;
    return std::min(bound, cap);
}

} // namespace demoreg
