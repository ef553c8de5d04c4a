#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace demoreg {

/// Raised when inputs have inconsistent shapes or invalid sizes.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numeric argument is outside the domain of an operation
/// (non-positive temperature, zero reference probability, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised by iterative solvers on non-finite objectives or gradients.
class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, std::vector<double> iterate)
        : std::runtime_error(what), iterate_(std::move(iterate)) {}
    const std::vector<double>& iterate() const noexcept { return iterate_; }

private:
    std::vector<double> iterate_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kProbTolerance = 1e-9;

/// Episodic tabular MDP. Steps are 0-based internally: h = 0..H-1.
struct TabularMdp {
    int S = 0;
    int A = 0;
    int H = 0;
    int s1 = 0;
    std::vector<double> p; ///< [h][s][a][s']
    std::vector<double> r; ///< [h][s][a]

    TabularMdp() = default;
    TabularMdp(int states, int actions, int horizon, int initial = 0);

    std::size_t sa_index(int h, int s, int a) const noexcept {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    std::span<const double> next(int h, int s, int a) const noexcept {
        return {p.data() + sa_index(h, s, a) * S, static_cast<std::size_t>(S)};
    }
    std::span<double> next(int h, int s, int a) noexcept {
        return {p.data() + sa_index(h, s, a) * S, static_cast<std::size_t>(S)};
    }
    double reward(int h, int s, int a) const noexcept { return r[sa_index(h, s, a)]; }
    double& reward(int h, int s, int a) noexcept { return r[sa_index(h, s, a)]; }

    /// Throws ConfigError if any structural invariant fails.
    void validate() const;
};

/// Per-step stochastic policy, pi[h][s] is a distribution over actions.
struct Policy {
    int H = 0;
    int S = 0;
    int A = 0;
    std::vector<double> prob; ///< [h][s][a]

    Policy() = default;
    Policy(int horizon, int states, int actions, double fill = 0.0);

    static Policy uniform(int horizon, int states, int actions);

    std::size_t index(int h, int s, int a) const noexcept {
        return (static_cast<std::size_t>(h) * S + s) * A + a;
    }
    std::span<const double> row(int h, int s) const noexcept {
        return {prob.data() + index(h, s, 0), static_cast<std::size_t>(A)};
    }
    std::span<double> row(int h, int s) noexcept {
        return {prob.data() + index(h, s, 0), static_cast<std::size_t>(A)};
    }
    double operator()(int h, int s, int a) const noexcept { return prob[index(h, s, a)]; }
    double& operator()(int h, int s, int a) noexcept { return prob[index(h, s, a)]; }

    void validate() const;
    bool matches(const TabularMdp& mdp) const noexcept {
        return H == mdp.H && S == mdp.S && A == mdp.A;
    }
    double min_entry() const;
};

struct Step {
    int s = 0;
    int a = 0;
    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    std::vector<Step> steps;
    std::optional<std::vector<double>> rewards;

    int length() const noexcept { return static_cast<int>(steps.size()); }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Q and V tables; v has H+1 layers with v[H] == 0.
struct ValueTable {
    int H = 0;
    int S = 0;
    int A = 0;
    std::vector<double> q; ///< [h][s][a]
    std::vector<double> v; ///< [h][s], h = 0..H

    ValueTable() = default;
    ValueTable(int horizon, int states, int actions)
        : H(horizon), S(states), A(actions),
          q(static_cast<std::size_t>(horizon) * states * actions, 0.0),
          v(static_cast<std::size_t>(horizon + 1) * states, 0.0) {}

    double& Q(int h, int s, int a) noexcept { return q[(static_cast<std::size_t>(h) * S + s) * A + a]; }
    double Q(int h, int s, int a) const noexcept { return q[(static_cast<std::size_t>(h) * S + s) * A + a]; }
    double& V(int h, int s) noexcept { return v[static_cast<std::size_t>(h) * S + s]; }
    double V(int h, int s) const noexcept { return v[static_cast<std::size_t>(h) * S + s]; }
    std::span<const double> q_row(int h, int s) const noexcept {
        return {q.data() + (static_cast<std::size_t>(h) * S + s) * A, static_cast<std::size_t>(A)};
    }
};

/// State-action visitation probabilities d[h][s][a].
struct OccupancyTable {
    int H = 0;
    int S = 0;
    int A = 0;
    std::vector<double> d;

    double operator()(int h, int s, int a) const noexcept {
        return d[(static_cast<std::size_t>(h) * S + s) * A + a];
    }
    double state(int h, int s) const noexcept;
};

/// KL(p || q) over a finite support with 0 log 0 = 0; +inf on support violation.
double kl_divergence(std::span<const double> p, std::span<const double> q);

} // namespace demoreg
