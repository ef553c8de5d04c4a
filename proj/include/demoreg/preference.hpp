#pragma once

#include "demoreg/linear_mdp.hpp"
#include "demoreg/rng.hpp"
#include "demoreg/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace demoreg {

class TransitionSampler;

/// Monotone link sigma mapping reward differences to preference probabilities.
struct LinkFunction {
    enum class Kind { sigmoid, custom };

    Kind kind = Kind::sigmoid;
    std::function<double(double)> sigma;
    std::function<double(double)> derivative;
    double zeta = 0.0; ///< 1 / inf_{|x| <= H} sigma'(x)

    /// Logistic link; zeta = (1 + e^H)^2 / e^H.
    static LinkFunction sigmoid(int H);

    /// Throws ConfigError unless sigma is strictly increasing on [-H, H]
    /// (checked on a grid) and zeta is finite and positive.
    static LinkFunction custom(std::function<double(double)> sigma,
                               std::function<double(double)> derivative, double zeta, int H);

    double operator()(double x) const { return sigma(x); }
};

/// 1 / min_{|x| <= H} sigma'(x): grid scan, golden-section refinement, end points.
double numeric_zeta(const LinkFunction& link, int H);

struct PreferenceRecord {
    Trajectory tau0;
    Trajectory tau1;
    int o = 0; ///< 1 when tau1 is preferred
};

struct PreferenceDataset {
    int S = 0;
    int A = 0;
    int H = 0;
    std::string sampler_policy_id;
    std::vector<PreferenceRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
    /// Throws ConfigError on any length, index, or label violation.
    void validate() const;
};

/// Holds the hidden reward table; learners only see sampled bits.
class PreferenceOracle {
public:
    PreferenceOracle(int S, int A, int H, std::vector<double> rewards, LinkFunction link);

    /// P(o = 1) = sigma(r(tau1) - r(tau0)).
    double probability(const Trajectory& tau0, const Trajectory& tau1) const;
    int query(const Trajectory& tau0, const Trajectory& tau1, Rng& rng) const;
    const LinkFunction& link() const noexcept { return link_; }

private:
    int S_, A_, H_;
    std::vector<double> rewards_;
    LinkFunction link_;
};

/// Seeded single query against a reward table [h][s][a].
int preference_oracle(std::span<const double> rewards, int S, int A, const Trajectory& tau0,
                      const Trajectory& tau1, const LinkFunction& link, std::uint64_t seed);

/// n i.i.d. pairs of reward-free trajectories under `sampler`, labelled by the oracle.
PreferenceDataset collect_preferences(const TransitionSampler& env, const Policy& sampler,
                                      std::size_t n, const PreferenceOracle& oracle,
                                      std::uint64_t seed, std::string sampler_id = "");

enum class RewardKind { tabular, linear };

/// Trajectory-reward class: tabular cells in [0,1] or per-step linear with ||theta_h|| <= sqrt(d).
struct RewardClass {
    RewardKind kind = RewardKind::tabular;
    int S = 0;
    int A = 0;
    int H = 0;
    FeatureMap features; ///< linear only

    static RewardClass tabular(int S, int A, int H);
    static RewardClass linear(const FeatureMap& features, int H);
    int dimension() const noexcept;
};

struct RewardModel {
    RewardClass cls;
    std::vector<double> params; ///< tabular [h][s][a]; linear [h][i]
    bool empty_data = false;    ///< set when fitted on an empty dataset

    /// Per-cell rewards [h][s][a].
    std::vector<double> cell_rewards() const;
    double trajectory_reward(const Trajectory& tau) const;
};

struct MleConfig {
    int max_iters = 50'000;
    double grad_tol = 1e-6; ///< on the projected-gradient mapping
    double initial_step = 1.0;
};

struct MleResult {
    RewardModel model;
    double objective = 0.0;     ///< mean log-likelihood at the returned parameters
    double gradient_norm = 0.0; ///< projected-gradient mapping norm at the end
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; ///< accepted iterates, nondecreasing
};

/// Mean log-likelihood of the dataset at `params` of class `cls`.
double preference_log_likelihood(const PreferenceDataset& data, const RewardClass& cls,
                                 const LinkFunction& link, std::span<const double> params);

/// Euclidean projection onto the class constraint set.
void project_reward_params(const RewardClass& cls, std::span<double> params);

/// Maximum-likelihood reward by projected accelerated ascent with monotone restarts.
MleResult reward_mle(const PreferenceDataset& data, const RewardClass& cls, const LinkFunction& link,
                     const MleConfig& cfg = {});

/// sigma(r_hat(tau1) - r_hat(tau0)).
double predicted_preference(const RewardModel& model, const Trajectory& tau0, const Trajectory& tau1,
                            const LinkFunction& link);

struct VarianceEstimate {
    double variance = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo Var[r*(tau) - r_hat(tau)] over trajectories of `policy`.
/// Both reward tables are [h][s][a]. Throws ConfigError if n_mc < 2.
VarianceEstimate reward_error_variance(std::span<const double> r_hat, std::span<const double> r_star,
                                       const Policy& policy, const TransitionSampler& env,
                                       std::size_t n_mc, std::uint64_t seed);

} // namespace demoreg
