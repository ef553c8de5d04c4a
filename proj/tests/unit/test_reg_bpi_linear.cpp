#include "demoreg/generators.hpp"
#include "demoreg/lsvi_ent.hpp"
#include "demoreg/planning.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace demoreg;

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST_SUITE("lsvi_constants") {
    TEST_CASE("count confidence level at t = 1") {
        const double expected = 4.0 * std::log(8.0 * std::exp(1.0) * 2.0 * 3.0 / 0.5) + 4.0 * 2.0 * std::log(3.0) + 3.0;
        CHECK(lsvi_beta_cnt(2, 2, 0.5, 1.0) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(expected == doctest::Approx(34.04629107521622).epsilon(1e-14));
    }

    TEST_CASE("closed forms") {
        const auto c = lsvi_constants(4, 3, 800, 0.1);
        CHECK(c.alpha == doctest::Approx(2.0 * (lsvi_beta_cnt(4, 3, 0.1, 800.0) + 1.0)).epsilon(1e-15));
        CHECK(c.bonus_scale ==
              doctest::Approx(32.0 * 4 * 3 * std::sqrt(std::log(24.0 * std::exp(1.0) * 4 * 3 * 800 / 0.1))).epsilon(1e-14));
    }

    TEST_CASE("alpha is at least three over a grid") {
        for (int d : {1, 2, 5, 20})
            for (int H : {1, 3, 10})
                for (std::int64_t T : {1, 10, 1000, 1000000})
                    for (double delta : {1e-6, 0.1, 0.5, 0.999}) {
                        const auto c = lsvi_constants(d, H, T, delta);
                        CHECK(c.alpha >= 3.0);
                        CHECK(c.bonus_scale >= 1.0);
                    }
    }

    TEST_CASE("bonus scale is linear in d up to the root-log factor") {
        const auto one = lsvi_constants(2, 3, 100, 0.1);
        const auto two = lsvi_constants(4, 3, 100, 0.1);
        const double root_log = std::sqrt(std::log(24.0 * std::exp(1.0) * 4 * 3 * 100 / 0.1) /
                                          std::log(24.0 * std::exp(1.0) * 2 * 3 * 100 / 0.1));
        CHECK(two.bonus_scale / one.bonus_scale == doctest::Approx(2.0 * root_log).epsilon(1e-14));
    }

    TEST_CASE("invalid inputs") {
        CHECK_THROWS_AS(lsvi_constants(0, 3, 10, 0.1), ConfigError);
        CHECK_THROWS_AS(lsvi_constants(2, 3, 0, 0.1), ConfigError);
        CHECK_THROWS_AS(lsvi_constants(2, 3, 10, 1.0), ConfigError);
    }
}

TEST_SUITE("lsvi_backup") {
    TEST_CASE("without data the upper Q is the bonus alone") {
        const auto lin = generate_random_linear(5, 2, 3, 3, 1);
        LsviState st(5, 2, 3, 3, lsvi_constants(3, 3, 100, 0.1));
        lsvi_backup(st, Policy::uniform(3, 5, 2), 1.0, lin.features);
        for (int h = 0; h < 3; ++h) {
            CHECK(st.uw[h].norm() == 0.0);
            CHECK(st.lw[h].norm() == 0.0);
            for (int s = 0; s < 5; ++s) {
                for (int a = 0; a < 2; ++a) {
                    double n2 = 0.0;
                    for (double x : lin.features(s, a)) n2 += x * x;
                    const double expected = st.bonus_scale / std::sqrt(st.alpha) * std::sqrt(n2);
                    CHECK(st.uQ[st.cell(h, s, a)] == doctest::Approx(expected).epsilon(1e-12));
                }
                CHECK(st.uV[st.state_cell(h, s)] <= 3.0);
                CHECK(st.lV[st.state_cell(h, s)] >= 0.0);
            }
        }
    }

    TEST_CASE("one-hot features with exact targets reproduce the tabular backup") {
        const auto m = generate_random_tabular(3, 2, 3, 4);
        const auto lin = linear_from_tabular(m);
        LsviConstants c{1.0, 1.0};
        LsviState st(3, 2, 3, 6, c);
        const double mass = 1e10;
        for (int h = 0; h < 3; ++h)
            for (int s = 0; s < 3; ++s)
                for (int a = 0; a < 2; ++a) {
                    if (h + 1 == 3) {
                        st.add(lin.features, h, s, a, m.reward(h, s, a), -1, mass);
                        continue;
                    }
                    for (int sp = 0; sp < 3; ++sp)
                        st.add(lin.features, h, s, a, m.reward(h, s, a), sp, mass * m.next(h, s, a)[sp]);
                }
        Rng rng(2);
        const auto ref = support::random_policy(3, 3, 2, rng);
        lsvi_backup(st, ref, 0.5, lin.features, 0.0);
        const auto [vt, pi] = regularized_value_iteration(m, ref, 0.5);
        for (std::size_t i = 0; i < vt.q.size(); ++i) {
            CHECK(std::abs(st.uQ[i] - vt.q[i]) < 1e-6);
            CHECK(std::abs(st.lQ[i] - vt.q[i]) < 1e-6);
            CHECK(std::abs(st.bar_pi.prob[i] - pi.prob[i]) < 1e-6);
        }
    }

    TEST_CASE("mismatched inputs") {
        const auto lin = generate_random_linear(5, 2, 3, 3, 1);
        LsviState st(5, 2, 3, 3, lsvi_constants(3, 3, 100, 0.1));
        CHECK_THROWS_AS(lsvi_backup(st, Policy::uniform(3, 4, 2), 1.0, lin.features), ConfigError);
        CHECK_THROWS_AS(lsvi_backup(st, Policy::uniform(3, 5, 2), 0.0, lin.features), DomainError);
        const auto other = generate_random_linear(5, 2, 3, 2, 1);
        CHECK_THROWS_AS(lsvi_backup(st, Policy::uniform(3, 5, 2), 1.0, other.features), ConfigError);
    }
}

TEST_SUITE("run_lsvi_ent") {
    const LinearMdp& instance() {
        static const LinearMdp lin = generate_random_linear(6, 2, 3, 4, 7);
        return lin;
    }

    TEST_CASE("a single episode returns the first optimistic policy") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto ref = Policy::uniform(3, 6, 2);
        const auto res = run_lsvi_ent(env, lin.features, ref, 1.0, 1, 0.1, 0);
        REQUIRE(res.mixture.components.size() == 1);
        LsviState st(6, 2, 3, 4, lsvi_constants(4, 3, 1, 0.1));
        lsvi_backup(st, ref, 1.0, lin.features);
        CHECK(res.mixture.components[0].prob == st.bar_pi.prob);
    }

    TEST_CASE("mixture value is the mean of the component values") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto ref = Policy::uniform(3, 6, 2);
        const auto res = run_lsvi_ent(env, lin.features, ref, 1.0, 40, 0.1, 3);
        CHECK(res.mixture.components.size() == 40);
        double mean = 0.0;
        for (const auto& pi : res.mixture.components)
            mean += policy_evaluation_regularized(lin.latent_tabular, pi, ref, 1.0).V(0, 0) / 40;
        CHECK(std::abs(mixture_value_regularized(lin.latent_tabular, res.mixture, ref, 1.0) - mean) <= 1e-10);
    }

    TEST_CASE("gram growth, bonus shrinkage and weight bound") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        std::vector<Eigen::MatrixXd> previous;
        std::vector<double> prev_quad;
        const Eigen::Map<const Eigen::VectorXd> probe(lin.features(2, 1).data(), 4);
        bool ok = true;
        LsviOptions opts;
        opts.observer = [&](const LsviEpisodeView& view) {
            const auto& st = view.state;
            for (int h = 0; h < 3; ++h) {
                const double quad = probe.dot(st.gram[h].llt().solve(probe));
                if (!previous.empty()) {
                    const Eigen::MatrixXd diff = st.gram[h] - previous[h];
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff);
                    const auto& ev = eig.eigenvalues();
                    if (ev.minCoeff() < -1e-9) ok = false;
                    int rank = 0;
                    for (Eigen::Index i = 0; i < ev.size(); ++i) rank += ev[i] > 1e-9;
                    if (rank > 1) ok = false;
                    if (quad > prev_quad[h] + 1e-15) ok = false;
                }
                if (prev_quad.size() < 3) prev_quad.resize(3);
                prev_quad[h] = quad;
                for (std::size_t i = 0; i < st.uQ.size(); ++i)
                    if (st.lQ[i] > st.uQ[i]) ok = false;
            }
            previous = st.gram;
        };
        const auto res = run_lsvi_ent(env, lin.features, Policy::uniform(3, 6, 2), 1.0, 200, 0.1, 5, opts);
        CHECK(ok);
        CHECK(res.max_weight_ratio <= 1.0);
        for (std::size_t t = 1; t < res.telemetry.size(); ++t)
            for (int h = 0; h < 3; ++h) CHECK(res.telemetry[t].log_det[h] >= res.telemetry[t - 1].log_det[h] - 1e-12);
    }

    TEST_CASE("exploratory index stays in the configured range") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        for (int first : {0, 1}) {
            std::vector<int> seen(4, 0);
            LsviOptions opts;
            opts.h_prime_first = first;
            opts.record_telemetry = false;
            opts.observer = [&](const LsviEpisodeView& view) { ++seen[view.h_prime]; };
            run_lsvi_ent(env, lin.features, Policy::uniform(3, 6, 2), 1.0, 400, 0.1, 9, opts);
            CHECK((seen[0] > 0) == (first == 0));
            for (int h = 1; h <= 3; ++h) CHECK(seen[h] > 0);
        }
    }

    TEST_CASE("seeded runs are reproducible") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto a = run_lsvi_ent(env, lin.features, Policy::uniform(3, 6, 2), 1.0, 30, 0.1, 4);
        const auto b = run_lsvi_ent(env, lin.features, Policy::uniform(3, 6, 2), 1.0, 30, 0.1, 4);
        for (std::size_t i = 0; i < a.mixture.components.size(); ++i)
            CHECK(a.mixture.components[i].prob == b.mixture.components[i].prob);
    }

    TEST_CASE("Q* stays inside the intervals in at least 90 of 100 runs") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto ref = Policy::uniform(3, 6, 2);
        const auto qstar = regularized_value_iteration(lin.latent_tabular, ref, 1.0).first;
        int good = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            bool ok = true;
            LsviOptions opts;
            opts.record_telemetry = false;
            opts.observer = [&](const LsviEpisodeView& view) {
                for (std::size_t i = 0; i < qstar.q.size(); ++i)
                    if (qstar.q[i] > view.state.uQ[i] || qstar.q[i] < view.state.lQ[i]) ok = false;
            };
            run_lsvi_ent(env, lin.features, ref, 1.0, 50, 0.1, seed, opts);
            good += ok;
        }
        CHECK(good >= 90);
    }

    TEST_CASE("median mixture suboptimality decreases with the budget") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto ref = Policy::uniform(3, 6, 2);
        const double vstar = regularized_value_iteration(lin.latent_tabular, ref, 1.0).first.V(0, 0);
        std::vector<double> medians;
        for (std::int64_t T : {50, 200, 800}) {
            std::vector<double> gaps;
            LsviOptions opts;
            opts.record_telemetry = false;
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                const auto res = run_lsvi_ent(env, lin.features, ref, 1.0, T, 0.1, seed, opts);
                gaps.push_back(vstar - mixture_value_regularized(lin.latent_tabular, res.mixture, ref, 1.0));
            }
            medians.push_back(median_of(gaps));
        }
        CHECK(medians[1] < medians[0]);
        CHECK(medians[2] < medians[1]);
    }

    TEST_CASE("telemetry reports the running mixture suboptimality") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto ref = Policy::uniform(3, 6, 2);
        LsviOptions opts;
        opts.oracle = &lin.latent_tabular;
        const auto res = run_lsvi_ent(env, lin.features, ref, 1.0, 25, 0.1, 1, opts);
        const double vstar = regularized_value_iteration(lin.latent_tabular, ref, 1.0).first.V(0, 0);
        CHECK(res.telemetry.back().suboptimality ==
              doctest::Approx(vstar - mixture_value_regularized(lin.latent_tabular, res.mixture, ref, 1.0)).epsilon(1e-12));
    }

    TEST_CASE("configuration errors") {
        const auto& lin = instance();
        TabularEnvironment env(lin.latent_tabular);
        const auto ref = Policy::uniform(3, 6, 2);
        CHECK_THROWS_AS(run_lsvi_ent(env, lin.features, ref, 1.0, 0, 0.1, 0), ConfigError);
        const auto other = generate_random_linear(5, 2, 3, 4, 1);
        CHECK_THROWS_AS(run_lsvi_ent(env, other.features, ref, 1.0, 5, 0.1, 0), ConfigError);
        CHECK_THROWS_AS(run_lsvi_ent(env, lin.features, Policy::uniform(2, 6, 2), 1.0, 5, 0.1, 0), ConfigError);
    }
}
