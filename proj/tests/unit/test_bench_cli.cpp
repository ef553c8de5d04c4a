#include "demoreg/experiment.hpp"

#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace demoreg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("demoreg_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome {
    int code;
    std::string err;
};

Outcome cli(const std::string& args, const fs::path& dir) {
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string(DEMOREG_CLI_PATH) + ' ' + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

io::json small_config() {
    return io::json::parse(R"({
        "instance": {"generator": "river", "S": 3, "H": 3},
        "algorithm": "bpi",
        "grid": {"lambda": [0.5, 1.0, 2.0], "eps": [1.0]},
        "seeds": [0, 1, 2, 3, 4],
        "oracle_diagnostics": true,
        "max_episodes": 3000
    })");
}

std::vector<SweepRow> synthetic(const std::vector<std::size_t>& ns, int seeds, auto episodes) {
    std::vector<SweepRow> rows;
    for (auto n : ns)
        for (int s = 0; s < seeds; ++s) {
            SweepRow r;
            r.algorithm = "rl";
            r.n_exp = n;
            r.lambda_grid = std::numeric_limits<double>::quiet_NaN();
            r.eps = 0.5;
            r.delta = 0.1;
            r.seed = static_cast<std::uint64_t>(s);
            r.episodes = episodes(n, s);
            rows.push_back(r);
        }
    return rows;
}

} // namespace

TEST_SUITE("experiment_config") {
    TEST_CASE("round trip through JSON") {
        const auto cfg = experiment_config_from_json(small_config());
        CHECK(cfg.algorithm == "bpi");
        CHECK(cfg.lambda == std::vector<double>{0.5, 1.0, 2.0});
        CHECK(cfg.seeds.size() == 5);
        const auto again = experiment_config_from_json(experiment_config_to_json(cfg));
        CHECK(io::dump(experiment_config_to_json(again)) == io::dump(experiment_config_to_json(cfg)));
    }

    TEST_CASE("invalid configs are rejected") {
        auto with = [](const char* patch) {
            auto j = small_config();
            j.merge_patch(io::json::parse(patch));
            return j;
        };
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"bogus": 1})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"seeds": []})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"seeds": [1, 1]})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"grid": {"lambda": []}})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"algorithm": "rl"})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"algorithm": "magic"})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"grid": {"eps": [0.0]}})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"grid": {"delta": [1.0]}})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"max_episodes": "many"})")), ConfigError);
        CHECK_THROWS_AS(experiment_config_from_json(with(R"({"instance": {"colour": 1}})")), ConfigError);
        CHECK_THROWS_AS(build_instance(InstanceSpec{.generator = "nope"}, 0.1), ConfigError);
    }
}

TEST_SUITE("sweep") {
    TEST_CASE("three grid points and five seeds give fifteen rows, reproducibly") {
        const auto cfg = experiment_config_from_json(small_config());
        const auto a = scratch("sweep_a"), b = scratch("sweep_b");
        const auto rows = run_sweep(cfg, a);
        CHECK(rows.size() == 15);
        run_sweep(cfg, b);
        const auto csv = slurp(a / "results.csv");
        CHECK(csv == slurp(b / "results.csv"));
        CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);

        const auto back = read_results(a / "results.csv");
        REQUIRE(back.size() == 15);
        for (std::size_t i = 0; i < 15; ++i) {
            CHECK(results_row(back[i]) == results_row(rows[i]));
            CHECK(rows[i].seed == i % 5);
            CHECK(rows[i].lambda_grid == cfg.lambda[i / 5]);
            CHECK_FALSE(std::isnan(rows[i].suboptimality));
            CHECK(std::isnan(rows[i].wallclock_ms));
        }
        const auto manifest = io::parse_file(a / "manifest.json");
        CHECK(manifest["rows"].size() == 15);
        CHECK(manifest["complete"] == true);
        CHECK(manifest["rows"][7]["derived_seeds"]["pipeline"].get<std::uint64_t>() ==
              derive_seed(rows[7].seed, "pipeline"));
    }

    TEST_CASE("worker count does not change the output") {
        auto j = small_config();
        j["workers"] = 3;
        const auto a = scratch("workers_1"), b = scratch("workers_3");
        run_sweep(experiment_config_from_json(small_config()), a);
        run_sweep(experiment_config_from_json(j), b);
        CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
    }

    TEST_CASE("suboptimality is present exactly when diagnostics are on") {
        auto j = small_config();
        j["oracle_diagnostics"] = false;
        j["seeds"] = {0};
        for (const auto& row : run_sweep(experiment_config_from_json(j), scratch("plain")))
            CHECK(std::isnan(row.suboptimality));
    }

    TEST_CASE("pipeline rows trace back to the manifest") {
        auto j = io::json::parse(R"({
            "instance": {"generator": "random", "S": 3, "A": 2, "H": 2, "seed": 4},
            "algorithm": "rl", "lambda_expert": 0.1,
            "grid": {"n_exp": [50, 500], "eps": [1.0]},
            "seeds": [3, 8], "oracle_diagnostics": true
        })");
        const auto dir = scratch("rl");
        const auto rows = run_sweep(experiment_config_from_json(j), dir);
        const auto manifest = io::parse_file(dir / "manifest.json");
        REQUIRE(rows.size() == 4);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& entry = manifest["rows"][i];
            CHECK(entry["seed"].get<std::uint64_t>() == rows[i].seed);
            CHECK(entry["n_exp"].get<std::size_t>() == rows[i].n_exp);
            CHECK(entry["bound_holds"] == true);
            CHECK(entry["demos_hash"].get<std::string>().size() == 16);
            CHECK(rows[i].suboptimality <= rows[i].bound + 1e-9);
        }
    }
}

TEST_SUITE("scaling_summary") {
    TEST_CASE("exact inverse power law has slope minus one") {
        const auto rows = synthetic({100, 1000, 10000}, 5, [](std::size_t n, int) {
            return static_cast<std::int64_t>(100'000'000 / n);
        });
        const auto s = scaling_summary(rows);
        REQUIRE(s.size() == 1);
        CHECK(std::abs(s[0].slope + 1.0) <= 1e-9);
        CHECK(std::abs(s[0].ci_low + 1.0) <= 1e-9);
        CHECK(std::abs(s[0].ci_high + 1.0) <= 1e-9);
        CHECK(s[0].intercept == doctest::Approx(std::log(1e8)));
    }

    TEST_CASE("constant episodes have slope zero") {
        const auto rows = synthetic({10, 20, 40, 80}, 6, [](std::size_t, int) { return std::int64_t{777}; });
        CHECK(scaling_summary(rows)[0].slope == 0.0);
    }

    TEST_CASE("slope uses medians and the CI brackets it") {
        const auto rows = synthetic({100, 1000, 10000}, 7, [](std::size_t n, int s) {
            return static_cast<std::int64_t>(1e7 / std::sqrt(static_cast<double>(n)) * (1 + 0.1 * s));
        });
        const auto s = scaling_summary(rows)[0];
        std::vector<double> x, y;
        for (std::size_t n : {100, 1000, 10000}) {
            std::vector<double> e;
            for (const auto& r : rows)
                if (r.n_exp == n) e.push_back(static_cast<double>(r.episodes));
            std::sort(e.begin(), e.end());
            x.push_back(std::log(static_cast<double>(n)));
            y.push_back(std::log(e[3]));
        }
        const double slope = (y[2] - y[0]) / (x[2] - x[0]);
        CHECK(s.slope == doctest::Approx(slope).epsilon(1e-12));
        CHECK(s.ci_low <= s.slope);
        CHECK(s.ci_high >= s.slope);
        CHECK(s.median_episodes.size() == 3);
    }

    TEST_CASE("insufficient data is a configuration error") {
        auto per_n = [](std::size_t n, int) { return static_cast<std::int64_t>(n); };
        CHECK_THROWS_AS(scaling_summary(synthetic({100, 1000}, 5, per_n)), ConfigError);
        CHECK_THROWS_AS(scaling_summary(synthetic({100, 1000, 10000}, 4, per_n)), ConfigError);
        CHECK_THROWS_AS(scaling_summary({}), ConfigError);
    }

    TEST_CASE("helpers") {
        CHECK(median({3.0, 1.0, 2.0}) == 2.0);
        CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
        const double x[] = {1, 2, 3, 4}, y[] = {5, 7, 9, 11};
        const auto [slope, intercept] = least_squares(x, y);
        CHECK(slope == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(intercept == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(content_hash("") == "cbf29ce484222325");
        CHECK(content_hash("a") == "af63dc4c8601ec8c");
        CHECK(content_hash("foobar") == "85944171f73967e8");
    }

    TEST_CASE("results header is fixed") {
        CHECK(results_columns() == std::vector<std::string>{"algorithm", "n_exp", "n_rm", "lambda_grid", "eps",
                                                            "delta", "seed", "episodes", "stopped", "lambda",
                                                            "suboptimality", "kl", "eps_rm_sq", "bound",
                                                            "wallclock_ms"});
    }
}

TEST_SUITE("cli") {
    TEST_CASE("malformed config exits 2 with a one-line diagnostic") {
        const auto dir = scratch("malformed");
        std::ofstream(dir / "config.json") << "{\"seeds\": [1, 2,";
        const auto out = cli("run --config " + (dir / "config.json").string() + " --out " + (dir / "res").string(), dir);
        CHECK(out.code == 2);
        CHECK(std::count(out.err.begin(), out.err.end(), '\n') == 1);
        std::ofstream(dir / "config2.json") << R"({"seeds": [1, 1]})";
        CHECK(cli("run --config " + (dir / "config2.json").string(), dir).code == 2);
    }

    TEST_CASE("usage errors exit 2") {
        const auto dir = scratch("usage");
        CHECK(cli("gen-demos", dir).code == 2);
        CHECK(cli("no-such-command", dir).code == 2);
        CHECK(cli("gen-mdp --kind river --S 1 --out " + (dir / "m.json").string(), dir).code == 2);
        CHECK(cli("solve-exact --mdp " + (dir / "absent.json").string(), dir).code == 2);
    }

    TEST_CASE("unwritable output exits 3") {
        const auto dir = scratch("runtime");
        CHECK(cli("gen-mdp --kind river --S 3 --H 3 --out /dev/null/mdp.json", dir).code == 3);
    }

    TEST_CASE("scaling-summary needs enough data") {
        const auto dir = scratch("summary");
        auto j = small_config();
        j["seeds"] = {0, 1};
        std::ofstream(dir / "config.json") << j.dump();
        REQUIRE(cli("run --config " + (dir / "config.json").string() + " --out " + (dir / "res").string(), dir).code == 0);
        CHECK(cli("scaling-summary --results " + (dir / "res" / "results.csv").string() + " --out " +
                      (dir / "summary.csv").string(),
                  dir)
                  .code == 2);
    }

    TEST_CASE("command chain is byte-reproducible") {
        const auto dir = scratch("chain");
        auto run_all = [&](const fs::path& out) {
            fs::create_directories(out);
            const auto p = [&](const char* name) { return (out / name).string(); };
            std::ofstream(out / "config.json") << small_config().dump();
            const std::vector<std::string> cmds{
                "--seed 3 gen-mdp --kind random --S 3 --A 2 --H 3 --out " + p("mdp.json"),
                "--seed 3 gen-mdp --kind linear --S 4 --A 2 --H 2 --d 2 --out " + p("lin.json"),
                "--seed 4 gen-demos --mdp " + p("mdp.json") + " --n 200 --out " + p("demos.jsonl"),
                "--seed 4 gen-demos --mdp " + p("lin.json") + " --n 100 --out " + p("lin_demos.jsonl"),
                "--oracle-diagnostics bc --mdp " + p("mdp.json") + " --demos " + p("demos.jsonl") + " --out " +
                    p("bc.json"),
                "--seed 5 bc --mode linear --mdp " + p("lin.json") + " --demos " + p("lin_demos.jsonl") + " --out " +
                    p("bc_lin.json"),
                "solve-exact --mdp " + p("mdp.json") + " --lambda 0.5 --ref " + p("bc.json") + " --out " + p("sol.json"),
                "--seed 6 --oracle-diagnostics bpi-tabular --mdp " + p("mdp.json") +
                    " --lambda 1 --eps 1 --max-episodes 2000 --telemetry-every 100 --out " + p("bpi"),
                "--seed 6 --oracle-diagnostics bpi-linear --mdp " + p("lin.json") + " --lambda 1 --T 30 --out " +
                    p("lsvi"),
                "--seed 7 --oracle-diagnostics rlhf --mdp " + p("mdp.json") + " --demos " + p("demos.jsonl") +
                    " --n-rm 300 --eps 2 --max-episodes 2000 --out " + p("rlhf"),
                "run --config " + p("config.json") + " --out " + p("sweep"),
            };
            for (const auto& c : cmds) CHECK_MESSAGE(cli(c, out).code == 0, c);
        };
        const auto work = dir / "work";
        run_all(work);
        fs::copy(work, dir / "first", fs::copy_options::recursive);
        run_all(work);
        int compared = 0;
        for (const auto& entry : fs::recursive_directory_iterator(dir / "first")) {
            if (!entry.is_regular_file() || entry.path().filename() == "stderr.txt") continue;
            const auto rel = fs::relative(entry.path(), dir / "first");
            CHECK_MESSAGE(slurp(entry.path()) == slurp(work / rel), rel.string());
            ++compared;
        }
        CHECK(compared >= 15);
    }
}
