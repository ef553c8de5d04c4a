#include "demoreg/experiment.hpp"

#include "demoreg/generators.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace demoreg {

namespace {

using io::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "'");
    }
}

template <class T>
std::vector<T> get_list(const json& j, const char* key, std::vector<T> fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j[key];
    if (!v.is_array()) return {get<T>(j, key, T{})};
    std::vector<T> out;
    for (const auto& x : v) {
        try {
            out.push_back(x.get<T>());
        } catch (const json::exception&) {
            throw ConfigError(std::string("bad entry in '") + key + "'");
        }
    }
    return out;
}

std::string csv_double(double x) { return std::isnan(x) ? "" : io::format_double(x); }

double parse_double(const std::string& s) {
    if (s.empty()) return kNaN;
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    try {
        std::size_t used = 0;
        const double x = std::stod(s, &used);
        if (used != s.size()) throw ConfigError("bad number '" + s + "'");
        return x;
    } catch (const std::logic_error&) {
        throw ConfigError("bad number '" + s + "'");
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

json budgets_json(const PipelineBudgets& b) {
    json j;
    j["eps_exp"] = b.eps_exp;
    j["eps_kl_sq"] = b.eps_kl_sq;
    j["eps_rl"] = b.eps_rl;
    j["eps_rm_sq"] = b.eps_rm_sq;
    j["lambda"] = b.lambda;
    j["n_exp"] = b.n_exp;
    j["n_rm"] = b.n_rm;
    j["delta"] = b.delta;
    j["delta_split"] = b.delta_split;
    j["kl_measured"] = b.kl_measured;
    return j;
}

} // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
    check_keys(j, {"instance", "algorithm", "mode", "lambda_expert", "grid", "seeds", "oracle_diagnostics",
                   "record_wallclock", "workers", "c_kl", "max_episodes", "lsvi_episodes", "n_mc"},
               "config");
    ExperimentConfig cfg;
    if (j.contains("instance")) {
        const json& in = j["instance"];
        check_keys(in, {"generator", "path", "S", "A", "H", "d", "sparsity", "seed"}, "instance");
        auto& s = cfg.instance;
        s.generator = get<std::string>(in, "generator", in.contains("path") ? "file" : "river");
        s.path = get<std::string>(in, "path", "");
        s.S = get<int>(in, "S", s.S);
        s.A = get<int>(in, "A", s.A);
        s.H = get<int>(in, "H", s.H);
        s.d = get<int>(in, "d", s.d);
        s.sparsity = get<double>(in, "sparsity", s.sparsity);
        s.seed = get<std::uint64_t>(in, "seed", s.seed);
    }
    cfg.algorithm = get<std::string>(j, "algorithm", cfg.algorithm);
    if (cfg.algorithm != "rl" && cfg.algorithm != "rlhf" && cfg.algorithm != "bpi" && cfg.algorithm != "bc")
        throw ConfigError("unknown algorithm '" + cfg.algorithm + "'");
    const auto mode = get<std::string>(j, "mode", "tabular");
    if (mode != "tabular" && mode != "linear") throw ConfigError("unknown mode '" + mode + "'");
    cfg.mode = mode == "tabular" ? PipelineMode::tabular : PipelineMode::linear;
    cfg.lambda_expert = get<double>(j, "lambda_expert", cfg.lambda_expert);
    if (j.contains("grid")) {
        const json& g = j["grid"];
        check_keys(g, {"n_exp", "n_rm", "lambda", "eps", "delta"}, "grid");
        cfg.n_exp = get_list<std::size_t>(g, "n_exp", cfg.n_exp);
        cfg.n_rm = get_list<std::size_t>(g, "n_rm", cfg.n_rm);
        cfg.lambda = get_list<double>(g, "lambda", cfg.lambda);
        cfg.eps = get_list<double>(g, "eps", cfg.eps);
        cfg.delta = get_list<double>(g, "delta", cfg.delta);
    }
    cfg.seeds = get_list<std::uint64_t>(j, "seeds", cfg.seeds);
    cfg.oracle_diagnostics = get<bool>(j, "oracle_diagnostics", false);
    cfg.record_wallclock = get<bool>(j, "record_wallclock", false);
    cfg.workers = get<int>(j, "workers", 1);
    cfg.c_kl = get<double>(j, "c_kl", cfg.c_kl);
    cfg.max_episodes = get<std::int64_t>(j, "max_episodes", cfg.max_episodes);
    cfg.lsvi_episodes = get<std::int64_t>(j, "lsvi_episodes", cfg.lsvi_episodes);
    cfg.n_mc = get<std::size_t>(j, "n_mc", cfg.n_mc);

    if (cfg.n_exp.empty() || cfg.n_rm.empty() || cfg.eps.empty() || cfg.delta.empty() || cfg.seeds.empty())
        throw ConfigError("grids and seeds must be nonempty");
    if (cfg.algorithm == "bpi" && cfg.lambda.empty()) throw ConfigError("bpi sweeps need a lambda grid");
    if (cfg.algorithm != "bpi" && !cfg.lambda.empty())
        throw ConfigError("lambda grid is only used by bpi sweeps");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
        throw ConfigError("seeds must be distinct");
    if (cfg.workers < 1) throw ConfigError("workers must be positive");
    for (double e : cfg.eps)
        if (!(e > 0.0)) throw ConfigError("eps must be positive");
    for (double d : cfg.delta)
        if (!(d > 0.0 && d < 1.0)) throw ConfigError("delta must lie in (0,1)");
    for (double l : cfg.lambda)
        if (!(l > 0.0)) throw ConfigError("lambda must be positive");
    if (cfg.mode == PipelineMode::linear && cfg.algorithm == "rlhf" && cfg.instance.generator != "random_linear" &&
        cfg.instance.generator != "file")
        throw ConfigError("linear mode needs a linear instance");
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    json j;
    const auto& s = cfg.instance;
    j["instance"] = {{"generator", s.generator}, {"path", s.path}, {"S", s.S}, {"A", s.A}, {"H", s.H},
                     {"d", s.d}, {"sparsity", s.sparsity}, {"seed", s.seed}};
    j["algorithm"] = cfg.algorithm;
    j["mode"] = cfg.mode == PipelineMode::tabular ? "tabular" : "linear";
    j["lambda_expert"] = cfg.lambda_expert;
    j["grid"] = {{"n_exp", cfg.n_exp}, {"n_rm", cfg.n_rm}, {"lambda", cfg.lambda}, {"eps", cfg.eps},
                 {"delta", cfg.delta}};
    j["seeds"] = cfg.seeds;
    j["oracle_diagnostics"] = cfg.oracle_diagnostics;
    j["record_wallclock"] = cfg.record_wallclock;
    j["workers"] = cfg.workers;
    j["c_kl"] = cfg.c_kl;
    j["max_episodes"] = cfg.max_episodes;
    j["lsvi_episodes"] = cfg.lsvi_episodes;
    j["n_mc"] = cfg.n_mc;
    return j;
}

Instance build_instance(const InstanceSpec& spec, double lambda_expert) {
    Instance inst;
    if (spec.generator == "river") {
        inst.mdp = generate_river_swim(spec.S, spec.H, {}, spec.A);
    } else if (spec.generator == "chain") {
        inst.mdp = generate_chain(spec.S, spec.A, spec.H);
    } else if (spec.generator == "random") {
        inst.mdp = generate_random_tabular(spec.S, spec.A, spec.H, spec.seed, spec.sparsity);
    } else if (spec.generator == "random_linear") {
        inst.linear = generate_random_linear(spec.S, spec.A, spec.H, spec.d, spec.seed);
        inst.mdp = inst.linear->latent_tabular;
    } else if (spec.generator == "file") {
        auto file = io::read_mdp(spec.path);
        inst.mdp = std::move(file.tabular);
        inst.linear = std::move(file.linear);
    } else {
        throw ConfigError("unknown generator '" + spec.generator + "'");
    }
    if (!(lambda_expert > 0.0)) throw ConfigError("lambda_expert must be positive");
    if (inst.linear)
        inst.expert = softmax_linear_policy(inst.linear->features, inst.linear->H,
                                            linear_expert_weights(*inst.linear, lambda_expert));
    else
        inst.expert = generate_expert(inst.mdp, lambda_expert).policy;
    return inst;
}

const std::vector<std::string>& results_columns() {
    static const std::vector<std::string> cols{
        "algorithm", "n_exp",         "n_rm", "lambda_grid", "eps",   "delta",       "seed", "episodes",
        "stopped",   "lambda",        "suboptimality", "kl",  "eps_rm_sq", "bound", "wallclock_ms"};
    return cols;
}

std::string results_row(const SweepRow& r) {
    std::string out = r.algorithm;
    auto add = [&](const std::string& cell) {
        out += ',';
        out += cell;
    };
    add(std::to_string(r.n_exp));
    add(std::to_string(r.n_rm));
    add(csv_double(r.lambda_grid));
    add(csv_double(r.eps));
    add(csv_double(r.delta));
    add(std::to_string(r.seed));
    add(std::to_string(r.episodes));
    add(r.stopped ? "1" : "0");
    add(csv_double(r.lambda));
    add(csv_double(r.suboptimality));
    add(csv_double(r.kl));
    add(csv_double(r.eps_rm_sq));
    add(csv_double(r.bound));
    add(csv_double(r.wallclock_ms));
    return out;
}

SweepRow run_point(const ExperimentConfig& cfg, const Instance& inst, std::size_t n_exp, std::size_t n_rm,
                   std::optional<double> lambda, double eps, double delta, std::uint64_t seed, json* manifest) {
    const auto start = std::chrono::steady_clock::now();
    const TabularMdp& mdp = inst.mdp;
    const TabularEnvironment env(mdp);
    const bool linear = cfg.mode == PipelineMode::linear;
    if (linear && !inst.linear) throw ConfigError("linear mode needs a linear instance");

    SweepRow row;
    row.algorithm = cfg.algorithm;
    row.n_exp = n_exp;
    row.n_rm = n_rm;
    row.lambda_grid = lambda.value_or(kNaN);
    row.eps = eps;
    row.delta = delta;
    row.seed = seed;
    row.suboptimality = row.kl = row.eps_rm_sq = row.bound = row.wallclock_ms = kNaN;

    const std::uint64_t demo_seed = derive_seed(seed, "demos");
    const std::uint64_t run_seed = derive_seed(seed, "pipeline");
    json entry;
    entry["algorithm"] = cfg.algorithm;
    entry["n_exp"] = n_exp;
    entry["n_rm"] = n_rm;
    entry["lambda_grid"] = row.lambda_grid;
    entry["eps"] = eps;
    entry["delta"] = delta;
    entry["seed"] = seed;
    entry["derived_seeds"] = {{"demos", demo_seed}, {"pipeline", run_seed}};

    PipelineConfig pc;
    pc.eps = eps;
    pc.delta = delta;
    pc.mode = cfg.mode;
    pc.c_kl = cfg.c_kl;
    pc.diagnostic = cfg.oracle_diagnostics;
    pc.max_episodes = cfg.max_episodes;
    pc.lsvi_episodes = cfg.lsvi_episodes;
    pc.features = linear ? &inst.linear->features : nullptr;
    pc.bc.seed = derive_seed(seed, "bc");
    const PipelineOracle oracle{&mdp, &inst.expert};

    auto record_demos = [&](const DemonstrationSet& demos) {
        std::string text;
        for (const auto& tau : demos.trajectories()) text += io::dump(io::trajectory_to_json(tau)) + '\n';
        entry["demos_hash"] = content_hash(text);
    };
    auto fill_from = [&](const PipelineResult& res) {
        row.episodes = res.episodes;
        row.stopped = res.stopped;
        row.lambda = res.budgets.lambda;
        if (res.diagnostics) {
            row.suboptimality = res.diagnostics->suboptimality;
            row.kl = res.diagnostics->kl;
            row.eps_rm_sq = res.diagnostics->eps_rm_sq;
            row.bound = res.diagnostics->composite_bound;
        }
        entry["budgets"] = budgets_json(res.budgets);
        if (res.diagnostics) entry["bound_holds"] = res.diagnostics->bound_holds;
    };

    if (cfg.algorithm == "rl") {
        const auto demos = collect_demonstrations(env, inst.expert, n_exp, demo_seed);
        record_demos(demos);
        fill_from(demonstration_regularized_rl(env, demos, pc, run_seed, oracle));
    } else if (cfg.algorithm == "rlhf") {
        const RewardFreeEnvironment hidden(mdp);
        const auto demos = collect_demonstrations(hidden, inst.expert, n_exp, demo_seed);
        record_demos(demos);
        const PreferenceOracle prefs(mdp.S, mdp.A, mdp.H, mdp.r, LinkFunction::sigmoid(mdp.H));
        RlhfConfig rc;
        rc.base = pc;
        rc.n_rm = n_rm;
        rc.n_mc = cfg.n_mc;
        fill_from(demonstration_regularized_rlhf(hidden, demos, prefs, rc, run_seed, oracle));
    } else if (cfg.algorithm == "bpi") {
        const Policy ref = Policy::uniform(mdp.H, mdp.S, mdp.A);
        MixturePolicy out;
        row.lambda = *lambda;
        if (linear) {
            LsviOptions o;
            o.record_telemetry = false;
            out = run_lsvi_ent(env, inst.linear->features, ref, *lambda, cfg.lsvi_episodes, delta, run_seed, o).mixture;
            row.episodes = cfg.lsvi_episodes;
            row.stopped = true;
        } else {
            UcbviOptions o;
            o.record_trace = false;
            o.max_episodes = cfg.max_episodes;
            auto res = run_ucbvi_ent_plus(env, ref, *lambda, eps, delta, run_seed, o);
            row.episodes = res.episodes;
            row.stopped = res.stopped;
            out.components.push_back(std::move(res.policy));
        }
        if (cfg.oracle_diagnostics) {
            const double best = regularized_value_iteration(mdp, ref, *lambda).first.V(0, mdp.s1);
            row.suboptimality = best - mixture_value_regularized(mdp, out, ref, *lambda);
        }
    } else { // bc
        const auto demos = collect_demonstrations(env, inst.expert, n_exp, demo_seed);
        record_demos(demos);
        const Policy bc = linear ? bc_linear(demos, inst.linear->features, pc.bc).policy : bc_tabular(demos);
        row.stopped = true;
        if (cfg.oracle_diagnostics) {
            const double v_star = value_iteration(mdp).first.V(0, mdp.s1);
            const double v_exp = policy_evaluation(mdp, inst.expert).V(0, mdp.s1);
            row.suboptimality = v_star - policy_evaluation(mdp, bc).V(0, mdp.s1);
            row.kl = kl_trajectory(mdp, inst.expert, bc);
            row.bound = (v_star - v_exp) + pinsker_value_gap_bound(mdp.H, row.kl);
        }
    }
    if (cfg.record_wallclock)
        row.wallclock_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (manifest) *manifest = std::move(entry);
    return row;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    const Instance inst = build_instance(cfg.instance, cfg.lambda_expert);

    struct Task {
        std::size_t n_exp, n_rm;
        std::optional<double> lambda;
        double eps, delta;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    std::vector<std::optional<double>> lambdas;
    if (cfg.lambda.empty()) lambdas.push_back(std::nullopt);
    for (double l : cfg.lambda) lambdas.push_back(l);
    for (auto n : cfg.n_exp)
        for (auto m : cfg.n_rm)
            for (const auto& l : lambdas)
                for (double e : cfg.eps)
                    for (double d : cfg.delta)
                        for (auto s : cfg.seeds) tasks.push_back({n, m, l, e, d, s});

    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir / "results.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write results.csv");
    for (std::size_t i = 0; i < results_columns().size(); ++i) csv << (i ? "," : "") << results_columns()[i];
    csv << '\n' << std::flush;

    std::vector<std::optional<SweepRow>> rows(tasks.size());
    std::vector<json> entries(tasks.size());
    std::mutex appender;
    std::size_t flushed = 0;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size() || failed) return;
            const Task& t = tasks[i];
            try {
                json entry;
                SweepRow row = run_point(cfg, inst, t.n_exp, t.n_rm, t.lambda, t.eps, t.delta, t.seed, &entry);
                std::lock_guard lock(appender);
                rows[i] = std::move(row);
                entries[i] = std::move(entry);
                while (flushed < rows.size() && rows[flushed]) csv << results_row(*rows[flushed++]) << '\n' << std::flush;
            } catch (...) {
                std::lock_guard lock(appender);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    const int n_workers = std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
    std::vector<std::thread> pool;
    for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    json manifest;
    manifest["config"] = experiment_config_to_json(cfg);
    manifest["instance_hash"] = content_hash(io::dump(io::mdp_to_json(inst.mdp)));
    manifest["rows"] = json::array();
    for (std::size_t i = 0; i < flushed; ++i) manifest["rows"].push_back(entries[i]);
    manifest["complete"] = !error;
    io::write_file(out_dir / "manifest.json", io::dump(manifest) + '\n');
    if (error) std::rethrow_exception(error);

    std::vector<SweepRow> out;
    for (auto& r : rows) out.push_back(std::move(*r));
    return out;
}

std::vector<SweepRow> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("results file is empty");
    const auto header = split(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const auto& name : results_columns())
        if (!col.count(name)) throw ConfigError("results file lacks column '" + name + "'");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) throw ConfigError("ragged row in " + path.string());
        auto cell = [&](const char* name) { return cells[col[name]]; };
        auto integer = [&](const char* name) -> std::int64_t {
            const double x = parse_double(cell(name));
            if (std::isnan(x)) throw ConfigError(std::string("missing ") + name);
            return static_cast<std::int64_t>(x);
        };
        SweepRow r;
        r.algorithm = cell("algorithm");
        r.n_exp = static_cast<std::size_t>(integer("n_exp"));
        r.n_rm = static_cast<std::size_t>(integer("n_rm"));
        r.lambda_grid = parse_double(cell("lambda_grid"));
        r.eps = parse_double(cell("eps"));
        r.delta = parse_double(cell("delta"));
        r.seed = static_cast<std::uint64_t>(std::stoull(cell("seed")));
        r.episodes = integer("episodes");
        r.stopped = cell("stopped") == "1";
        r.lambda = parse_double(cell("lambda"));
        r.suboptimality = parse_double(cell("suboptimality"));
        r.kl = parse_double(cell("kl"));
        r.eps_rm_sq = parse_double(cell("eps_rm_sq"));
        r.bound = parse_double(cell("bound"));
        r.wallclock_ms = parse_double(cell("wallclock_ms"));
        rows.push_back(std::move(r));
    }
    return rows;
}

double median(std::vector<double> v) {
    if (v.empty()) throw ConfigError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::pair<double, double> least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw ConfigError("least squares needs two distinct x values");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

std::vector<ScalingSummary> scaling_summary(const std::vector<SweepRow>& rows, int resamples, std::uint64_t seed) {
    struct Group {
        ScalingSummary head;
        std::map<std::size_t, std::vector<double>> episodes;
    };
    std::vector<Group> groups;
    for (const auto& r : rows) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            const auto& h = g.head;
            return h.algorithm == r.algorithm && h.n_rm == r.n_rm && same(h.lambda_grid, r.lambda_grid) &&
                   same(h.eps, r.eps) && same(h.delta, r.delta);
        });
        if (it == groups.end()) {
            Group g;
            g.head.algorithm = r.algorithm;
            g.head.n_rm = r.n_rm;
            g.head.lambda_grid = r.lambda_grid;
            g.head.eps = r.eps;
            g.head.delta = r.delta;
            groups.push_back(std::move(g));
            it = std::prev(groups.end());
        }
        if (r.episodes <= 0) throw ConfigError("scaling summary needs positive episode counts");
        it->episodes[r.n_exp].push_back(static_cast<double>(r.episodes));
    }
    if (groups.empty()) throw ConfigError("results contain no rows");

    std::vector<ScalingSummary> out;
    Rng rng(seed);
    for (auto& g : groups) {
        if (g.episodes.size() < 3) throw ConfigError("scaling summary needs at least 3 distinct n_exp values");
        std::vector<double> x, y;
        std::vector<const std::vector<double>*> samples;
        for (const auto& [n, eps] : g.episodes) {
            if (eps.size() < 5) throw ConfigError("scaling summary needs at least 5 seeds per n_exp");
            g.head.n_exp.push_back(n);
            const double m = median(eps);
            g.head.median_episodes.push_back(m);
            x.push_back(std::log(static_cast<double>(n)));
            y.push_back(std::log(m));
            samples.push_back(&eps);
        }
        std::tie(g.head.slope, g.head.intercept) = least_squares(x, y);
        std::vector<double> slopes;
        std::vector<double> boot(y.size()), draw;
        for (int b = 0; b < resamples; ++b) {
            for (std::size_t k = 0; k < samples.size(); ++k) {
                const auto& src = *samples[k];
                draw.resize(src.size());
                for (auto& v : draw) v = src[rng.uniform_int(static_cast<int>(src.size()))];
                boot[k] = std::log(median(draw));
            }
            slopes.push_back(least_squares(x, boot).first);
        }
        if (!slopes.empty()) {
            std::sort(slopes.begin(), slopes.end());
            auto pct = [&](double q) {
                const double pos = q * static_cast<double>(slopes.size() - 1);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const auto hi = std::min(lo + 1, slopes.size() - 1);
                return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
            };
            g.head.ci_low = pct(0.025);
            g.head.ci_high = pct(0.975);
        } else {
            g.head.ci_low = g.head.ci_high = g.head.slope;
        }
        out.push_back(std::move(g.head));
    }
    return out;
}

void write_summary(const std::filesystem::path& path, const std::vector<ScalingSummary>& summary) {
    std::string text = "algorithm,n_rm,lambda_grid,eps,delta,n_points,slope,intercept,ci_low,ci_high\n";
    for (const auto& s : summary) {
        text += s.algorithm + ',' + std::to_string(s.n_rm) + ',' + csv_double(s.lambda_grid) + ',' +
                csv_double(s.eps) + ',' + csv_double(s.delta) + ',' + std::to_string(s.n_exp.size()) + ',' +
                csv_double(s.slope) + ',' + csv_double(s.intercept) + ',' + csv_double(s.ci_low) + ',' +
                csv_double(s.ci_high) + '\n';
    }
    io::write_file(path, text);
}

std::string content_hash(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) h = (h ^ c) * 0x100000001b3ULL;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace demoreg
