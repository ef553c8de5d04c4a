#include "demoreg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace demoreg::io {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void emit(const json& v, std::string& out) {
    switch (v.type()) {
    case json::value_t::object: {
        out += '{';
        bool first = true;
        for (const auto& [key, item] : v.items()) {
            if (!first) out += ',';
            first = false;
            out += json(key).dump();
            out += ':';
            emit(item, out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& item : v) {
            if (!first) out += ',';
            first = false;
            emit(item, out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        const double x = v.get<double>();
        out += std::isfinite(x) ? format_double(x) : '"' + format_double(x) + '"';
        break;
    }
    default:
        out += v.dump();
    }
}

double as_double(const json& v, const std::string& what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf") return kInfinity;
        if (s == "-inf") return -kInfinity;
        if (s == "nan") return std::nan("");
    }
    throw ConfigError(what + ": expected a number");
}

int as_int(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number_integer()) throw ConfigError(std::string("missing integer field '") + key + "'");
    return j[key].get<int>();
}

void flatten_into(const json& v, std::span<const int> dims, std::size_t depth, std::vector<double>& out,
                  const std::string& what) {
    if (depth == dims.size()) {
        out.push_back(as_double(v, what));
        return;
    }
    if (!v.is_array() || v.size() != static_cast<std::size_t>(dims[depth]))
        throw ConfigError(what + ": tensor shape mismatch");
    for (const auto& item : v) flatten_into(item, dims, depth + 1, out, what);
}

json tensor_rec(std::span<const double> flat, std::span<const int> dims, std::size_t depth, std::size_t& pos) {
    json arr = json::array();
    for (int i = 0; i < dims[depth]; ++i) {
        if (depth + 1 == dims.size()) arr.push_back(flat[pos++]);
        else arr.push_back(tensor_rec(flat, dims, depth + 1, pos));
    }
    return arr;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(line);
    return lines;
}

json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t number) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
}

} // namespace

std::string dump(const json& value) {
    std::string out;
    emit(value, out);
    return out;
}

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

json tensor(std::span<const double> flat, std::span<const int> dims) {
    std::size_t pos = 0;
    return tensor_rec(flat, dims, 0, pos);
}

std::vector<double> flatten(const json& value, std::span<const int> dims, const std::string& what) {
    std::vector<double> out;
    flatten_into(value, dims, 0, out, what);
    return out;
}

json mdp_to_json(const TabularMdp& mdp) {
    json j;
    j["kind"] = "tabular";
    j["S"] = mdp.S;
    j["A"] = mdp.A;
    j["H"] = mdp.H;
    j["s1"] = mdp.s1;
    const int pd[] = {mdp.H, mdp.S, mdp.A, mdp.S}, rd[] = {mdp.H, mdp.S, mdp.A};
    j["p"] = tensor(mdp.p, pd);
    j["r"] = tensor(mdp.r, rd);
    return j;
}

json mdp_to_json(const LinearMdp& mdp) {
    json j = mdp_to_json(mdp.latent_tabular);
    j["kind"] = "linear";
    j["d"] = mdp.d;
    const int fd[] = {mdp.S, mdp.A, mdp.d}, td[] = {mdp.H, mdp.d}, md[] = {mdp.H, mdp.d, mdp.S};
    j["phi"] = tensor(mdp.features.phi, fd);
    j["theta"] = tensor(mdp.theta, td);
    j["mu"] = tensor(mdp.mu, md);
    return j;
}

MdpFile mdp_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("MDP file needs a kind");
    const auto kind = j["kind"].get<std::string>();
    if (kind != "tabular" && kind != "linear") throw ConfigError("unknown MDP kind '" + kind + "'");
    const int S = as_int(j, "S"), A = as_int(j, "A"), H = as_int(j, "H");
    const int s1 = j.contains("s1") ? as_int(j, "s1") : 0;
    MdpFile file;
    file.tabular = TabularMdp(S, A, H, s1);
    const int pd[] = {H, S, A, S}, rd[] = {H, S, A};
    if (!j.contains("p") || !j.contains("r")) throw ConfigError("MDP file needs p and r");
    file.tabular.p = flatten(j["p"], pd, "p");
    file.tabular.r = flatten(j["r"], rd, "r");
    file.tabular.validate();
    if (kind == "linear") {
        LinearMdp lin;
        lin.S = S;
        lin.A = A;
        lin.H = H;
        lin.s1 = s1;
        lin.d = as_int(j, "d");
        const int fd[] = {S, A, lin.d}, td[] = {H, lin.d}, md[] = {H, lin.d, S};
        lin.features = FeatureMap{S, A, lin.d, flatten(j.at("phi"), fd, "phi")};
        lin.theta = flatten(j.at("theta"), td, "theta");
        lin.mu = flatten(j.at("mu"), md, "mu");
        lin.latent_tabular = file.tabular;
        lin.validate();
        file.linear = std::move(lin);
    }
    return file;
}

MdpFile read_mdp(const std::filesystem::path& path) { return mdp_from_json(parse_file(path)); }

json trajectory_to_json(const Trajectory& tau) {
    json steps = json::array();
    for (const auto& st : tau.steps) steps.push_back(json::array({st.s, st.a}));
    json j;
    j["steps"] = std::move(steps);
    if (tau.rewards) {
        json r = json::array();
        for (double x : *tau.rewards) r.push_back(x);
        j["rewards"] = std::move(r);
    } else {
        j["rewards"] = nullptr;
    }
    return j;
}

Trajectory trajectory_from_json(const json& j) {
    if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array())
        throw ConfigError("trajectory needs a steps array");
    Trajectory tau;
    for (const auto& st : j["steps"]) {
        if (!st.is_array() || st.size() != 2 || !st[0].is_number_integer() || !st[1].is_number_integer())
            throw ConfigError("trajectory step must be [s, a]");
        tau.steps.push_back({st[0].get<int>(), st[1].get<int>()});
    }
    if (j.contains("rewards") && !j["rewards"].is_null()) {
        std::vector<double> r;
        for (const auto& x : j["rewards"]) r.push_back(as_double(x, "rewards"));
        tau.rewards = std::move(r);
    }
    return tau;
}

void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs) {
    std::string text;
    for (const auto& tau : trajs) text += dump(trajectory_to_json(tau)) + '\n';
    write_file(path, text);
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
    std::vector<Trajectory> out;
    std::size_t number = 0;
    for (const auto& line : read_lines(path)) out.push_back(trajectory_from_json(parse_line(line, path, ++number)));
    return out;
}

json policy_to_json(const Policy& pi) {
    json j;
    j["kind"] = "policy";
    j["H"] = pi.H;
    j["S"] = pi.S;
    j["A"] = pi.A;
    const int dims[] = {pi.H, pi.S, pi.A};
    j["prob"] = tensor(pi.prob, dims);
    return j;
}

Policy policy_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("policy must be an object");
    Policy pi(as_int(j, "H"), as_int(j, "S"), as_int(j, "A"));
    const int dims[] = {pi.H, pi.S, pi.A};
    pi.prob = flatten(j.at("prob"), dims, "prob");
    pi.validate();
    return pi;
}

json mixture_to_json(const MixturePolicy& mix) {
    json arr = json::array();
    for (const auto& pi : mix.components) arr.push_back(policy_to_json(pi));
    return arr;
}

MixturePolicy mixture_from_json(const json& j) {
    MixturePolicy mix;
    if (j.is_array()) {
        for (const auto& item : j) mix.components.push_back(policy_from_json(item));
    } else {
        mix.components.push_back(policy_from_json(j));
    }
    if (mix.components.empty()) throw ConfigError("mixture has no components");
    return mix;
}

json preference_to_json(const PreferenceRecord& rec) {
    json j;
    j["tau0"] = trajectory_to_json(rec.tau0);
    j["tau1"] = trajectory_to_json(rec.tau1);
    j["o"] = rec.o;
    return j;
}

PreferenceRecord preference_from_json(const json& j) {
    if (!j.is_object() || !j.contains("tau0") || !j.contains("tau1") || !j.contains("o"))
        throw ConfigError("preference record needs tau0, tau1 and o");
    PreferenceRecord rec{trajectory_from_json(j["tau0"]), trajectory_from_json(j["tau1"]), 0};
    if (!j["o"].is_number_integer()) throw ConfigError("preference label must be 0 or 1");
    rec.o = j["o"].get<int>();
    return rec;
}

void write_preferences(const std::filesystem::path& path, const PreferenceDataset& data) {
    std::string text;
    for (const auto& rec : data.records) text += dump(preference_to_json(rec)) + '\n';
    write_file(path, text);
}

PreferenceDataset read_preferences(const std::filesystem::path& path, int S, int A, int H) {
    PreferenceDataset data{S, A, H, path.filename().string(), {}};
    std::size_t number = 0;
    for (const auto& line : read_lines(path)) data.records.push_back(preference_from_json(parse_line(line, path, ++number)));
    data.validate();
    return data;
}

json reward_model_to_json(const RewardModel& model) {
    const auto& c = model.cls;
    json j;
    j["kind"] = c.kind == RewardKind::tabular ? "tabular" : "linear";
    j["S"] = c.S;
    j["A"] = c.A;
    j["H"] = c.H;
    if (c.kind == RewardKind::tabular) {
        const int dims[] = {c.H, c.S, c.A};
        j["r_hat"] = tensor(model.params, dims);
    } else {
        j["d"] = c.features.d;
        const int td[] = {c.H, c.features.d}, fd[] = {c.S, c.A, c.features.d};
        j["theta_hat"] = tensor(model.params, td);
        j["phi"] = tensor(c.features.phi, fd);
    }
    j["empty_data"] = model.empty_data;
    return j;
}

RewardModel reward_model_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("reward model needs a kind");
    const auto kind = j["kind"].get<std::string>();
    const int S = as_int(j, "S"), A = as_int(j, "A"), H = as_int(j, "H");
    RewardModel model;
    if (kind == "tabular") {
        model.cls = RewardClass::tabular(S, A, H);
        const int dims[] = {H, S, A};
        model.params = flatten(j.at("r_hat"), dims, "r_hat");
    } else if (kind == "linear") {
        const int d = as_int(j, "d");
        const int td[] = {H, d}, fd[] = {S, A, d};
        model.cls = RewardClass::linear(FeatureMap{S, A, d, flatten(j.at("phi"), fd, "phi")}, H);
        model.params = flatten(j.at("theta_hat"), td, "theta_hat");
    } else {
        throw ConfigError("unknown reward model kind '" + kind + "'");
    }
    model.empty_data = j.value("empty_data", false);
    return model;
}

json bpi_result_to_json(const BpiResult& res) {
    json j;
    j["episodes"] = res.episodes;
    j["samples"] = res.samples;
    j["stopped"] = res.stopped;
    j["final_gap"] = res.final_gap;
    j["policy"] = policy_to_json(res.policy);
    return j;
}

} // namespace demoreg::io
