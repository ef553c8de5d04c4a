#pragma once

#include "demoreg/behavior_cloning.hpp"
#include "demoreg/linear_mdp.hpp"
#include "demoreg/planning.hpp"
#include "demoreg/preference.hpp"
#include "demoreg/types.hpp"
#include "demoreg/ucbvi_ent.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace demoreg::io {

using json = nlohmann::ordered_json;

/// "%.17g"; non-finite values become "inf", "-inf", "nan".
std::string format_double(double x);

/// Compact JSON with every float printed by format_double. Non-finite floats
/// are written as the strings "inf", "-inf", "nan".
std::string dump(const json& value);

/// Parses a JSON document; throws ConfigError with the path on failure.
json parse_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Nested array of dims[0] x dims[1] x ... from a flat row-major buffer.
json tensor(std::span<const double> flat, std::span<const int> dims);
/// Inverse of tensor(); throws ConfigError on a shape mismatch.
std::vector<double> flatten(const json& value, std::span<const int> dims, const std::string& what);

struct MdpFile {
    TabularMdp tabular;               ///< always present (latent model for linear files)
    std::optional<LinearMdp> linear;
};

json mdp_to_json(const TabularMdp& mdp);
json mdp_to_json(const LinearMdp& mdp);
MdpFile mdp_from_json(const json& j);
MdpFile read_mdp(const std::filesystem::path& path);

json trajectory_to_json(const Trajectory& tau);
Trajectory trajectory_from_json(const json& j);
void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& trajs);
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

json policy_to_json(const Policy& pi);
Policy policy_from_json(const json& j);
json mixture_to_json(const MixturePolicy& mix);
/// Accepts a single policy object or a list of them.
MixturePolicy mixture_from_json(const json& j);

json preference_to_json(const PreferenceRecord& rec);
PreferenceRecord preference_from_json(const json& j);
void write_preferences(const std::filesystem::path& path, const PreferenceDataset& data);
PreferenceDataset read_preferences(const std::filesystem::path& path, int S, int A, int H);

json reward_model_to_json(const RewardModel& model);
RewardModel reward_model_from_json(const json& j);

json bpi_result_to_json(const BpiResult& res);

} // namespace demoreg::io
