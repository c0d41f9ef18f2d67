#pragma once

// Experiment configuration: a JSON tree validated into environments, policies
// and run options. Unknown keys are rejected with their dotted path.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dglcb/simulator.hpp"

namespace dglcb {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OutputConfig {
    std::string dir = "out";
    bool emit_trace = false;
    bool emit_summary = true;
    /// Rounds at which cumulative regret is recorded in the summary.
    std::vector<std::int64_t> checkpoints;
};

struct ExperimentConfig {
    /// One environment per entry of env.delay (a single object counts as one).
    std::vector<EnvSpec> envs;
    std::vector<std::string> env_names;
    std::vector<PolicyConfig> policies;
    std::vector<std::string> policy_names;
    std::uint64_t master_seed = 0;
    int seed_count = 1;
    int parallelism = 1;
    OutputConfig outputs;
    /// The validated tree with defaults filled in.
    nlohmann::json resolved;
};

/// Validates `tree` and fills defaults. Throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& tree);

/// The resolved tree; parse_config(serialize_config(c)) reproduces c.
nlohmann::json serialize_config(const ExperimentConfig& config);

nlohmann::json load_json_file(const std::filesystem::path& path);

/// Sets `dotted.key.path` to `value` (parsed as JSON when possible, else taken
/// as a string). Paths through an array apply to every element unless the
/// next component is an index.
void apply_override(nlohmann::json& tree, const std::string& dotted_key, const std::string& value);

/// Replaces seeds.master with $DBL_SEED when set.
void apply_seed_env(nlohmann::json& tree);

/// Cartesian product env x policy; cell index = env_index * n_policies + policy_index.
std::vector<SweepCell> build_cells(const ExperimentConfig& config);

/// DelayModel from its JSON object.
DelayModel parse_delay(const nlohmann::json& node, const std::string& path);
nlohmann::json delay_to_json(const DelayModel& model);

/// Compact model strings such as "bounded:3", "iid-exponential:mu_i=5,sigma_i=1",
/// "markov:mu_m=3,lambda=0.5,kernel=resample" or "first-moment:M=5,B=10".
DelayModel parse_model_spec(const std::string& spec);

}  // namespace dglcb
