#pragma once

// Environment, episode loop, Bayesian replications and seeded parallel sweeps.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dglcb/delay.hpp"
#include "dglcb/glm.hpp"
#include "dglcb/policy.hpp"

namespace dglcb {

enum class ContextLaw { uniform_ball, gaussian_normalized, fixed_pool };

std::string_view context_law_name(ContextLaw law);
ContextLaw parse_context_law(std::string_view name);

/// theta* ~ N(theta0, v2 (a I)^{-1}).
struct GaussianPrior {
    Vector theta0;
    double v2 = 1.0;
    double a = 1.0;
};

struct EnvSpec {
    GlmSpec glm;
    int k = 2;
    ContextLaw context_law = ContextLaw::uniform_ball;
    /// K x d, used by ContextLaw::fixed_pool.
    Matrix pool;
    std::optional<Vector> theta_star;
    std::optional<GaussianPrior> prior;
    DelayModel delay = DelayModel::bounded(0);
    std::int64_t horizon = 1;

    void validate() const;
};

/// One K x d context set (rows are arms), every row with norm <= 1.
Matrix draw_context(const EnvSpec& env, Rng& rng);

/// theta* from the prior.
Vector draw_theta(const GaussianPrior& prior, Rng& rng);

struct RoundRecord {
    std::int64_t t = 0;
    int arm = 0;
    double instant_regret = 0.0;
    double cum_regret = 0.0;
    std::int64_t g_t = 0;
    double beta = 0.0;
    std::string mle_flag;
};

struct RunSummary {
    std::uint64_t seed = 0;
    std::int64_t rounds_completed = 0;
    double final_regret = 0.0;
    std::int64_t g_star = 0;
    double wall_seconds = 0.0;
    /// Cumulative regret at each requested checkpoint (NaN past a failure).
    std::vector<double> checkpoint_regret;
    /// Non-empty when the episode aborted.
    std::string error;

    bool failed() const { return !error.empty(); }
};

struct RunTrace {
    std::vector<RoundRecord> rounds;
    RunSummary summary;
};

struct RunOptions {
    bool keep_rounds = true;
    std::vector<std::int64_t> checkpoints;
};

/// Runs rounds 1..horizon. Contexts, rewards, delays, policy randomness and
/// (for prior-based envs) theta* use independent streams derived from `seed`.
/// A policy failure ends the episode early with the partial trace.
RunTrace run_episode(const EnvSpec& env, const PolicyConfig& policy, std::uint64_t seed,
                     const RunOptions& options = {});

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

/// Sample mean and standard error of the mean (SE = 0 for n < 2).
MeanSe mean_se(const std::vector<double>& values);

struct BayesResult {
    std::vector<RunSummary> runs;
    MeanSe final_regret;
    std::vector<MeanSe> checkpoint_regret;
};

/// Replication r draws theta* from the prior and runs an episode, both seeded by run_seed(seed, 0, r).
BayesResult run_bayes(const EnvSpec& env, const PolicyConfig& policy, int n_outer, std::uint64_t seed,
                      const RunOptions& options = {});

struct SweepCell {
    /// Stable identity used for seeding; independent of the cell's position in the grid.
    std::uint64_t index = 0;
    std::string name;
    EnvSpec env;
    PolicyConfig policy;
};

struct CellResult {
    std::uint64_t index = 0;
    std::string name;
    std::vector<RunSummary> runs;
    std::size_t failures = 0;
    MeanSe final_regret;
    MeanSe g_star;
    std::int64_t g_star_max = 0;
    std::vector<MeanSe> checkpoint_regret;
};

struct SweepOptions {
    std::uint64_t master_seed = 0;
    int seeds = 1;
    int parallelism = 1;
    RunOptions run;
    /// Receives every finished trace; calls are serialized.
    std::function<void(const SweepCell&, int rep, const RunTrace&)> on_trace;
};

/// Runs every (cell, replication) pair, replication r of a cell seeded with
/// run_seed(master, cell.index, r). Results come back in the order of `cells`.
std::vector<CellResult> sweep(const std::vector<SweepCell>& cells, const SweepOptions& options);

}  // namespace dglcb
