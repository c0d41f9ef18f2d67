#pragma once

// Monte-Carlo checks of the missing-reward concentration bounds, the minimum
// eigenvalue condition, and numeric evaluation of the regret bounds.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dglcb/delay.hpp"
#include "dglcb/simulator.hpp"

namespace dglcb {

/// Wilson score interval at z = 1.96.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

struct TailCell {
    std::int64_t t = 0;
    double delta = 0.0;
    double bound = 0.0;
    std::size_t trials = 0;
    std::size_t exceed = 0;
    double p_hat = 0.0;
    /// sqrt(delta (1 - delta) / trials): the standard error under the nominal rate.
    double se = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    /// Pass threshold on p_hat.
    double limit = 0.0;
    bool pass = false;
};

struct MeanCheck {
    std::int64_t t = 0;
    double mean = 0.0;
    double se = 0.0;
    double limit = 0.0;
    bool pass = false;
};

struct TailReport {
    std::string model;
    /// "G_t", "G_T*" or "lambda_min".
    std::string statistic;
    std::size_t trials = 0;
    std::vector<TailCell> cells;
    std::vector<MeanCheck> mean_checks;
    bool informational = false;
    bool pass = false;
};

/// Reports carry a pass only with at least this many trials.
inline constexpr std::size_t kMinTrialsForPass = 10'000;

struct TailOptions {
    std::size_t trials = 100'000;
    std::uint64_t seed = 0;
    int parallelism = 1;
};

/// Exceedance of gt_bound(model, delta) by G_t = sum_{s<t} 1{s + D_s >= t}
/// for every (t, delta); pass iff p_hat <= delta + 3 se in every cell.
/// First-moment models use the G_t* bound at horizon t, which also bounds G_t.
TailReport verify_gt_tail(const DelayModel& model, std::span<const std::int64_t> t_grid,
                          std::span<const double> delta_grid, const TailOptions& options);

/// Exceedance of gtmax_bound(model, T, delta) by G_T* = max_{t <= T} G_t.
/// First-moment models additionally check E[G_t] <= M + B + 3 se at every t in
/// `mean_t_grid` (T when empty).
TailReport verify_gtmax_tail(const DelayModel& model, std::int64_t horizon, std::span<const double> delta_grid,
                             const TailOptions& options, std::span<const std::int64_t> mean_t_grid = {});

/// Mean of G_t over independent trajectories against M + B.
std::vector<MeanCheck> verify_first_moment_mean(const DelayModel& model, std::span<const std::int64_t> t_grid,
                                                const TailOptions& options);

/// G_1..G_T of one delay trajectory (index t-1 holds G_t).
std::vector<std::int64_t> missing_counts(std::span<const std::int64_t> delays);

/// E[x x'] of one context row, from 10^6 draws (cached per law and dimension).
Matrix context_second_moment(const EnvSpec& env);

/// Round t* = ((sqrt(d) + sqrt(log(1/delta))) / lambda_min(Sigma))^2 + 2 B / lambda_min(Sigma)
/// + gt_bound(model, delta), i.e. the minimum eigenvalue condition with both
/// universal constants set to 1.
double lambda_min_round(const EnvSpec& env, double b_thresh, double delta);

/// Simulates W_t over rounds with uniformly chosen arms at t = ceil(t_scale * t*)
/// and reports P(lambda_min(W_t) < b_thresh). Informational: passes iff <= 5 delta.
TailReport verify_lambda_min(const EnvSpec& env, double b_thresh, double delta, const TailOptions& options,
                             double t_scale = 1.0);

// ---------------------------------------------------------------- regret bounds

using BoundParams = std::map<std::string, double>;

struct RegretBoundEval {
    std::string theorem;
    BoundParams params;
    double total = 0.0;
    std::vector<std::pair<std::string, double>> terms;
};

class MissingParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// "thm1", "prop2-bounded", "prop2-iid", "thm3-markov", "thm5-random", "first-moment".
const std::vector<std::string>& theorem_ids();

/// Required keys per theorem (every theorem also needs d, T, delta, L_g, sigma_hat, kappa, tau).
std::vector<std::string> theorem_parameters(const std::string& theorem);

/// Right-hand side of the named regret bound with a per-term breakdown.
/// Logarithms enter as max(0, log) so every term is nonnegative.
RegretBoundEval regret_bound_rhs(const std::string& theorem, const BoundParams& params);

/// Delay parameters of `model` for `theorem`, merged into `base`, or nullopt
/// when the model does not satisfy the theorem's delay assumption.
std::optional<BoundParams> bound_params_for(const std::string& theorem, const DelayModel& model,
                                            const BoundParams& base);

// ---------------------------------------------------------------- Prop-1 vs Prop-5

struct BoundComparisonRow {
    double q = 0.0;
    double delta = 0.0;
    double prop1 = 0.0;
    double prop5 = 0.0;
    bool prop5_weaker = false;
};

std::vector<BoundComparisonRow> compare_prop1_prop5(double sigma, double q, double mu, double big_m,
                                                    std::span<const double> delta_grid);

// ---------------------------------------------------------------- output

nlohmann::json to_json(const TailReport& report);
nlohmann::json to_json(const RegretBoundEval& eval);
nlohmann::json to_json(const std::vector<BoundComparisonRow>& rows);
std::string format_table(const TailReport& report);
std::string format_table(const std::vector<BoundComparisonRow>& rows);

}  // namespace dglcb
