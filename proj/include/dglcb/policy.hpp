#pragma once

// Decision rules: DUCB-GLCB, conjugate Gaussian DTS (DTS-LCB), a Laplace
// approximation of DTS for non-conjugate links, and a uniform baseline.
// Contexts are K x d matrices, one arm per row.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "dglcb/feedback.hpp"
#include "dglcb/glm.hpp"
#include "dglcb/linalg.hpp"

namespace dglcb {

enum class BetaVariant { sqrt_g, linear_g };
enum class PolicyKind { ducb, dts_lin, dts_glm, random };

std::string_view policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);
std::string_view beta_variant_name(BetaVariant variant);
BetaVariant parse_beta_variant(std::string_view name);

struct ArmChoice {
    int arm = 0;
    double score = 0.0;
    double beta = 0.0;
    Vector theta_sampled;
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::ducb;
    /// Rounds 1..tau pick arms uniformly at random.
    int tau = 0;
    double delta = 0.1;
    /// Prior precision scale (DTS).
    double a = 1.0;
    /// Posterior scale (DTS-LCB).
    double v = 1.0;
    BetaVariant beta_variant = BetaVariant::sqrt_g;
    /// V_t and W_t start at ridge * I so they stay factorizable before any data.
    double ridge = 1e-6;
    /// 0 refits the MLE whenever data arrives; r > 0 refits once the arrived
    /// count grows by a factor (1 + r) since the last fit.
    double mle_refit_ratio = 0.0;
    /// Start Newton at the previous estimate instead of 0.
    bool mle_warm_start = false;

    void validate() const;
};

/// Index of the first maximum.
int argmax_first(const Vector& scores);

// ---------------------------------------------------------------- DUCB-GLCB

struct DucbState {
    GlmSpec spec;
    PolicyConfig config;
    SpdMatrix v;
    SpdMatrix w;
    SampleSet arrived_data;
    Vector theta_hat;
    std::int64_t g_t = 0;
    /// Round the state is prepared for.
    std::int64_t t = 1;

    // Sufficient statistics for the linear link's closed-form estimate.
    Matrix gram;
    Vector xy;

    std::size_t fitted_n = 0;
    std::string mle_flag = "none";

    DucbState(const GlmSpec& glm, const PolicyConfig& cfg);
};

/// (sigma_hat / kappa) sqrt((d/2) log(1 + 2 (t - G_t)/d) + log(1/delta)) + sqrt(G_t),
/// with G_t in place of sqrt(G_t) under BetaVariant::linear_g.
double ducb_beta(const DucbState& state, std::int64_t t);

/// Uniform arm for t <= tau; otherwise argmax x'theta_hat + beta_t ||x||_{V_t^{-1}}.
ArmChoice ducb_choose(const DucbState& state, const Matrix& context, Rng& rng);

/// Folds the chosen feature into V, the arrivals into W and the data set, and
/// refits theta_hat according to the refit schedule. Moves the state to round t+1.
void ducb_update(DucbState& state, std::span<const FeedbackTuple> arrivals, const Vector& chosen_x,
                 std::int64_t g_next);

// ---------------------------------------------------------------- DTS-LCB

struct DtsLinState {
    double a = 1.0;
    double v = 1.0;
    int tau = 0;
    int d = 1;
    /// B_t = a I + sum of arrived x x'; the factor exists once B_t is positive definite.
    Matrix b_entries;
    std::optional<SpdMatrix> b;
    Vector f;
    Vector theta;
    std::int64_t t = 1;

    DtsLinState(int dim, double a_scale, double v_scale, int tau_rounds = 0);
};

/// Samples theta~ ~ N(theta, v^2 B^{-1}) and returns argmax <x, theta~>.
ArmChoice dts_lin_choose(const DtsLinState& state, const Matrix& context, Rng& rng);

/// B += sum x x', f += sum x y; theta = B^{-1} f, recomputed only when arrivals is non-empty.
void dts_lin_fold(DtsLinState& state, std::span<const FeedbackTuple> arrivals);

/// Choice for the current round followed by the fold of the round's arrivals.
ArmChoice dts_lin_step(DtsLinState& state, const Matrix& context, std::span<const FeedbackTuple> arrivals, Rng& rng);

// ---------------------------------------------------------------- DTS-GLM (Laplace)

struct DtsGlmState {
    GlmSpec spec;
    PolicyConfig config;
    SampleSet data;
    Matrix w_entries;
    std::optional<SpdMatrix> w;
    Vector theta_hat;
    std::size_t fitted_n = 0;
    std::string mle_flag = "none";
    std::int64_t t = 1;

    DtsGlmState(const GlmSpec& glm, const PolicyConfig& cfg);
};

/// Samples from N(theta_MLE, (sigma_hat / kappa)^2 W^{-1}), or from the prior
/// N(0, I / a) while W is singular, and returns argmax <x, theta~>.
ArmChoice dts_glm_choose(const DtsGlmState& state, const Matrix& context, Rng& rng);
void dts_glm_fold(DtsGlmState& state, std::span<const FeedbackTuple> arrivals);
ArmChoice dts_glm_step(DtsGlmState& state, const Matrix& context, std::span<const FeedbackTuple> arrivals, Rng& rng);

// ---------------------------------------------------------------- baseline

ArmChoice random_baseline(const Matrix& context, Rng& rng);

// ---------------------------------------------------------------- runtime interface

class Policy {
public:
    virtual ~Policy() = default;
    virtual ArmChoice choose(const Matrix& context, Rng& rng) = 0;
    /// Called once per round after the chosen outcome was pushed and the buffer advanced.
    virtual void update(std::span<const FeedbackTuple> arrivals, const Vector& chosen_x, std::int64_t g_next) = 0;
    /// Status of the estimate used by the last choice ("none" when not applicable).
    virtual std::string_view mle_flag() const { return "none"; }
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const GlmSpec& spec);

}  // namespace dglcb
