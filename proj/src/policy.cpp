#include "dglcb/policy.hpp"

#include <cmath>

namespace dglcb {

std::string_view policy_kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::ducb: return "ducb";
        case PolicyKind::dts_lin: return "dts-lin";
        case PolicyKind::dts_glm: return "dts-glm";
        case PolicyKind::random: return "random";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
    if (name == "ducb") return PolicyKind::ducb;
    if (name == "dts-lin") return PolicyKind::dts_lin;
    if (name == "dts-glm") return PolicyKind::dts_glm;
    if (name == "random") return PolicyKind::random;
    throw ParameterError("unknown policy kind '" + std::string(name) + "' (expected ducb, dts-lin, dts-glm or random)");
}

std::string_view beta_variant_name(BetaVariant variant) {
    return variant == BetaVariant::sqrt_g ? "sqrt-g" : "linear-g";
}

BetaVariant parse_beta_variant(std::string_view name) {
    if (name == "sqrt-g") return BetaVariant::sqrt_g;
    if (name == "linear-g") return BetaVariant::linear_g;
    throw ParameterError("unknown beta_variant '" + std::string(name) + "' (expected sqrt-g or linear-g)");
}

void PolicyConfig::validate() const {
    if (tau < 0) throw ParameterError("policy.tau must be >= 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("policy.delta must lie in (0, 1]");
    if (!(a >= 0.0)) throw ParameterError("policy.a must be >= 0");
    if (!(v > 0.0)) throw ParameterError("policy.v must be > 0");
    if (!(ridge > 0.0)) throw ParameterError("policy.ridge must be > 0");
    if (!(mle_refit_ratio >= 0.0)) throw ParameterError("policy.mle_refit_ratio must be >= 0");
}

int argmax_first(const Vector& scores) {
    if (scores.size() == 0) throw std::invalid_argument("argmax over an empty context");
    int best = 0;
    for (int i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return best;
}

namespace {

void check_context(const Matrix& context, int d) {
    if (context.rows() == 0) throw std::invalid_argument("empty context");
    require_dim(context.cols(), d, "context");
}

int uniform_arm(Eigen::Index k, Rng& rng) {
    std::uniform_int_distribution<int> draw(0, static_cast<int>(k) - 1);
    return draw(rng);
}

bool refit_due(std::size_t n, std::size_t fitted_n, double ratio) {
    if (n == 0 || n == fitted_n) return false;
    if (ratio <= 0.0) return true;
    return static_cast<double>(n) >= (1.0 + ratio) * static_cast<double>(fitted_n);
}

// MLE with the failure modes folded into a status string; keeps the previous
// estimate's shape on non-convergence by returning the last iterate.
Vector fit(const GlmSpec& spec, const SampleSet& data, const Vector& previous, bool warm, std::string& flag) {
    MleOptions options;
    if (warm) options.start = &previous;
    try {
        MleResult result = solve_mle(spec, data, options);
        flag = std::string(mle_status_name(result.status));
        return std::move(result.theta);
    } catch (const MleNonConvergence& e) {
        flag = "nonconverged";
        return e.last_iterate();
    }
}

Vector linear_fit(const GlmSpec& spec, const SampleSet& data, const Matrix& gram, const Vector& xy,
                  const Vector& previous, bool warm, std::string& flag) {
    SpdMatrix factor = SpdMatrix::identity(spec.d);
    if (SpdMatrix::try_factor(gram, factor)) {
        Vector theta = factor.solve(xy);
        if (theta.norm() <= spec.theta_max) {
            flag = "ok";
            return theta;
        }
    }
    return fit(spec, data, previous, warm, flag);
}

}  // namespace

// ---------------------------------------------------------------- DUCB-GLCB

DucbState::DucbState(const GlmSpec& glm, const PolicyConfig& cfg)
    : spec(glm),
      config(cfg),
      v(SpdMatrix::identity(glm.d, cfg.ridge)),
      w(SpdMatrix::identity(glm.d, cfg.ridge)),
      arrived_data(glm.d),
      theta_hat(Vector::Zero(glm.d)),
      gram(Matrix::Zero(glm.d, glm.d)),
      xy(Vector::Zero(glm.d)) {
    config.validate();
}

double ducb_beta(const DucbState& state, std::int64_t t) {
    const double d = state.spec.d;
    const double g = static_cast<double>(state.g_t);
    const double info = std::max(0.0, static_cast<double>(t) - g);
    const double inner = 0.5 * d * std::log1p(2.0 * info / d) + std::log(1.0 / state.config.delta);
    const double delay_term = state.config.beta_variant == BetaVariant::sqrt_g ? std::sqrt(g) : g;
    return state.spec.sigma_hat / state.spec.kappa * std::sqrt(std::max(0.0, inner)) + delay_term;
}

ArmChoice ducb_choose(const DucbState& state, const Matrix& context, Rng& rng) {
    check_context(context, state.spec.d);
    ArmChoice choice;
    if (state.t <= state.config.tau) {
        choice.arm = uniform_arm(context.rows(), rng);
        return choice;
    }
    choice.beta = ducb_beta(state, state.t);
    Vector scores(context.rows());
    for (Eigen::Index i = 0; i < context.rows(); ++i) {
        const Vector x = context.row(i).transpose();
        scores[i] = x.dot(state.theta_hat) + choice.beta * state.v.weighted_norm(x);
    }
    choice.arm = argmax_first(scores);
    choice.score = scores[choice.arm];
    return choice;
}

void ducb_update(DucbState& state, std::span<const FeedbackTuple> arrivals, const Vector& chosen_x,
                 std::int64_t g_next) {
    require_dim(chosen_x.size(), state.spec.d, "ducb_update");
    state.v.rank1_update(chosen_x);
    const bool linear = state.spec.link.kind == LinkKind::linear;
    for (const FeedbackTuple& tuple : arrivals) {
        state.w.rank1_update(tuple.x);
        state.arrived_data.push_back(tuple.x, tuple.y);
        if (linear) {
            state.gram.selfadjointView<Eigen::Lower>().rankUpdate(tuple.x);
            state.xy += tuple.y * tuple.x;
        }
    }
    if (linear) state.gram = state.gram.selfadjointView<Eigen::Lower>();
    state.g_t = g_next;
    ++state.t;

    // theta_hat is only read after the exploration period.
    if (state.t <= state.config.tau) return;
    const std::size_t n = state.arrived_data.size();
    if (!refit_due(n, state.fitted_n, state.config.mle_refit_ratio)) return;
    state.theta_hat = linear ? linear_fit(state.spec, state.arrived_data, state.gram, state.xy, state.theta_hat,
                                          state.config.mle_warm_start, state.mle_flag)
                             : fit(state.spec, state.arrived_data, state.theta_hat, state.config.mle_warm_start,
                                   state.mle_flag);
    state.fitted_n = n;
}

// ---------------------------------------------------------------- DTS-LCB

DtsLinState::DtsLinState(int dim, double a_scale, double v_scale, int tau_rounds)
    : a(a_scale), v(v_scale), tau(tau_rounds), d(dim) {
    if (dim < 1) throw DimensionError("DtsLinState: dimension must be >= 1");
    if (!(a_scale >= 0.0)) throw ParameterError("dts-lin: a must be >= 0");
    if (!(v_scale > 0.0)) throw ParameterError("dts-lin: v must be > 0");
    b_entries = a_scale * Matrix::Identity(dim, dim);
    f = Vector::Zero(dim);
    theta = Vector::Zero(dim);
    if (a_scale > 0.0) b = SpdMatrix::identity(dim, a_scale);
}

ArmChoice dts_lin_choose(const DtsLinState& state, const Matrix& context, Rng& rng) {
    check_context(context, state.d);
    ArmChoice choice;
    if (state.t <= state.tau) {
        choice.arm = uniform_arm(context.rows(), rng);
        return choice;
    }
    if (!state.b) throw SingularMatrixError("dts-lin: B_t is singular; use a prior scale a > 0");
    choice.theta_sampled = sample_mvn(state.theta, state.v * state.v, *state.b, rng);
    const Vector scores = context * choice.theta_sampled;
    choice.arm = argmax_first(scores);
    choice.score = scores[choice.arm];
    return choice;
}

void dts_lin_fold(DtsLinState& state, std::span<const FeedbackTuple> arrivals) {
    ++state.t;
    if (arrivals.empty()) return;
    for (const FeedbackTuple& tuple : arrivals) {
        require_dim(tuple.x.size(), state.d, "dts_lin_fold");
        state.b_entries.noalias() += tuple.x * tuple.x.transpose();
        state.f += tuple.y * tuple.x;
        if (state.b) state.b->rank1_update(tuple.x);
    }
    if (!state.b) {
        SpdMatrix factor = SpdMatrix::identity(state.d);
        if (SpdMatrix::try_factor(state.b_entries, factor)) state.b = std::move(factor);
    }
    if (state.b) state.theta = state.b->solve(state.f);
}

ArmChoice dts_lin_step(DtsLinState& state, const Matrix& context, std::span<const FeedbackTuple> arrivals, Rng& rng) {
    ArmChoice choice = dts_lin_choose(state, context, rng);
    dts_lin_fold(state, arrivals);
    return choice;
}

// ---------------------------------------------------------------- DTS-GLM (Laplace)

DtsGlmState::DtsGlmState(const GlmSpec& glm, const PolicyConfig& cfg)
    : spec(glm),
      config(cfg),
      data(glm.d),
      w_entries(Matrix::Zero(glm.d, glm.d)),
      theta_hat(Vector::Zero(glm.d)) {
    config.validate();
}

ArmChoice dts_glm_choose(const DtsGlmState& state, const Matrix& context, Rng& rng) {
    check_context(context, state.spec.d);
    ArmChoice choice;
    if (state.t <= state.config.tau) {
        choice.arm = uniform_arm(context.rows(), rng);
        return choice;
    }
    if (state.w && state.fitted_n > 0) {
        const double scale = state.spec.sigma_hat / state.spec.kappa;
        choice.theta_sampled = sample_mvn(state.theta_hat, scale * scale, *state.w, rng);
    } else {
        if (!(state.config.a > 0.0)) {
            throw ParameterError("dts-glm: W_t is singular and the prior scale a is 0; use a > 0");
        }
        choice.theta_sampled = sample_mvn(Vector::Zero(state.spec.d), 1.0 / state.config.a,
                                          SpdMatrix::identity(state.spec.d), rng);
    }
    const Vector scores = context * choice.theta_sampled;
    choice.arm = argmax_first(scores);
    choice.score = scores[choice.arm];
    return choice;
}

void dts_glm_fold(DtsGlmState& state, std::span<const FeedbackTuple> arrivals) {
    ++state.t;
    for (const FeedbackTuple& tuple : arrivals) {
        state.w_entries.noalias() += tuple.x * tuple.x.transpose();
        state.data.push_back(tuple.x, tuple.y);
        if (state.w) state.w->rank1_update(tuple.x);
    }
    if (!state.w && !arrivals.empty()) {
        SpdMatrix factor = SpdMatrix::identity(state.spec.d);
        if (SpdMatrix::try_factor(state.w_entries, factor)) state.w = std::move(factor);
    }
    if (state.t <= state.config.tau || !state.w) return;
    const std::size_t n = state.data.size();
    if (!refit_due(n, state.fitted_n, state.config.mle_refit_ratio)) return;
    state.theta_hat = fit(state.spec, state.data, state.theta_hat, state.config.mle_warm_start, state.mle_flag);
    state.fitted_n = n;
}

ArmChoice dts_glm_step(DtsGlmState& state, const Matrix& context, std::span<const FeedbackTuple> arrivals, Rng& rng) {
    ArmChoice choice = dts_glm_choose(state, context, rng);
    dts_glm_fold(state, arrivals);
    return choice;
}

// ---------------------------------------------------------------- baseline

ArmChoice random_baseline(const Matrix& context, Rng& rng) {
    if (context.rows() == 0) throw std::invalid_argument("empty context");
    ArmChoice choice;
    choice.arm = uniform_arm(context.rows(), rng);
    return choice;
}

// ---------------------------------------------------------------- runtime interface

namespace {

class DucbPolicy final : public Policy {
public:
    DucbPolicy(const PolicyConfig& config, const GlmSpec& spec) : state_(spec, config) {}
    ArmChoice choose(const Matrix& context, Rng& rng) override { return ducb_choose(state_, context, rng); }
    void update(std::span<const FeedbackTuple> arrivals, const Vector& x, std::int64_t g_next) override {
        ducb_update(state_, arrivals, x, g_next);
    }
    std::string_view mle_flag() const override { return state_.mle_flag; }

private:
    DucbState state_;
};

class DtsLinPolicy final : public Policy {
public:
    DtsLinPolicy(const PolicyConfig& config, const GlmSpec& spec) : state_(spec.d, config.a, config.v, config.tau) {}
    ArmChoice choose(const Matrix& context, Rng& rng) override { return dts_lin_choose(state_, context, rng); }
    void update(std::span<const FeedbackTuple> arrivals, const Vector&, std::int64_t) override {
        dts_lin_fold(state_, arrivals);
    }

private:
    DtsLinState state_;
};

class DtsGlmPolicy final : public Policy {
public:
    DtsGlmPolicy(const PolicyConfig& config, const GlmSpec& spec) : state_(spec, config) {}
    ArmChoice choose(const Matrix& context, Rng& rng) override { return dts_glm_choose(state_, context, rng); }
    void update(std::span<const FeedbackTuple> arrivals, const Vector&, std::int64_t) override {
        dts_glm_fold(state_, arrivals);
    }
    std::string_view mle_flag() const override { return state_.mle_flag; }

private:
    DtsGlmState state_;
};

class RandomPolicy final : public Policy {
public:
    ArmChoice choose(const Matrix& context, Rng& rng) override { return random_baseline(context, rng); }
    void update(std::span<const FeedbackTuple>, const Vector&, std::int64_t) override {}
};

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicyConfig& config, const GlmSpec& spec) {
    config.validate();
    switch (config.kind) {
        case PolicyKind::ducb: return std::make_unique<DucbPolicy>(config, spec);
        case PolicyKind::dts_lin: return std::make_unique<DtsLinPolicy>(config, spec);
        case PolicyKind::dts_glm: return std::make_unique<DtsGlmPolicy>(config, spec);
        case PolicyKind::random: return std::make_unique<RandomPolicy>();
    }
    throw ParameterError("unknown policy kind");
}

}  // namespace dglcb
