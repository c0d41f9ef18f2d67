#pragma once

// Generalized linear reward model: inverse link functions, reward sampling and
// the (quasi-)maximum likelihood estimator solving sum (Y - g(X'theta)) X = 0.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dglcb/types.hpp"

namespace dglcb {

std::string_view link_name(LinkKind kind);
LinkKind parse_link(std::string_view name);

struct LinkFunction {
    LinkKind kind = LinkKind::logistic;
    double clamp = 30.0;

    double clamped(double u) const;
    /// g(u) on the clamped predictor.
    double mean(double u) const;
    /// g'(u) on the clamped predictor.
    double slope(double u) const;
    /// m(u) with m' = g, the log-partition function of the family.
    double cumulant(double u) const;
};

struct GlmSpec {
    LinkFunction link;
    int d = 1;
    double sigma_hat = 1.0;
    double kappa = 1.0;
    double l_g = 1.0;
    double m_g = 1.0;
    double theta_max = 10.0;

    /// Checks sigma_hat > 0 and kappa <= g' <= l_g on a probe grid covering
    /// |x'theta| <= theta_max. Throws ParameterError naming the violated bound.
    void validate() const;
};

struct Sample {
    Vector x;
    double y = 0.0;
};

/// Growable sample store in column-major layout for the vectorized kernels.
class SampleSet {
public:
    explicit SampleSet(int d = 1);

    int dim() const { return d_; }
    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }

    void push_back(const Vector& x, double y);
    void push_back(const Sample& s) { push_back(s.x, s.y); }
    void clear() { n_ = 0; }

    Vector x(std::size_t i) const;
    double y(std::size_t i) const { return y_[i]; }

    const double* x_data() const { return x_.data(); }
    const double* y_data() const { return y_.data(); }
    std::size_t stride() const { return capacity_; }

    static SampleSet from(std::span<const Sample> samples, int d);

private:
    void grow();

    int d_;
    std::size_t n_ = 0;
    std::size_t capacity_ = 0;
    std::vector<double> x_;
    std::vector<double> y_;
};

/// g(clamp(x'theta)).
double mean_reward(const GlmSpec& spec, const Vector& theta, const Vector& x);

/// Linear: mean + N(0, sigma_hat^2). Logistic: Bernoulli(mean). Poisson: Poisson(mean).
double sample_reward(const GlmSpec& spec, const Vector& theta, const Vector& x, Rng& rng);

enum class MleStatus {
    converged,
    /// The iterate hit the ||theta|| <= theta_max ball and was projected.
    projected,
    /// The Hessian was numerically singular; steps used a small ridge.
    singular,
};

std::string_view mle_status_name(MleStatus status);

struct MleResult {
    Vector theta;
    MleStatus status = MleStatus::converged;
    /// ||sum (Y - g(X'theta)) X|| at the returned iterate.
    double residual = 0.0;
    int iterations = 0;

    bool flagged() const { return status != MleStatus::converged; }
};

/// Thrown when Newton fails to reach the residual tolerance within the
/// iteration cap. Carries the last iterate.
class MleNonConvergence : public std::runtime_error {
public:
    MleNonConvergence(Vector last, double residual);
    const Vector& last_iterate() const { return last_; }
    double residual() const { return residual_; }

private:
    Vector last_;
    double residual_;
};

struct MleOptions {
    int max_iterations = 100;
    int max_halvings = 30;
    /// Start from this point instead of theta = 0 (optional warm start).
    const Vector* start = nullptr;
};

/// Damped Newton on sum [m(X'theta) - Y X'theta], stopping once the score
/// norm is <= 1e-8 * max(1, sum |Y|). Iterates are kept inside the
/// theta_max ball; leaving it (or a singular Hessian) flags the result.
MleResult solve_mle(const GlmSpec& spec, const SampleSet& data, const MleOptions& options = {});
MleResult solve_mle(const GlmSpec& spec, std::span<const Sample> data, const MleOptions& options = {});

/// Score sum (Y - g(X'theta)) X, the gradient of the log-likelihood.
Vector glm_score(const GlmSpec& spec, const SampleSet& data, const Vector& theta);

/// Log-likelihood up to constants, sum [Y X'theta - m(X'theta)].
double glm_log_likelihood(const GlmSpec& spec, const SampleSet& data, const Vector& theta);

}  // namespace dglcb
