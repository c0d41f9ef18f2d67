#pragma once

// Delay processes and the analytic high-probability bounds on the number of
// missing rewards G_t and its running maximum G_T*.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dglcb/types.hpp"

namespace dglcb {

/// Delays larger than this are stored as this value; no experiment runs long
/// enough to tell the difference.
inline constexpr std::int64_t kDelayCap = std::int64_t{1} << 50;

namespace delay {

/// Uniform on {0..d_max}.
struct Bounded {
    std::int64_t d_max = 0;
};

/// Independent draws with P(D - mu >= m) = exp(-m^{1+q} / (2 sigma^2)) on the
/// integers; `big_m` is the envelope threshold M used only by the bounds.
struct IidEnvelope {
    double mu = 0.0;
    double big_m = 0.0;
    double sigma = 1.0;
    double q = 0.0;
};

/// The q = 0 special case, parameterized by (mu_I, sigma_I).
struct IidExponential {
    double mu_i = 0.0;
    double sigma_i = 1.0;
};

enum class MarkovKernelKind { metropolis, resample, explicit_matrix };

/// Stationary Markov chain on {0..d_cap}. `lambda` is the declared l2
/// spectral-gap parameter fed to the bounds; for the `resample` kernel
/// P = lambda I + (1 - lambda) 1 pi^T it is exact.
struct Markov {
    MarkovKernelKind kernel_kind = MarkovKernelKind::metropolis;
    double lambda = 0.0;
    double mu_m = 1.0;
    double sigma_m = 1.0;
    double q = 1.0;
    int d_cap = 0;
    double rho = 0.0;                 // geometric ratio of pi (built-in kernels)
    Matrix kernel;                    // row-stochastic; stored only for explicit kernels
    std::vector<double> stationary;   // pi
    std::vector<double> stationary_cdf;
    std::vector<std::vector<double>> row_cdf;

    double stationary_mean() const;
    /// The (d_cap+1)^2 transition matrix, materialized on demand for built-in kernels.
    Matrix transition_matrix() const;
};

/// Gaussian-copula AR(1): Z_t = phi Z_{t-1} + sqrt(1-phi^2) eps_t mapped
/// through a marginal with P(D - mu_R >= m) = exp(-m^{2(1+q)} / sigma_R^2).
struct DependentCopula {
    double phi = 0.0;
    double sigma_r = 1.0;
    double q = 1.0;
    double mu_r = 0.0;
};

/// Pareto tail P(D >= m) = (M/m)^alpha for integers m > M; the remaining mass
/// is spread uniformly over {0..M}. Construction enforces E[D] <= B.
struct FirstMoment {
    double big_m = 0.0;
    double b = 1.0;
    double alpha = 2.0;

    double exact_mean() const;
};

}  // namespace delay

using DelayVariant = std::variant<delay::Bounded, delay::IidEnvelope, delay::IidExponential, delay::Markov,
                                  delay::DependentCopula, delay::FirstMoment>;

class DelayModel {
public:
    static DelayModel bounded(std::int64_t d_max);
    static DelayModel iid_envelope(double mu, double big_m, double sigma, double q);
    static DelayModel iid_exponential(double mu_i, double sigma_i);
    /// Metropolis birth-death chain targeting a (truncated) geometric law with mean mu_m.
    static DelayModel markov_metropolis(double mu_m, double lambda, double sigma_m, double q);
    /// P = lambda I + (1 - lambda) 1 pi^T with the same geometric pi.
    static DelayModel markov_resample(double mu_m, double lambda, double sigma_m, double q);
    static DelayModel markov_explicit(const Matrix& kernel, double lambda, double mu_m, double sigma_m, double q);
    static DelayModel dependent_copula(double phi, double sigma_r, double q, double mu_r);
    static DelayModel first_moment(double big_m, double b, double alpha);

    const DelayVariant& variant() const { return model_; }
    std::string kind() const;
    std::string describe() const;

    template <class T>
    const T* as() const { return std::get_if<T>(&model_); }

private:
    explicit DelayModel(DelayVariant model) : model_(std::move(model)) {}
    DelayVariant model_;
};

/// D_1..D_{t_max}.
std::vector<std::int64_t> sample_delays(const DelayModel& model, std::int64_t t_max, Rng& rng);

/// E[D] under the model (stationary mean for Markov chains).
double mean_delay(const DelayModel& model);

/// High-probability (1 - delta) bound on G_t for a single t.
/// FirstMoment models have none; those throw UnsupportedModelError.
double gt_bound(const DelayModel& model, double delta);

/// High-probability (1 - delta) bound on G_T* = max_{t <= T} G_t.
double gtmax_bound(const DelayModel& model, std::int64_t horizon, double delta);

/// Hoeffding-route bound 2(mu + M) + sigma_G sqrt(2 log(1/delta)) with
/// sigma_G = sqrt(I/4 + sigma^2 (1+q)/q). Requires q > 0.
double gt_bound_hoeffding(double mu, double big_m, double sigma, double q, double delta);
/// The sigma_G used by gt_bound_hoeffding.
double hoeffding_sigma_g(double sigma, double q);

/// Sub-Gaussian parameter of G_t as used by each model's bounds
/// (sigma sqrt(2+q) for envelopes, sigma_R / c for the copula model).
double sigma_g(const DelayModel& model);

class UnsupportedModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A_1(lambda) = (1+lambda)/(1-lambda).
double markov_a1(double lambda);
/// A_2(lambda) = 1/3 if lambda = 0, else 5/(1-lambda).
double markov_a2(double lambda);

}  // namespace dglcb
