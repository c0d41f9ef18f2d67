#include "dglcb/delay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dglcb {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check(bool ok, const std::string& message) {
    if (!ok) throw ParameterError(message);
}

std::int64_t to_delay(double value) {
    if (!(value < static_cast<double>(kDelayCap))) return kDelayCap;
    return static_cast<std::int64_t>(std::floor(value));
}

double log_inv(double delta) { return std::log(1.0 / delta); }

void check_delta(double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("delta must lie in (0, 1]");
}

// Truncated geometric law on {0..d_cap} with ratio rho.
void build_geometric(delay::Markov& m) {
    const double mu = m.mu_m;
    if (mu == 0.0) {
        m.rho = 0.0;
        m.d_cap = 0;
    } else {
        m.rho = mu / (1.0 + mu);
        m.d_cap = static_cast<int>(std::ceil(std::log(1e-13) / std::log(m.rho)));
    }
    m.stationary.assign(static_cast<std::size_t>(m.d_cap) + 1, 0.0);
    double weight = 1.0;
    double total = 0.0;
    for (auto& p : m.stationary) {
        p = weight;
        total += weight;
        weight *= m.rho;
    }
    for (auto& p : m.stationary) p /= total;
}

void build_cdf(delay::Markov& m) {
    m.stationary_cdf.resize(m.stationary.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < m.stationary.size(); ++i) {
        acc += m.stationary[i];
        m.stationary_cdf[i] = acc;
    }
    m.stationary_cdf.back() = 1.0;
}

void check_markov_common(double mu_m, double lambda, double sigma_m, double q) {
    check(mu_m >= 0.0, "markov: mu_m must be >= 0");
    check(lambda >= 0.0 && lambda < 1.0, "markov: lambda must lie in [0, 1)");
    check(sigma_m > 0.0, "markov: sigma_m must be > 0");
    check(q > 0.0, "markov: q must be > 0 (Markov delays require a strictly super-exponential envelope)");
}

void check_stationary_mean(const delay::Markov& m) {
    const double mean = m.stationary_mean();
    const double tolerance = 0.02 * m.mu_m;
    check(std::abs(mean - m.mu_m) <= std::max(tolerance, 1e-12),
          "markov: stationary mean " + std::to_string(mean) + " is not within 2% of mu_m");
}

std::int64_t draw_index(const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min<std::int64_t>(static_cast<std::int64_t>(it - cdf.begin()),
                                  static_cast<std::int64_t>(cdf.size()) - 1);
}

// Uniform on (0, 1].
double open_uniform(Rng& rng) { return 1.0 - std::generate_canonical<double, 53>(rng); }

double sum_inverse_powers_from(double a, double alpha) {
    // sum_{m >= a} m^{-alpha} for integer a >= 1: explicit head, Euler-Maclaurin tail.
    constexpr int kHead = 2000;
    double sum = 0.0;
    for (int i = 0; i < kHead; ++i) sum += std::pow(a + i, -alpha);
    const double n = a + kHead;
    sum += std::pow(n, 1.0 - alpha) / (alpha - 1.0) + 0.5 * std::pow(n, -alpha) +
           alpha * std::pow(n, -alpha - 1.0) / 12.0;
    return sum;
}

}  // namespace

double delay::Markov::stationary_mean() const {
    double mean = 0.0;
    for (std::size_t i = 0; i < stationary.size(); ++i) mean += static_cast<double>(i) * stationary[i];
    return mean;
}

Matrix delay::Markov::transition_matrix() const {
    if (kernel_kind == MarkovKernelKind::explicit_matrix) return kernel;
    const auto n = static_cast<Eigen::Index>(d_cap) + 1;
    Matrix p = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (kernel_kind == MarkovKernelKind::resample) {
            for (Eigen::Index j = 0; j < n; ++j) p(k, j) = (1.0 - lambda) * stationary[static_cast<std::size_t>(j)];
            p(k, k) += lambda;
        } else {
            if (k + 1 < n) p(k, k + 1) = 0.5 * rho;
            if (k > 0) p(k, k - 1) = 0.5;
            p(k, k) = 1.0 - p.row(k).sum();
        }
    }
    return p;
}

double delay::FirstMoment::exact_mean() const {
    const double m_int = std::floor(big_m);
    if (big_m == 0.0) return 0.0;
    const double p_tail = std::pow(big_m / (m_int + 1.0), alpha);
    double mean = 0.0;
    for (double m = 1.0; m <= m_int; m += 1.0) mean += p_tail + (1.0 - p_tail) * (m_int - m + 1.0) / (m_int + 1.0);
    mean += std::pow(big_m, alpha) * sum_inverse_powers_from(m_int + 1.0, alpha);
    return mean;
}

DelayModel DelayModel::bounded(std::int64_t d_max) {
    check(d_max >= 0, "bounded: d_max must be >= 0");
    return DelayModel(delay::Bounded{d_max});
}

DelayModel DelayModel::iid_envelope(double mu, double big_m, double sigma, double q) {
    check(mu >= 0.0, "iid-envelope: mu must be >= 0");
    check(big_m >= 0.0, "iid-envelope: M must be >= 0");
    check(sigma > 0.0, "iid-envelope: sigma must be > 0");
    check(q >= 0.0, "iid-envelope: q must be >= 0");
    return DelayModel(delay::IidEnvelope{mu, big_m, sigma, q});
}

DelayModel DelayModel::iid_exponential(double mu_i, double sigma_i) {
    check(mu_i >= 0.0, "iid-exponential: mu_i must be >= 0");
    check(sigma_i > 0.0, "iid-exponential: sigma_i must be > 0");
    return DelayModel(delay::IidExponential{mu_i, sigma_i});
}

DelayModel DelayModel::markov_metropolis(double mu_m, double lambda, double sigma_m, double q) {
    check_markov_common(mu_m, lambda, sigma_m, q);
    delay::Markov m;
    m.kernel_kind = delay::MarkovKernelKind::metropolis;
    m.lambda = lambda;
    m.mu_m = mu_m;
    m.sigma_m = sigma_m;
    m.q = q;
    build_geometric(m);
    build_cdf(m);
    check_stationary_mean(m);
    return DelayModel(std::move(m));
}

DelayModel DelayModel::markov_resample(double mu_m, double lambda, double sigma_m, double q) {
    check_markov_common(mu_m, lambda, sigma_m, q);
    delay::Markov m;
    m.kernel_kind = delay::MarkovKernelKind::resample;
    m.lambda = lambda;
    m.mu_m = mu_m;
    m.sigma_m = sigma_m;
    m.q = q;
    build_geometric(m);
    build_cdf(m);
    check_stationary_mean(m);
    return DelayModel(std::move(m));
}

DelayModel DelayModel::markov_explicit(const Matrix& kernel, double lambda, double mu_m, double sigma_m, double q) {
    check_markov_common(mu_m, lambda, sigma_m, q);
    check(kernel.rows() == kernel.cols() && kernel.rows() > 0, "markov: kernel must be a non-empty square matrix");
    check(kernel.allFinite() && (kernel.array() >= 0.0).all(), "markov: kernel entries must be finite and >= 0");
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        check(std::abs(kernel.row(i).sum() - 1.0) <= 1e-12,
              "markov: kernel row " + std::to_string(i) + " does not sum to 1");
    }
    delay::Markov m;
    m.kernel_kind = delay::MarkovKernelKind::explicit_matrix;
    m.lambda = lambda;
    m.mu_m = mu_m;
    m.sigma_m = sigma_m;
    m.q = q;
    m.d_cap = static_cast<int>(kernel.rows()) - 1;
    m.kernel = kernel;

    // Power iteration from the uniform law.
    Eigen::RowVectorXd pi = Eigen::RowVectorXd::Constant(kernel.cols(), 1.0 / static_cast<double>(kernel.cols()));
    for (int it = 0; it < 1'000'000; ++it) {
        Eigen::RowVectorXd next = pi * kernel;
        next /= next.sum();
        const double change = (next - pi).cwiseAbs().sum();
        pi = next;
        if (change < 1e-15) break;
    }
    m.stationary.assign(pi.data(), pi.data() + pi.size());
    build_cdf(m);
    m.row_cdf.resize(static_cast<std::size_t>(kernel.rows()));
    for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
        auto& row = m.row_cdf[static_cast<std::size_t>(i)];
        row.resize(static_cast<std::size_t>(kernel.cols()));
        double acc = 0.0;
        for (Eigen::Index j = 0; j < kernel.cols(); ++j) {
            acc += kernel(i, j);
            row[static_cast<std::size_t>(j)] = acc;
        }
        row.back() = 1.0;
    }
    check_stationary_mean(m);
    return DelayModel(std::move(m));
}

DelayModel DelayModel::dependent_copula(double phi, double sigma_r, double q, double mu_r) {
    check(phi >= 0.0 && phi < 1.0, "dependent-copula: phi must lie in [0, 1)");
    check(sigma_r > 0.0, "dependent-copula: sigma_r must be > 0");
    check(q > 0.0, "dependent-copula: q must be > 0");
    check(mu_r >= 0.0, "dependent-copula: mu_r must be >= 0");
    return DelayModel(delay::DependentCopula{phi, sigma_r, q, mu_r});
}

DelayModel DelayModel::first_moment(double big_m, double b, double alpha) {
    check(big_m >= 0.0, "first-moment: M must be >= 0");
    check(b > 0.0, "first-moment: B must be > 0");
    check(alpha > 1.0, "first-moment: alpha must be > 1");
    delay::FirstMoment fm{big_m, b, alpha};
    const double mean = fm.exact_mean();
    check(mean <= b, "first-moment: E[D] = " + std::to_string(mean) + " exceeds B; raise alpha or B");
    return DelayModel(fm);
}

std::string DelayModel::kind() const {
    return std::visit(Overloaded{
                          [](const delay::Bounded&) { return std::string("bounded"); },
                          [](const delay::IidEnvelope&) { return std::string("iid-envelope"); },
                          [](const delay::IidExponential&) { return std::string("iid-exponential"); },
                          [](const delay::Markov&) { return std::string("markov"); },
                          [](const delay::DependentCopula&) { return std::string("dependent-copula"); },
                          [](const delay::FirstMoment&) { return std::string("first-moment"); },
                      },
                      model_);
}

std::string DelayModel::describe() const {
    std::ostringstream os;
    os << kind() << '(';
    std::visit(Overloaded{
                   [&](const delay::Bounded& m) { os << "d_max=" << m.d_max; },
                   [&](const delay::IidEnvelope& m) {
                       os << "mu=" << m.mu << ",M=" << m.big_m << ",sigma=" << m.sigma << ",q=" << m.q;
                   },
                   [&](const delay::IidExponential& m) { os << "mu_i=" << m.mu_i << ",sigma_i=" << m.sigma_i; },
                   [&](const delay::Markov& m) {
                       const char* k = m.kernel_kind == delay::MarkovKernelKind::metropolis ? "metropolis"
                                       : m.kernel_kind == delay::MarkovKernelKind::resample ? "resample"
                                                                                            : "explicit";
                       os << "kernel=" << k << ",lambda=" << m.lambda << ",mu_m=" << m.mu_m << ",sigma_m=" << m.sigma_m
                          << ",q=" << m.q;
                   },
                   [&](const delay::DependentCopula& m) {
                       os << "phi=" << m.phi << ",sigma_r=" << m.sigma_r << ",q=" << m.q << ",mu_r=" << m.mu_r;
                   },
                   [&](const delay::FirstMoment& m) { os << "M=" << m.big_m << ",B=" << m.b << ",alpha=" << m.alpha; },
               },
               model_);
    os << ')';
    return os.str();
}

std::vector<std::int64_t> sample_delays(const DelayModel& model, std::int64_t t_max, Rng& rng) {
    if (t_max < 1) throw ParameterError("sample_delays: t_max must be >= 1");
    std::vector<std::int64_t> out(static_cast<std::size_t>(t_max));
    std::visit(
        Overloaded{
            [&](const delay::Bounded& m) {
                std::uniform_int_distribution<std::int64_t> draw(0, m.d_max);
                for (auto& d : out) d = draw(rng);
            },
            [&](const delay::IidEnvelope& m) {
                const auto shift = static_cast<std::int64_t>(std::floor(m.mu));
                const double scale = 2.0 * m.sigma * m.sigma;
                const double power = 1.0 / (1.0 + m.q);
                for (auto& d : out) {
                    const double excess = std::pow(-scale * std::log(open_uniform(rng)), power);
                    d = std::min(kDelayCap, shift + to_delay(excess));
                }
            },
            [&](const delay::IidExponential& m) {
                const auto shift = static_cast<std::int64_t>(std::floor(m.mu_i));
                const double scale = 2.0 * m.sigma_i * m.sigma_i;
                for (auto& d : out) d = std::min(kDelayCap, shift + to_delay(-scale * std::log(open_uniform(rng))));
            },
            [&](const delay::Markov& m) {
                std::uniform_real_distribution<double> unit(0.0, 1.0);
                std::int64_t state = draw_index(m.stationary_cdf, unit(rng));
                out[0] = state;
                for (std::size_t t = 1; t < out.size(); ++t) {
                    const double u = unit(rng);
                    switch (m.kernel_kind) {
                        case delay::MarkovKernelKind::metropolis:
                            if (u < 0.5 * m.rho) {
                                if (state < m.d_cap) ++state;
                            } else if (u < 0.5 * m.rho + 0.5) {
                                if (state > 0) --state;
                            }
                            break;
                        case delay::MarkovKernelKind::resample:
                            if (u >= m.lambda) state = draw_index(m.stationary_cdf, unit(rng));
                            break;
                        case delay::MarkovKernelKind::explicit_matrix:
                            state = draw_index(m.row_cdf[static_cast<std::size_t>(state)], u);
                            break;
                    }
                    out[t] = state;
                }
            },
            [&](const delay::DependentCopula& m) {
                std::normal_distribution<double> normal(0.0, 1.0);
                const auto shift = static_cast<std::int64_t>(std::floor(m.mu_r));
                const double innovation = std::sqrt(1.0 - m.phi * m.phi);
                const double power = 1.0 / (2.0 * (1.0 + m.q));
                const double scale = m.sigma_r * m.sigma_r;
                double z = normal(rng);
                for (std::size_t t = 0; t < out.size(); ++t) {
                    if (t > 0) z = m.phi * z + innovation * normal(rng);
                    // Survival probability of the Gaussian latent, kept in the upper tail for accuracy.
                    const double survival = 0.5 * std::erfc(z / std::numbers::sqrt2);
                    const double excess =
                        survival > 0.0 ? std::pow(-scale * std::log(survival), power) : static_cast<double>(kDelayCap);
                    out[t] = std::min(kDelayCap, shift + to_delay(excess));
                }
            },
            [&](const delay::FirstMoment& m) {
                const auto m_int = static_cast<std::int64_t>(std::floor(m.big_m));
                std::uniform_int_distribution<std::int64_t> body(0, m_int);
                for (auto& d : out) {
                    const double x = m.big_m * std::pow(open_uniform(rng), -1.0 / m.alpha);
                    const std::int64_t tail = to_delay(x);
                    d = tail > m_int ? tail : body(rng);
                }
            },
        },
        model.variant());
    return out;
}

namespace {

// sum_{m >= 1} exp(-m^p / scale), the mean of the integer excess over the shift.
double excess_mean(double p, double scale) {
    double sum = 0.0;
    for (double m = 1.0;; m += 1.0) {
        const double term = std::exp(-std::pow(m, p) / scale);
        sum += term;
        if (term < 1e-18 * std::max(sum, 1e-300) || term == 0.0) break;
    }
    return sum;
}

}  // namespace

double mean_delay(const DelayModel& model) {
    return std::visit(
        Overloaded{
            [](const delay::Bounded& m) { return 0.5 * static_cast<double>(m.d_max); },
            [](const delay::IidEnvelope& m) {
                return std::floor(m.mu) + excess_mean(1.0 + m.q, 2.0 * m.sigma * m.sigma);
            },
            [](const delay::IidExponential& m) {
                return std::floor(m.mu_i) + excess_mean(1.0, 2.0 * m.sigma_i * m.sigma_i);
            },
            [](const delay::Markov& m) { return m.stationary_mean(); },
            [](const delay::DependentCopula& m) {
                return std::floor(m.mu_r) + excess_mean(2.0 * (1.0 + m.q), m.sigma_r * m.sigma_r);
            },
            [](const delay::FirstMoment& m) { return m.exact_mean(); },
        },
        model.variant());
}

double markov_a1(double lambda) { return (1.0 + lambda) / (1.0 - lambda); }

double markov_a2(double lambda) { return lambda == 0.0 ? 1.0 / 3.0 : 5.0 / (1.0 - lambda); }

namespace {

double copula_sigma_g(const delay::DependentCopula& m) {
    // c = 1 / zeta(1+q), sigma_G = sigma_R / c.
    return m.sigma_r * std::riemann_zeta(1.0 + m.q);
}

double envelope_gt(double mu, double big_m, double sigma, double q, double delta) {
    const double sg = sigma * std::sqrt(2.0 + q);
    const double c3 = 2.0 * sigma * sigma + 1.0;
    return 2.0 * (mu + big_m) + sg * std::sqrt(2.0 * log_inv(delta)) + 2.0 * sg * sg * std::log(c3) + 1.0;
}

double envelope_gtmax(double mu, double big_m, double sigma, double q, std::int64_t horizon, double delta) {
    const double sg = sigma * std::sqrt(2.0 + q);
    const double log_c3 = std::log(2.0 * sigma * sigma + 1.0);
    const double root_log_t = std::sqrt(2.0 * std::log(static_cast<double>(horizon)));
    return 2.0 * (mu + big_m) + sg * root_log_t + 2.0 * sg * sg * log_c3 +
           sg * std::sqrt(2.0 * log_inv(delta) + 2.0 * log_c3 * sg * root_log_t + 2.0 * log_c3) + 1.0;
}

}  // namespace

double sigma_g(const DelayModel& model) {
    return std::visit(Overloaded{
                          [](const delay::Bounded&) { return 0.0; },
                          [](const delay::IidEnvelope& m) { return m.sigma * std::sqrt(2.0 + m.q); },
                          [](const delay::IidExponential& m) { return m.sigma_i * std::sqrt(2.0); },
                          [](const delay::Markov&) -> double {
                              throw UnsupportedModelError("sigma_G is not defined for Markov delays");
                          },
                          [](const delay::DependentCopula& m) { return copula_sigma_g(m); },
                          [](const delay::FirstMoment&) -> double {
                              throw UnsupportedModelError("sigma_G is not defined for first-moment delays");
                          },
                      },
                      model.variant());
}

double gt_bound(const DelayModel& model, double delta) {
    check_delta(delta);
    return std::visit(
        Overloaded{
            [](const delay::Bounded& m) { return static_cast<double>(m.d_max); },
            [&](const delay::IidEnvelope& m) { return envelope_gt(m.mu, m.big_m, m.sigma, m.q, delta); },
            [&](const delay::IidExponential& m) {
                const double s2 = m.sigma_i * m.sigma_i;
                return m.mu_i + 2.0 * m.sigma_i * std::sqrt(log_inv(delta)) + 1.0 + 4.0 * s2 * std::log(2.0 * s2);
            },
            [&](const delay::Markov& m) {
                const double l = log_inv(delta);
                return m.mu_m + markov_a2(m.lambda) * l + std::sqrt(2.0 * markov_a1(m.lambda) * m.mu_m * l);
            },
            [&](const delay::DependentCopula& m) {
                const double c4 = 2.0 * m.sigma_r * m.sigma_r + 1.0;
                return m.mu_r + copula_sigma_g(m) * std::sqrt(2.0 * std::log(c4 / delta));
            },
            [](const delay::FirstMoment&) -> double {
                throw UnsupportedModelError("gt_bound: first-moment delays only admit a G_T* bound (use gtmax_bound)");
            },
        },
        model.variant());
}

double gtmax_bound(const DelayModel& model, std::int64_t horizon, double delta) {
    check_delta(delta);
    if (horizon < 1) throw ParameterError("gtmax_bound: horizon must be >= 1");
    const double log_t_delta = std::log(static_cast<double>(horizon) / delta);
    return std::visit(
        Overloaded{
            [](const delay::Bounded& m) { return static_cast<double>(m.d_max); },
            [&](const delay::IidEnvelope& m) { return envelope_gtmax(m.mu, m.big_m, m.sigma, m.q, horizon, delta); },
            [&](const delay::IidExponential& m) { return envelope_gtmax(m.mu_i, 0.0, m.sigma_i, 0.0, horizon, delta); },
            [&](const delay::Markov& m) {
                return m.mu_m + markov_a2(m.lambda) * log_t_delta +
                       std::sqrt(2.0 * markov_a1(m.lambda) * m.mu_m * log_t_delta);
            },
            [&](const delay::DependentCopula& m) {
                const double sg = copula_sigma_g(m);
                const double c4 = 2.0 * m.sigma_r * m.sigma_r + 1.0;
                return m.mu_r + sg * std::sqrt(2.0 * std::log(static_cast<double>(horizon))) +
                       sg * std::sqrt(2.0 * std::log(c4 / delta));
            },
            [&](const delay::FirstMoment& m) {
                const double mb = m.big_m + m.b;
                return mb + log_t_delta + std::sqrt(2.0 * mb * log_t_delta);
            },
        },
        model.variant());
}

double hoeffding_sigma_g(double sigma, double q) {
    if (!(q > 0.0)) throw ParameterError("hoeffding bound requires q > 0");
    if (!(sigma > 0.0)) throw ParameterError("hoeffding bound requires sigma > 0");
    const double s2 = sigma * sigma;
    const double i_term = std::max(std::pow(2.0 * std::numbers::ln2 * s2, 1.0 / (1.0 + q)),
                                   std::pow(2.0 * s2 / (1.0 + q), 1.0 / q) + 1.0);
    return std::sqrt(i_term / 4.0 + s2 * (1.0 + q) / q);
}

double gt_bound_hoeffding(double mu, double big_m, double sigma, double q, double delta) {
    check_delta(delta);
    return 2.0 * (mu + big_m) + hoeffding_sigma_g(sigma, q) * std::sqrt(2.0 * log_inv(delta));
}

}  // namespace dglcb
