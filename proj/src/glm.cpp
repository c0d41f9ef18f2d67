#include "dglcb/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dglcb/kernels.hpp"
#include "dglcb/linalg.hpp"

namespace dglcb {

std::string_view link_name(LinkKind kind) {
    switch (kind) {
        case LinkKind::linear: return "linear";
        case LinkKind::logistic: return "logistic";
        case LinkKind::poisson: return "poisson";
    }
    return "unknown";
}

LinkKind parse_link(std::string_view name) {
    if (name == "linear") return LinkKind::linear;
    if (name == "logistic") return LinkKind::logistic;
    if (name == "poisson") return LinkKind::poisson;
    throw ParameterError("unknown link '" + std::string(name) + "' (expected linear, logistic or poisson)");
}

double LinkFunction::clamped(double u) const { return std::clamp(u, -clamp, clamp); }

double LinkFunction::mean(double u) const {
    u = clamped(u);
    switch (kind) {
        case LinkKind::linear: return u;
        case LinkKind::logistic: return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
        case LinkKind::poisson: return std::exp(u);
    }
    return 0.0;
}

double LinkFunction::slope(double u) const {
    u = clamped(u);
    switch (kind) {
        case LinkKind::linear: return 1.0;
        case LinkKind::logistic: {
            const double e = std::exp(-std::abs(u));
            return e / ((1.0 + e) * (1.0 + e));
        }
        case LinkKind::poisson: return std::exp(u);
    }
    return 0.0;
}

double LinkFunction::cumulant(double u) const {
    u = clamped(u);
    switch (kind) {
        case LinkKind::linear: return 0.5 * u * u;
        case LinkKind::logistic: return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
        case LinkKind::poisson: return std::exp(u);
    }
    return 0.0;
}

void GlmSpec::validate() const {
    if (d < 1) throw ParameterError("glm.d must be >= 1");
    if (!(sigma_hat > 0.0)) throw ParameterError("glm.sigma_hat must be > 0");
    if (!(kappa > 0.0)) throw ParameterError("glm.kappa must be > 0");
    if (!(l_g > 0.0)) throw ParameterError("glm.l_g must be > 0");
    if (!(m_g > 0.0)) throw ParameterError("glm.m_g must be > 0");
    if (!(theta_max > 0.0)) throw ParameterError("glm.theta_max must be > 0");
    if (!(link.clamp > 0.0)) throw ParameterError("glm.clamp must be > 0");
    constexpr int kProbes = 2001;
    for (int i = 0; i < kProbes; ++i) {
        const double u = -theta_max + 2.0 * theta_max * i / (kProbes - 1);
        const double s = link.slope(u);
        if (s < kappa * (1.0 - 1e-12)) {
            throw ParameterError("glm.kappa exceeds the link slope " + std::to_string(s) + " at x'theta = " +
                                 std::to_string(u));
        }
        if (s > l_g * (1.0 + 1e-12)) {
            throw ParameterError("glm.l_g is below the link slope " + std::to_string(s) + " at x'theta = " +
                                 std::to_string(u));
        }
    }
}

SampleSet::SampleSet(int d) : d_(d) {
    if (d < 1) throw DimensionError("SampleSet: dimension must be >= 1");
}

void SampleSet::grow() {
    const std::size_t next = std::max<std::size_t>(16, capacity_ * 2);
    std::vector<double> x(next * static_cast<std::size_t>(d_), 0.0);
    for (int j = 0; j < d_; ++j) {
        std::copy_n(x_.begin() + static_cast<std::ptrdiff_t>(j * capacity_), n_,
                    x.begin() + static_cast<std::ptrdiff_t>(j * next));
    }
    x_ = std::move(x);
    y_.resize(next, 0.0);
    capacity_ = next;
}

void SampleSet::push_back(const Vector& x, double y) {
    require_dim(x.size(), d_, "SampleSet::push_back");
    if (n_ == capacity_) grow();
    for (int j = 0; j < d_; ++j) x_[static_cast<std::size_t>(j) * capacity_ + n_] = x[j];
    y_[n_] = y;
    ++n_;
}

Vector SampleSet::x(std::size_t i) const {
    Vector out(d_);
    for (int j = 0; j < d_; ++j) out[j] = x_[static_cast<std::size_t>(j) * capacity_ + i];
    return out;
}

SampleSet SampleSet::from(std::span<const Sample> samples, int d) {
    SampleSet set(d);
    for (const Sample& s : samples) set.push_back(s);
    return set;
}

double mean_reward(const GlmSpec& spec, const Vector& theta, const Vector& x) {
    require_dim(theta.size(), x.size(), "mean_reward");
    return spec.link.mean(x.dot(theta));
}

double sample_reward(const GlmSpec& spec, const Vector& theta, const Vector& x, Rng& rng) {
    const double mean = mean_reward(spec, theta, x);
    switch (spec.link.kind) {
        case LinkKind::linear: {
            if (spec.sigma_hat == 0.0) return mean;
            std::normal_distribution<double> noise(0.0, spec.sigma_hat);
            return mean + noise(rng);
        }
        case LinkKind::logistic: {
            std::bernoulli_distribution coin(mean);
            return coin(rng) ? 1.0 : 0.0;
        }
        case LinkKind::poisson: {
            std::poisson_distribution<long long> counts(mean);
            return static_cast<double>(counts(rng));
        }
    }
    return mean;
}

std::string_view mle_status_name(MleStatus status) {
    switch (status) {
        case MleStatus::converged: return "ok";
        case MleStatus::projected: return "projected";
        case MleStatus::singular: return "singular";
    }
    return "unknown";
}

MleNonConvergence::MleNonConvergence(Vector last, double residual)
    : std::runtime_error("MLE did not converge within the iteration cap (residual " + std::to_string(residual) +
                         ")"),
      last_(std::move(last)),
      residual_(residual) {}

namespace {

struct Evaluation {
    double objective = 0.0;
    Vector gradient;  // of the negative log-likelihood
    Matrix hessian;
};

Evaluation evaluate(const GlmSpec& spec, const SampleSet& data, const Vector& theta) {
    const auto d = static_cast<std::size_t>(spec.d);
    Evaluation ev;
    ev.gradient = Vector::Zero(spec.d);
    std::vector<double> packed(d * (d + 1) / 2);
    kernels::GlmBatch batch{spec.link.kind, spec.link.clamp, data.size(), d, data.stride(), data.x_data(),
                            data.y_data()};
    kernels::GlmMoments out{0.0, ev.gradient.data(), packed.data()};
    kernels::active().glm_moments(batch, theta.data(), out);
    ev.objective = out.objective;
    ev.hessian.resize(spec.d, spec.d);
    std::size_t k = 0;
    for (int a = 0; a < spec.d; ++a) {
        for (int b = a; b < spec.d; ++b) {
            ev.hessian(a, b) = packed[k];
            ev.hessian(b, a) = packed[k];
            ++k;
        }
    }
    return ev;
}

Vector project(const Vector& theta, double radius, bool& hit) {
    const double norm = theta.norm();
    if (norm > radius) {
        hit = true;
        return theta * (radius / norm);
    }
    hit = false;
    return theta;
}

}  // namespace

MleResult solve_mle(const GlmSpec& spec, const SampleSet& data, const MleOptions& options) {
    if (data.empty()) throw std::invalid_argument("solve_mle: data must be non-empty");
    require_dim(data.dim(), spec.d, "solve_mle");

    double abs_sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) abs_sum += std::abs(data.y(i));
    const double tolerance = 1e-8 * std::max(1.0, abs_sum);
    const double radius = spec.theta_max;
    const auto on_boundary = [radius](const Vector& t) { return t.norm() >= radius * (1.0 - 1e-9); };

    bool hit = false;
    Vector theta = Vector::Zero(spec.d);
    if (options.start != nullptr) {
        require_dim(options.start->size(), spec.d, "solve_mle start");
        theta = project(*options.start, radius, hit);
    }
    bool singular = false;
    Evaluation ev = evaluate(spec, data, theta);

    const auto finish = [&](int iterations) {
        MleResult result;
        result.residual = ev.gradient.norm();
        result.iterations = iterations;
        if (on_boundary(theta) && result.residual > tolerance) {
            result.status = MleStatus::projected;
        } else if (singular) {
            result.status = MleStatus::singular;
        }
        result.theta = std::move(theta);
        return result;
    };

    const auto newton_direction = [&]() -> Vector {
        Matrix h = ev.hessian;
        SpdMatrix factor = SpdMatrix::identity(spec.d);
        if (!SpdMatrix::try_factor(h, factor)) {
            singular = true;
            const double ridge = 1e-8 * std::max(1.0, h.trace() / spec.d);
            h.diagonal().array() += ridge;
            if (!SpdMatrix::try_factor(h, factor)) {
                h.diagonal().array() += 1e-4 * std::max(1.0, h.trace() / spec.d);
                factor = SpdMatrix(h);
            }
        }
        return -factor.solve(ev.gradient);
    };

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const double residual = ev.gradient.norm();
        if (residual <= tolerance) {
            // One full step past the tolerance, kept only if the score shrinks.
            if (residual > 0.0 && !on_boundary(theta)) {
                bool projected = false;
                Vector polished = project(theta + newton_direction(), radius, projected);
                Evaluation next = evaluate(spec, data, polished);
                if (!projected && next.gradient.norm() < residual) {
                    theta = std::move(polished);
                    ev = std::move(next);
                }
            }
            return finish(iter);
        }
        const Vector direction = newton_direction();

        double step = 1.0;
        bool accepted = false;
        bool projected = false;
        Vector candidate;
        Evaluation next;
        for (int h_count = 0; h_count <= options.max_halvings; ++h_count) {
            candidate = project(theta + step * direction, radius, projected);
            next = evaluate(spec, data, candidate);
            const double slack = 1e-14 * std::max(1.0, std::abs(ev.objective));
            if (next.objective < ev.objective ||
                (next.objective <= ev.objective + slack && next.gradient.norm() < residual)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (on_boundary(theta)) return finish(iter + 1);
            throw MleNonConvergence(theta, residual);
        }
        const double decrease = ev.objective - next.objective;
        const double moved = (candidate - theta).norm();
        theta = std::move(candidate);
        ev = std::move(next);
        if (projected && (moved <= 1e-12 * (1.0 + theta.norm()) ||
                          decrease <= 1e-12 * std::max(1.0, std::abs(ev.objective)))) {
            return finish(iter + 1);
        }
    }
    if (ev.gradient.norm() <= tolerance || on_boundary(theta)) return finish(options.max_iterations);
    throw MleNonConvergence(theta, ev.gradient.norm());
}

MleResult solve_mle(const GlmSpec& spec, std::span<const Sample> data, const MleOptions& options) {
    return solve_mle(spec, SampleSet::from(data, spec.d), options);
}

Vector glm_score(const GlmSpec& spec, const SampleSet& data, const Vector& theta) {
    require_dim(theta.size(), spec.d, "glm_score");
    if (data.empty()) return Vector::Zero(spec.d);
    return -evaluate(spec, data, theta).gradient;
}

double glm_log_likelihood(const GlmSpec& spec, const SampleSet& data, const Vector& theta) {
    require_dim(theta.size(), spec.d, "glm_log_likelihood");
    if (data.empty()) return 0.0;
    return -evaluate(spec, data, theta).objective;
}

}  // namespace dglcb
