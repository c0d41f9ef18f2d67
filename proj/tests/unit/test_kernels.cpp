#include <cmath>
#include <vector>

#include "doctest.h"

#include "dglcb/glm.hpp"
#include "dglcb/kernels.hpp"

using namespace dglcb;
using namespace dglcb::kernels;

namespace {

struct Packed {
    double objective = 0.0;
    std::vector<double> gradient;
    std::vector<double> hessian;
};

Packed moments(const KernelTable& table, const GlmBatch& batch, const std::vector<double>& theta) {
    Packed p;
    p.gradient.assign(batch.d, 0.0);
    p.hessian.assign(batch.d * (batch.d + 1) / 2, 0.0);
    GlmMoments out{0.0, p.gradient.data(), p.hessian.data()};
    table.glm_moments(batch, theta.data(), out);
    p.objective = out.objective;
    return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Restores the startup choice when a test forces a variant.
struct IsaGuard {
    Isa saved = active_isa();
    ~IsaGuard() { force_isa(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar path is always available") {
    CHECK(isa_available(Isa::scalar));
    CHECK(table_for(Isa::scalar).isa == Isa::scalar);
    CHECK(isa_name(Isa::avx2) == "avx2");
}

TEST_CASE("glm_moments: SIMD agrees with the scalar reference") {
    if (!isa_available(Isa::avx2)) {
        MESSAGE("avx2 not available; equivalence test skipped");
        return;
    }
    Rng rng(41);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const LinkKind kinds[] = {LinkKind::linear, LinkKind::logistic, LinkKind::poisson};
    for (int rep = 0; rep < 300; ++rep) {
        const LinkKind kind = kinds[rep % 3];
        const std::size_t d = 1 + rep % 6;
        const std::size_t n = static_cast<std::size_t>(rep % 37) + (rep % 5 == 0 ? 1000 : 0);
        const std::size_t stride = n + rep % 3;
        std::vector<double> x(d * stride), y(stride), theta(d);
        for (double& v : x) v = normal(rng) * 0.5;
        for (double& v : y) v = kind == LinkKind::logistic ? (unit(rng) < 0.5 ? 0.0 : 1.0) : normal(rng);
        // Large coefficients push some predictors into the clamp.
        const double scale = rep % 4 == 0 ? 40.0 : 2.0;
        for (double& v : theta) v = normal(rng) * scale;
        const GlmBatch batch{kind, 30.0, n, d, stride, x.data(), y.data()};
        const Packed ref = moments(table_for(Isa::scalar), batch, theta);
        const Packed simd = moments(table_for(Isa::avx2), batch, theta);
        // Lane-wise partial sums reorder the additions; rounding grows with n.
        const double tol = 1e-14 * static_cast<double>(n + 100);
        CHECK(rel(simd.objective, ref.objective) <= tol);
        for (std::size_t j = 0; j < d; ++j) CHECK(rel(simd.gradient[j], ref.gradient[j]) <= tol);
        for (std::size_t k = 0; k < ref.hessian.size(); ++k) CHECK(rel(simd.hessian[k], ref.hessian[k]) <= tol);
    }
}

TEST_CASE("SIMD exp and log1p match libm pointwise") {
    if (!isa_available(Isa::avx2)) return;
    // One-sample batches isolate the link evaluation: with x = 1, y = 0 the
    // objective is m(u), the gradient g(u) and the Hessian g'(u).
    for (LinkKind kind : {LinkKind::logistic, LinkKind::poisson}) {
        for (double u = -30.0; u <= 30.0; u += 0.0137) {
            std::vector<double> x(4, 1.0), y(4, 0.0), theta{u};
            const GlmBatch batch{kind, 30.0, 4, 1, 4, x.data(), y.data()};
            const Packed simd = moments(table_for(Isa::avx2), batch, theta);
            const LinkFunction link{kind, 30.0};
            CHECK(std::abs(simd.objective / 4 - link.cumulant(u)) <= 1e-13 * link.cumulant(u));
            CHECK(std::abs(simd.gradient[0] / 4 - link.mean(u)) <= 1e-13 * link.mean(u));
            CHECK(std::abs(simd.hessian[0] / 4 - link.slope(u)) <= 1e-13 * link.slope(u));
        }
    }
}

TEST_CASE("count_missing: SIMD is exact") {
    Rng rng(43);
    std::geometric_distribution<std::int64_t> geo(0.1);
    for (int rep = 0; rep < 200; ++rep) {
        const std::int64_t t_max = 1 + rep * 7;
        std::vector<std::int64_t> delays(static_cast<std::size_t>(t_max));
        for (auto& v : delays) v = rep % 3 == 0 ? 0 : geo(rng);
        for (std::int64_t t = 1; t <= t_max; t += 1 + rep % 5) {
            std::size_t oracle = 0;
            for (std::int64_t s = 1; s < t; ++s) oracle += (s + delays[static_cast<std::size_t>(s - 1)] >= t);
            CHECK(table_for(Isa::scalar).count_missing(delays, t) == oracle);
            if (isa_available(Isa::avx2)) CHECK(table_for(Isa::avx2).count_missing(delays, t) == oracle);
        }
    }
}

TEST_CASE("solve_mle gives the same estimate under either variant") {
    if (!isa_available(Isa::avx2)) return;
    IsaGuard guard;
    Rng rng(47);
    std::normal_distribution<double> normal;
    GlmSpec spec;
    spec.d = 4;
    spec.kappa = 1e-3;
    spec.l_g = 1.0;
    Vector truth(4);
    truth << 1.0, -1.0, 0.5, 0.0;
    SampleSet data(4);
    for (int i = 0; i < 501; ++i) {
        Vector x(4);
        for (int j = 0; j < 4; ++j) x[j] = normal(rng) * 0.5;
        if (x.norm() > 1.0) x /= x.norm();
        data.push_back(x, sample_reward(spec, truth, x, rng));
    }
    force_isa(Isa::scalar);
    CHECK(active_isa() == Isa::scalar);
    const Vector a = solve_mle(spec, data).theta;
    force_isa(Isa::avx2);
    CHECK(active_isa() == Isa::avx2);
    const Vector b = solve_mle(spec, data).theta;
    CHECK((a - b).norm() <= 1e-10);
}

}
