#include <cmath>
#include <vector>

#include "doctest.h"

#include "dglcb/feedback.hpp"
#include "dglcb/policy.hpp"

using namespace dglcb;

namespace {

GlmSpec linear_spec(int d, double sigma_hat = 1.0) {
    GlmSpec spec;
    spec.link.kind = LinkKind::linear;
    spec.d = d;
    spec.sigma_hat = sigma_hat;
    spec.kappa = 1.0;
    spec.l_g = 1.0;
    return spec;
}

PolicyConfig ducb_config(double delta = 0.1, int tau = 0) {
    PolicyConfig cfg;
    cfg.kind = PolicyKind::ducb;
    cfg.delta = delta;
    cfg.tau = tau;
    return cfg;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Vector random_unit_ball(int d, Rng& rng) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;
    Vector x(d);
    for (int j = 0; j < d; ++j) x[j] = normal(rng);
    return x * (std::pow(unit(rng), 1.0 / d) / x.norm());
}

struct Moments {
    Vector mean;
    Matrix cov;
};

template <class Draw>
Moments sample_moments(int d, int n, Draw draw) {
    Moments m{Vector::Zero(d), Matrix::Zero(d, d)};
    std::vector<Vector> xs;
    xs.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        xs.push_back(draw());
        m.mean += xs.back();
    }
    m.mean /= n;
    for (const Vector& x : xs) m.cov += (x - m.mean) * (x - m.mean).transpose();
    m.cov /= (n - 1);
    return m;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("ducb_beta examples") {
    DucbState state(linear_spec(2), ducb_config(1.0));
    state.g_t = 0;
    CHECK(ducb_beta(state, 1) == doctest::Approx(std::sqrt(std::log(2.0))));
    CHECK(ducb_beta(state, 1) == doctest::Approx(0.8326).epsilon(1e-4));

    DucbState noiseless(linear_spec(2, 0.0), ducb_config(1.0));
    noiseless.g_t = 9;
    CHECK(ducb_beta(noiseless, 9) == doctest::Approx(3.0));
    noiseless.g_t = 4;
    const double at4 = ducb_beta(noiseless, 20);
    noiseless.g_t = 9;
    CHECK(ducb_beta(noiseless, 20) - at4 == doctest::Approx(1.0));

    PolicyConfig linear_g = ducb_config(1.0);
    linear_g.beta_variant = BetaVariant::linear_g;
    DucbState lin(linear_spec(2, 0.0), linear_g);
    lin.g_t = 9;
    CHECK(ducb_beta(lin, 20) == doctest::Approx(9.0));
}

TEST_CASE("ducb_beta monotonicity") {
    for (double delta : {0.01, 0.1, 0.5}) {
        DucbState state(linear_spec(3), ducb_config(delta));
        double prev = -1.0;
        for (std::int64_t g = 0; g < 100; ++g) {
            state.g_t = g;
            // The log term shrinks as G_t approaches t, so the property is
            // checked where G_t << t.
            const double b = ducb_beta(state, 1'000'000);
            CHECK(b >= prev);
            prev = b;
        }
    }
    DucbState state(linear_spec(3), ducb_config());
    state.g_t = 5;
    double prev = INFINITY;
    for (double delta = 0.01; delta <= 1.0; delta += 0.01) {
        state.config.delta = delta;
        const double b = ducb_beta(state, 100);
        CHECK(b <= prev);
        prev = b;
    }
}

TEST_CASE("ducb_choose examples") {
    Rng rng(1);
    SUBCASE("pure exploitation") {
        DucbState state(linear_spec(2, 0.0), ducb_config());
        state.theta_hat = Vector::Unit(2, 0);
        const ArmChoice c = ducb_choose(state, rows({{1, 0}, {0, 1}}), rng);
        CHECK(c.beta == 0.0);
        CHECK(c.arm == 0);
    }
    SUBCASE("pure exploration") {
        DucbState state(linear_spec(2), ducb_config());
        state.v = SpdMatrix::identity(2);
        CHECK(ducb_choose(state, rows({{1, 0}, {0.5, 0}}), rng).arm == 0);
    }
    SUBCASE("scores 1 + 1/2 against 0 + 1") {
        DucbState state(linear_spec(2, 0.0), ducb_config());
        state.g_t = 1;
        state.theta_hat = Vector::Unit(2, 0);
        Matrix v(2, 2);
        v << 4, 0, 0, 1;
        state.v = SpdMatrix(v);
        const ArmChoice c = ducb_choose(state, rows({{1, 0}, {0, 1}}), rng);
        CHECK(c.beta == doctest::Approx(1.0));
        CHECK(c.arm == 0);
        CHECK(c.score == doctest::Approx(1.5));
    }
    SUBCASE("ties go to the lowest index") {
        DucbState state(linear_spec(2, 0.0), ducb_config());
        CHECK(ducb_choose(state, rows({{0, 1}, {1, 0}, {0, 1}}), rng).arm == 0);
        CHECK(argmax_first((Vector(3) << 1, 2, 2).finished()) == 1);
    }
    SUBCASE("empty context") {
        DucbState state(linear_spec(2), ducb_config());
        CHECK_THROWS(ducb_choose(state, Matrix(0, 2), rng));
    }
}

TEST_CASE("ducb_choose is invariant to a positive rescaling of every score") {
    Rng rng(2);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 200; ++rep) {
        DucbState a(linear_spec(3, 0.0), ducb_config());
        DucbState b(linear_spec(3, 0.0), ducb_config());
        for (int i = 0; i < 5; ++i) {
            const Vector x = random_unit_ball(3, rng);
            a.v.rank1_update(x);
            b.v.rank1_update(x);
        }
        a.theta_hat = Vector::NullaryExpr(3, [&](Eigen::Index) { return normal(rng); });
        b.theta_hat = 2.0 * a.theta_hat;
        a.g_t = 3;
        b.g_t = 12;  // sqrt doubles
        Matrix ctx(6, 3);
        for (int k = 0; k < 6; ++k) ctx.row(k) = random_unit_ball(3, rng).transpose();
        CHECK(ducb_choose(a, ctx, rng).arm == ducb_choose(b, ctx, rng).arm);
    }
}

TEST_CASE("exploration period picks uniformly") {
    DucbState state(linear_spec(2), ducb_config(0.1, 1000));
    Rng rng(3);
    std::vector<int> counts(4, 0);
    const Matrix ctx = rows({{1, 0}, {0, 1}, {0.5, 0}, {0, 0.5}});
    for (int i = 0; i < 40000; ++i) ++counts[static_cast<std::size_t>(ducb_choose(state, ctx, rng).arm)];
    for (int c : counts) CHECK(std::abs(c / 40000.0 - 0.25) < 0.01);
}

TEST_CASE("ducb_update") {
    SUBCASE("no arrivals keeps theta and grows V") {
        DucbState state(linear_spec(2), ducb_config());
        state.theta_hat << 0.3, -0.2;
        const Vector x = Vector::Unit(2, 1);
        const double before = state.v.weighted_norm(x);
        ducb_update(state, {}, x, 1);
        CHECK(state.theta_hat == Vector((Vector(2) << 0.3, -0.2).finished()));
        CHECK(state.v.weighted_norm(x) < before);
        CHECK(state.g_t == 1);
        CHECK(state.t == 2);
    }
    SUBCASE("single arrival reproduces least squares") {
        DucbState state(linear_spec(1), ducb_config());
        const Vector x = Vector::Constant(1, 0.5);
        const std::vector<FeedbackTuple> arrivals{{1, x, 0, 1.5}};
        ducb_update(state, arrivals, x, 0);
        CHECK(state.theta_hat[0] == doctest::Approx(3.0));
    }
}

TEST_CASE("DUCB state invariants along a delayed run") {
    GlmSpec spec = linear_spec(3);
    spec.link.kind = LinkKind::logistic;
    spec.kappa = 0.1;
    spec.l_g = 0.25;
    DucbState state(spec, ducb_config(0.1, 5));
    FeedbackBuffer buf;
    Rng rng(4);
    std::geometric_distribution<std::int64_t> delay(0.2);
    std::bernoulli_distribution coin(0.5);
    Matrix v = state.config.ridge * Matrix::Identity(3, 3);
    Matrix w = v;
    for (std::int64_t t = 1; t <= 300; ++t) {
        Matrix ctx(4, 3);
        for (int k = 0; k < 4; ++k) ctx.row(k) = random_unit_ball(3, rng).transpose();
        const ArmChoice c = ducb_choose(state, ctx, rng);
        const Vector x = ctx.row(c.arm).transpose();
        buf.push(t, x, c.arm, coin(rng) ? 1.0 : 0.0, delay(rng));
        const AdvanceResult r = buf.advance();
        ducb_update(state, r.arrivals, x, r.g_t);
        v += x * x.transpose();
        for (const auto& a : r.arrivals) w += a.x * a.x.transpose();
        CHECK(static_cast<std::int64_t>(state.arrived_data.size()) == t - state.g_t);
        CHECK((state.v.entries() - v).norm() < 1e-10);
        CHECK((state.w.entries() - w).norm() < 1e-10);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(state.v.entries() - state.w.entries() +
                                                         1e-12 * Matrix::Identity(3, 3));
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("dts_lin hand example") {
    DtsLinState state(3, 1.0, 1.0);
    const std::vector<FeedbackTuple> arrivals{{1, Vector::Unit(3, 0), 0, 1.0}};
    dts_lin_fold(state, arrivals);
    CHECK((state.b_entries - Vector(Vector::Ones(3) + Vector::Unit(3, 0)).asDiagonal().toDenseMatrix()).norm() == 0.0);
    CHECK(state.f == Vector::Unit(3, 0));
    CHECK((state.theta - Vector::Unit(3, 0) * 0.5).norm() < 1e-14);
}

TEST_CASE("dts_lin with a vanishing posterior is greedy") {
    DtsLinState state(2, 1.0, 1e-12);
    const std::vector<FeedbackTuple> arrivals{{1, Vector::Unit(2, 1), 0, 1.0}};
    dts_lin_fold(state, arrivals);
    Rng rng(5);
    const Matrix ctx = rows({{1, 0}, {0, 1}, {0.3, 0.3}});
    for (int i = 0; i < 20; ++i) CHECK(dts_lin_choose(state, ctx, rng).arm == argmax_first(ctx * state.theta));
}

TEST_CASE("dts_lin keeps theta when nothing arrives") {
    DtsLinState state(2, 1.0, 1.0);
    dts_lin_fold(state, std::vector<FeedbackTuple>{{1, Vector::Unit(2, 0), 0, 2.0}});
    const Vector before = state.theta;
    state.f.setConstant(100.0);  // would change theta if recomputed
    dts_lin_fold(state, {});
    CHECK(state.theta == before);
}

TEST_CASE("dts_lin incremental equals batch; precision only grows") {
    Rng rng(6);
    std::normal_distribution<double> normal;
    DtsLinState state(4, 1.0, 1.0);
    Matrix prev = state.b_entries;
    Matrix batch_b = Matrix::Identity(4, 4);
    Vector batch_f = Vector::Zero(4);
    for (int i = 0; i < 1000; ++i) {
        std::vector<FeedbackTuple> arrivals;
        const int n = i % 3;
        for (int k = 0; k < n; ++k) {
            const Vector x = random_unit_ball(4, rng);
            const double y = normal(rng);
            arrivals.push_back({i + 1, x, 0, y});
            batch_b += x * x.transpose();
            batch_f += y * x;
        }
        dts_lin_fold(state, arrivals);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(state.b_entries - prev);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
        prev = state.b_entries;
    }
    CHECK((state.theta - batch_b.ldlt().solve(batch_f)).norm() <= 1e-8);
}

TEST_CASE("dts_lin without a prior needs data") {
    DtsLinState state(2, 0.0, 1.0);
    Rng rng(7);
    CHECK_THROWS_AS(dts_lin_choose(state, rows({{1, 0}}), rng), SingularMatrixError);
    dts_lin_fold(state, std::vector<FeedbackTuple>{{1, Vector::Unit(2, 0), 0, 1.0}});
    CHECK_FALSE(state.b.has_value());
    dts_lin_fold(state, std::vector<FeedbackTuple>{{2, Vector::Unit(2, 1), 0, 1.0}});
    CHECK(state.b.has_value());
    CHECK_NOTHROW(dts_lin_choose(state, rows({{1, 0}}), rng));
}

TEST_CASE("DTS-GLM with the linear link matches DTS-LCB in distribution") {
    Rng rng(8);
    std::normal_distribution<double> normal;
    const int d = 3;
    PolicyConfig cfg;
    cfg.kind = PolicyKind::dts_glm;
    DtsGlmState glm(linear_spec(d), cfg);
    DtsLinState lin(d, 0.0, 1.0);
    std::vector<FeedbackTuple> arrivals;
    for (int i = 0; i < 50; ++i) {
        const Vector x = random_unit_ball(d, rng);
        arrivals.push_back({i + 1, x, 0, 0.5 * x[0] + normal(rng)});
    }
    dts_glm_fold(glm, arrivals);
    dts_lin_fold(lin, arrivals);
    const Matrix ctx = Matrix::Identity(d, d);
    Rng ra(9), rb(10);
    const Moments a = sample_moments(d, 10000, [&] { return dts_glm_choose(glm, ctx, ra).theta_sampled; });
    const Moments b = sample_moments(d, 10000, [&] { return dts_lin_choose(lin, ctx, rb).theta_sampled; });
    const double scale = std::sqrt(b.cov.diagonal().maxCoeff());
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 0.05 * std::max(b.mean.cwiseAbs().maxCoeff(), scale));
    CHECK((a.cov - b.cov).cwiseAbs().maxCoeff() <= 0.05 * b.cov.diagonal().maxCoeff());
}

TEST_CASE("DTS-GLM samples the prior before any data") {
    GlmSpec spec = linear_spec(2);
    spec.link.kind = LinkKind::logistic;
    spec.kappa = 0.1;
    spec.l_g = 0.25;
    PolicyConfig cfg;
    cfg.kind = PolicyKind::dts_glm;
    cfg.a = 4.0;
    DtsGlmState state(spec, cfg);
    Rng rng(11);
    const Moments m = sample_moments(2, 20000, [&] { return dts_glm_choose(state, Matrix::Identity(2, 2), rng).theta_sampled; });
    CHECK(m.mean.cwiseAbs().maxCoeff() < 0.02);
    CHECK(std::abs(m.cov(0, 0) - 0.25) < 0.0125);
    CHECK(std::abs(m.cov(1, 1) - 0.25) < 0.0125);

    cfg.a = 0.0;
    DtsGlmState flat(spec, cfg);
    CHECK_THROWS_AS(dts_glm_choose(flat, Matrix::Identity(2, 2), rng), ParameterError);
}

TEST_CASE("DTS-GLM sampling covariance shrinks with data") {
    GlmSpec spec = linear_spec(2);
    spec.link.kind = LinkKind::logistic;
    spec.kappa = 0.1;
    spec.l_g = 0.25;
    PolicyConfig cfg;
    cfg.kind = PolicyKind::dts_glm;
    Rng rng(12);
    std::bernoulli_distribution coin(0.5);
    const auto trace_after = [&](int n) {
        DtsGlmState state(spec, cfg);
        std::vector<FeedbackTuple> arrivals;
        for (int i = 0; i < n; ++i) arrivals.push_back({i + 1, random_unit_ball(2, rng), 0, coin(rng) ? 1.0 : 0.0});
        dts_glm_fold(state, arrivals);
        return sample_moments(2, 5000, [&] { return dts_glm_choose(state, Matrix::Identity(2, 2), rng).theta_sampled; })
            .cov.trace();
    };
    CHECK(trace_after(1000) < trace_after(10));
}

TEST_CASE("random baseline") {
    Rng rng(13);
    for (int i = 0; i < 100; ++i) CHECK(random_baseline(rows({{1, 0}}), rng).arm == 0);
    std::vector<int> counts(4, 0);
    const Matrix ctx = Matrix::Identity(4, 4);
    for (int i = 0; i < 100000; ++i) ++counts[static_cast<std::size_t>(random_baseline(ctx, rng).arm)];
    for (int c : counts) CHECK(std::abs(c / 1e5 - 0.25) <= 0.01);
    Rng a(14), b(14);
    for (int i = 0; i < 50; ++i) CHECK(random_baseline(ctx, a).arm == random_baseline(ctx, b).arm);
}

TEST_CASE("config validation and names") {
    PolicyConfig cfg;
    cfg.delta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.delta = 0.1;
    cfg.tau = -1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    CHECK(parse_policy_kind("dts-lin") == PolicyKind::dts_lin);
    CHECK(policy_kind_name(PolicyKind::dts_glm) == "dts-glm");
    CHECK(parse_beta_variant("linear-g") == BetaVariant::linear_g);
    CHECK_THROWS_AS(parse_policy_kind("ucb"), ParameterError);
}

}
