#include "dglcb/simulator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "dglcb/feedback.hpp"
#include "dglcb/seeding.hpp"

namespace dglcb {

std::string_view context_law_name(ContextLaw law) {
    switch (law) {
        case ContextLaw::uniform_ball: return "uniform-ball";
        case ContextLaw::gaussian_normalized: return "gaussian-normalized";
        case ContextLaw::fixed_pool: return "fixed-pool";
    }
    return "unknown";
}

ContextLaw parse_context_law(std::string_view name) {
    if (name == "uniform-ball") return ContextLaw::uniform_ball;
    if (name == "gaussian-normalized") return ContextLaw::gaussian_normalized;
    if (name == "fixed-pool") return ContextLaw::fixed_pool;
    throw ParameterError("unknown context_law '" + std::string(name) +
                         "' (expected uniform-ball, gaussian-normalized or fixed-pool)");
}

void EnvSpec::validate() const {
    glm.validate();
    if (k < 1) throw ParameterError("env.k must be >= 1");
    if (horizon < 1) throw ParameterError("env.horizon must be >= 1");
    if (theta_star.has_value() == prior.has_value()) {
        throw ParameterError("env: exactly one of theta_star and prior must be given");
    }
    if (theta_star) require_dim(theta_star->size(), glm.d, "env.theta_star");
    if (prior) {
        require_dim(prior->theta0.size(), glm.d, "env.prior.theta0");
        if (!(prior->v2 >= 0.0)) throw ParameterError("env.prior.v2 must be >= 0");
        if (!(prior->a > 0.0)) throw ParameterError("env.prior.a must be > 0");
    }
    if (context_law == ContextLaw::fixed_pool) {
        if (pool.rows() != k) throw ParameterError("env.pool must have exactly k rows");
        require_dim(pool.cols(), glm.d, "env.pool");
        for (Eigen::Index i = 0; i < pool.rows(); ++i) {
            if (pool.row(i).norm() > 1.0 + 1e-12) {
                throw ParameterError("env.pool row " + std::to_string(i) + " has norm > 1");
            }
        }
    }
}

Matrix draw_context(const EnvSpec& env, Rng& rng) {
    const int d = env.glm.d;
    if (env.context_law == ContextLaw::fixed_pool) return env.pool;
    Matrix context(env.k, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int a = 0; a < env.k; ++a) {
        for (int j = 0; j < d; ++j) context(a, j) = normal(rng);
        if (env.context_law == ContextLaw::uniform_ball) {
            const double norm = context.row(a).norm();
            const double radius = std::pow(unit(rng), 1.0 / d);
            context.row(a) *= norm > 0.0 ? radius / norm : 0.0;
        } else {
            context.row(a) /= std::sqrt(static_cast<double>(d));
            const double norm = context.row(a).norm();
            if (norm > 1.0) context.row(a) /= norm;
        }
    }
    return context;
}

Vector draw_theta(const GaussianPrior& prior, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = std::sqrt(prior.v2 / prior.a);
    Vector theta = prior.theta0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] += scale * normal(rng);
    return theta;
}

RunTrace run_episode(const EnvSpec& env, const PolicyConfig& policy_config, std::uint64_t seed,
                     const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    RunTrace trace;
    trace.summary.seed = seed;
    trace.summary.checkpoint_regret.assign(options.checkpoints.size(), std::numeric_limits<double>::quiet_NaN());

    Rng ctx_rng = substream(seed, "context");
    Rng reward_rng = substream(seed, "reward");
    Rng delay_rng = substream(seed, "delay");
    Rng policy_rng = substream(seed, "policy");
    Rng theta_rng = substream(seed, "theta");

    const Vector theta_star = env.theta_star ? *env.theta_star : draw_theta(*env.prior, theta_rng);
    const std::vector<std::int64_t> delays = sample_delays(env.delay, env.horizon, delay_rng);
    const LinkFunction& link = env.glm.link;

    FeedbackBuffer buffer;
    buffer.set_retain_arrived(false);
    if (options.keep_rounds) trace.rounds.reserve(static_cast<std::size_t>(env.horizon));

    double cum_regret = 0.0;
    std::int64_t g_t = 0;
    std::size_t next_checkpoint = 0;
    try {
        std::unique_ptr<Policy> policy = make_policy(policy_config, env.glm);
        for (std::int64_t t = 1; t <= env.horizon; ++t) {
            const Matrix context = draw_context(env, ctx_rng);
            const ArmChoice choice = policy->choose(context, policy_rng);
            const Vector x = context.row(choice.arm).transpose();

            const Vector means = context * theta_star;
            const double best = means.maxCoeff();
            const double instant = std::max(0.0, link.mean(best) - link.mean(means[choice.arm]));
            cum_regret += instant;

            const double y = sample_reward(env.glm, theta_star, x, reward_rng);
            buffer.push(t, x, choice.arm, y, delays[static_cast<std::size_t>(t - 1)]);
            AdvanceResult arrived = buffer.advance();

            if (options.keep_rounds) {
                trace.rounds.push_back(RoundRecord{t, choice.arm, instant, cum_regret, g_t, choice.beta,
                                                   std::string(policy->mle_flag())});
            }
            while (next_checkpoint < options.checkpoints.size() && options.checkpoints[next_checkpoint] == t) {
                trace.summary.checkpoint_regret[next_checkpoint++] = cum_regret;
            }
            while (next_checkpoint < options.checkpoints.size() && options.checkpoints[next_checkpoint] < t) {
                ++next_checkpoint;
            }
            trace.summary.rounds_completed = t;

            policy->update(arrived.arrivals, x, arrived.g_t);
            g_t = arrived.g_t;
        }
    } catch (const std::exception& e) {
        trace.summary.error = e.what();
    }
    trace.summary.final_regret = cum_regret;
    trace.summary.g_star = buffer.g_star();
    trace.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

MeanSe mean_se(const std::vector<double>& values) {
    MeanSe out;
    out.n = values.size();
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double n = static_cast<double>(values.size());
    out.se = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

namespace {

std::vector<MeanSe> checkpoint_stats(const std::vector<RunSummary>& runs, std::size_t n_checkpoints) {
    std::vector<MeanSe> out(n_checkpoints);
    for (std::size_t c = 0; c < n_checkpoints; ++c) {
        std::vector<double> values;
        for (const RunSummary& run : runs) {
            if (!run.failed() && !std::isnan(run.checkpoint_regret[c])) values.push_back(run.checkpoint_regret[c]);
        }
        out[c] = mean_se(values);
    }
    return out;
}

}  // namespace

BayesResult run_bayes(const EnvSpec& env, const PolicyConfig& policy, int n_outer, std::uint64_t seed,
                      const RunOptions& options) {
    if (!env.prior) throw ParameterError("run_bayes: env.prior must be specified");
    if (n_outer < 1) throw ParameterError("run_bayes: n_outer must be >= 1");
    RunOptions quiet = options;
    quiet.keep_rounds = false;
    BayesResult result;
    std::vector<double> finals;
    for (int r = 0; r < n_outer; ++r) {
        RunTrace trace = run_episode(env, policy, run_seed(seed, 0, static_cast<std::uint64_t>(r)), quiet);
        if (!trace.summary.failed()) finals.push_back(trace.summary.final_regret);
        result.runs.push_back(std::move(trace.summary));
    }
    result.final_regret = mean_se(finals);
    result.checkpoint_regret = checkpoint_stats(result.runs, options.checkpoints.size());
    return result;
}

std::vector<CellResult> sweep(const std::vector<SweepCell>& cells, const SweepOptions& options) {
    if (cells.empty()) throw ParameterError("sweep: the grid is empty");
    if (options.seeds < 1) throw ParameterError("sweep: seeds.count must be >= 1");
    const auto reps = static_cast<std::size_t>(options.seeds);
    const std::size_t jobs = cells.size() * reps;

    std::vector<CellResult> results(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        results[c].index = cells[c].index;
        results[c].name = cells[c].name;
        results[c].runs.resize(reps);
    }

    std::atomic<std::size_t> next{0};
    std::mutex emit_mutex;
    const auto worker = [&]() {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::size_t c = job / reps;
            const std::size_t r = job % reps;
            const SweepCell& cell = cells[c];
            RunOptions run_options = options.run;
            run_options.keep_rounds = options.run.keep_rounds && static_cast<bool>(options.on_trace);
            RunTrace trace = run_episode(cell.env, cell.policy, run_seed(options.master_seed, cell.index, r),
                                         run_options);
            if (options.on_trace) {
                std::lock_guard<std::mutex> lock(emit_mutex);
                options.on_trace(cell, static_cast<int>(r), trace);
            }
            results[c].runs[r] = std::move(trace.summary);
        }
    };

    const int workers = std::max(1, std::min<int>(options.parallelism, static_cast<int>(jobs)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (CellResult& result : results) {
        std::vector<double> finals;
        std::vector<double> stars;
        for (const RunSummary& run : result.runs) {
            if (run.failed()) {
                ++result.failures;
                continue;
            }
            finals.push_back(run.final_regret);
            stars.push_back(static_cast<double>(run.g_star));
            result.g_star_max = std::max(result.g_star_max, run.g_star);
        }
        result.final_regret = mean_se(finals);
        result.g_star = mean_se(stars);
        result.checkpoint_regret = checkpoint_stats(result.runs, options.run.checkpoints.size());
    }
    return results;
}

}  // namespace dglcb
