#include "dglcb/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "dglcb/kernels.hpp"
#include "dglcb/seeding.hpp"

namespace dglcb {

namespace {

constexpr std::size_t kBlock = 1000;

// Splits `trials` into fixed blocks, each with its own generator, and runs
// them on `parallelism` threads. Block b always sees the same stream, so the
// reduction does not depend on scheduling.
template <class Acc, class Fn>
std::vector<Acc> run_blocks(const TailOptions& options, const Acc& init, Fn&& fn) {
    const std::size_t blocks = (options.trials + kBlock - 1) / kBlock;
    std::vector<Acc> results(blocks, init);
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (std::size_t b = next++; b < blocks; b = next++) {
            Rng rng = substream(run_seed(options.seed, b, 0), "trials");
            const std::size_t count = std::min(kBlock, options.trials - b * kBlock);
            fn(rng, count, results[b]);
        }
    };
    const int workers = std::max(1, std::min<int>(options.parallelism, static_cast<int>(blocks)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return results;
}

// Per-round bound on G_t; first-moment models only have the running-maximum
// bound, which dominates G_t at horizon t.
double per_round_bound(const DelayModel& model, std::int64_t t, double delta) {
    if (model.as<delay::FirstMoment>() != nullptr) return gtmax_bound(model, std::max<std::int64_t>(t, 1), delta);
    return gt_bound(model, delta);
}

TailCell make_cell(std::int64_t t, double delta, double bound, std::size_t trials, std::size_t exceed) {
    TailCell cell;
    cell.t = t;
    cell.delta = delta;
    cell.bound = bound;
    cell.trials = trials;
    cell.exceed = exceed;
    cell.p_hat = trials > 0 ? static_cast<double>(exceed) / static_cast<double>(trials) : 0.0;
    cell.se = trials > 0 ? std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials)) : 0.0;
    std::tie(cell.wilson_lo, cell.wilson_hi) = wilson_interval(exceed, trials);
    cell.limit = delta + 3.0 * cell.se;
    cell.pass = trials >= kMinTrialsForPass && cell.p_hat <= cell.limit;
    return cell;
}

struct Moments {
    std::vector<double> sum;
    std::vector<double> sum_sq;
};

MeanCheck make_mean_check(std::int64_t t, double sum, double sum_sq, std::size_t n, double limit) {
    MeanCheck check;
    check.t = t;
    const double count = static_cast<double>(n);
    check.mean = sum / count;
    const double var = n > 1 ? std::max(0.0, (sum_sq - count * check.mean * check.mean) / (count - 1.0)) : 0.0;
    check.se = std::sqrt(var / count);
    check.limit = limit;
    check.pass = n >= kMinTrialsForPass && check.mean <= limit + 3.0 * check.se;
    return check;
}

bool all_pass(const TailReport& report) {
    if (report.trials < kMinTrialsForPass) return false;
    for (const TailCell& c : report.cells) {
        if (!c.pass) return false;
    }
    for (const MeanCheck& m : report.mean_checks) {
        if (!m.pass) return false;
    }
    return true;
}

double first_moment_limit(const DelayModel& model) {
    const auto* fm = model.as<delay::FirstMoment>();
    if (fm == nullptr) throw UnsupportedModelError("mean check requires a first-moment delay model");
    return fm->big_m + fm->b;
}

}  // namespace

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::vector<std::int64_t> missing_counts(std::span<const std::int64_t> delays) {
    const auto horizon = static_cast<std::int64_t>(delays.size());
    std::vector<std::int64_t> diff(static_cast<std::size_t>(horizon) + 2, 0);
    // Round s is missing at every t in [s + 1, s + D_s].
    for (std::int64_t s = 1; s <= horizon; ++s) {
        const std::int64_t lo = s + 1;
        const std::int64_t hi = std::min(s + delays[static_cast<std::size_t>(s - 1)], horizon);
        if (lo > hi) continue;
        ++diff[static_cast<std::size_t>(lo)];
        --diff[static_cast<std::size_t>(hi) + 1];
    }
    std::vector<std::int64_t> g(static_cast<std::size_t>(horizon));
    std::int64_t running = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        running += diff[static_cast<std::size_t>(t)];
        g[static_cast<std::size_t>(t - 1)] = running;
    }
    return g;
}

TailReport verify_gt_tail(const DelayModel& model, std::span<const std::int64_t> t_grid,
                          std::span<const double> delta_grid, const TailOptions& options) {
    if (t_grid.empty() || delta_grid.empty()) throw ParameterError("verify_gt_tail: empty grid");
    const std::int64_t t_max = *std::max_element(t_grid.begin(), t_grid.end());
    if (*std::min_element(t_grid.begin(), t_grid.end()) < 1) throw ParameterError("verify_gt_tail: t must be >= 1");
    std::vector<double> bounds;
    for (const std::int64_t t : t_grid) {
        for (const double delta : delta_grid) bounds.push_back(per_round_bound(model, t, delta));
    }
    const std::size_t n_delta = delta_grid.size();
    const auto count_missing = kernels::active().count_missing;

    auto blocks = run_blocks(options, std::vector<std::size_t>(bounds.size(), 0),
                             [&](Rng& rng, std::size_t count, std::vector<std::size_t>& exceed) {
                                 for (std::size_t trial = 0; trial < count; ++trial) {
                                     const auto delays = sample_delays(model, std::max<std::int64_t>(t_max - 1, 1), rng);
                                     for (std::size_t i = 0; i < t_grid.size(); ++i) {
                                         const auto g = static_cast<double>(count_missing(delays, t_grid[i]));
                                         for (std::size_t j = 0; j < n_delta; ++j) {
                                             if (g > bounds[i * n_delta + j]) ++exceed[i * n_delta + j];
                                         }
                                     }
                                 }
                             });

    TailReport report;
    report.model = model.describe();
    report.statistic = "G_t";
    report.trials = options.trials;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        for (std::size_t j = 0; j < n_delta; ++j) {
            std::size_t exceed = 0;
            for (const auto& block : blocks) exceed += block[i * n_delta + j];
            report.cells.push_back(make_cell(t_grid[i], delta_grid[j], bounds[i * n_delta + j], options.trials, exceed));
        }
    }
    report.pass = all_pass(report);
    return report;
}

TailReport verify_gtmax_tail(const DelayModel& model, std::int64_t horizon, std::span<const double> delta_grid,
                             const TailOptions& options, std::span<const std::int64_t> mean_t_grid) {
    if (horizon < 1) throw ParameterError("verify_gtmax_tail: T must be >= 1");
    if (delta_grid.empty()) throw ParameterError("verify_gtmax_tail: empty delta grid");
    const bool first_moment = model.as<delay::FirstMoment>() != nullptr;
    std::vector<std::int64_t> mean_ts(mean_t_grid.begin(), mean_t_grid.end());
    if (first_moment && mean_ts.empty()) mean_ts.push_back(horizon);
    std::int64_t length = horizon;
    for (const std::int64_t t : mean_ts) length = std::max(length, t);

    std::vector<double> bounds;
    for (const double delta : delta_grid) bounds.push_back(gtmax_bound(model, horizon, delta));

    struct Acc {
        std::vector<std::size_t> exceed;
        std::vector<double> sum;
        std::vector<double> sum_sq;
    };
    const Acc init{std::vector<std::size_t>(bounds.size(), 0), std::vector<double>(mean_ts.size(), 0.0),
                   std::vector<double>(mean_ts.size(), 0.0)};
    auto blocks = run_blocks(options, init, [&](Rng& rng, std::size_t count, Acc& acc) {
        for (std::size_t trial = 0; trial < count; ++trial) {
            const auto delays = sample_delays(model, length, rng);
            const auto g = missing_counts(delays);
            const auto g_star = static_cast<double>(
                *std::max_element(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(horizon)));
            for (std::size_t j = 0; j < bounds.size(); ++j) {
                if (g_star > bounds[j]) ++acc.exceed[j];
            }
            for (std::size_t i = 0; i < mean_ts.size(); ++i) {
                const auto v = static_cast<double>(g[static_cast<std::size_t>(mean_ts[i] - 1)]);
                acc.sum[i] += v;
                acc.sum_sq[i] += v * v;
            }
        }
    });

    TailReport report;
    report.model = model.describe();
    report.statistic = "G_T*";
    report.trials = options.trials;
    for (std::size_t j = 0; j < bounds.size(); ++j) {
        std::size_t exceed = 0;
        for (const Acc& block : blocks) exceed += block.exceed[j];
        report.cells.push_back(make_cell(horizon, delta_grid[j], bounds[j], options.trials, exceed));
    }
    if (first_moment) {
        const double limit = first_moment_limit(model);
        for (std::size_t i = 0; i < mean_ts.size(); ++i) {
            double sum = 0.0;
            double sum_sq = 0.0;
            for (const Acc& block : blocks) {
                sum += block.sum[i];
                sum_sq += block.sum_sq[i];
            }
            report.mean_checks.push_back(make_mean_check(mean_ts[i], sum, sum_sq, options.trials, limit));
        }
    }
    report.pass = all_pass(report);
    return report;
}

std::vector<MeanCheck> verify_first_moment_mean(const DelayModel& model, std::span<const std::int64_t> t_grid,
                                                const TailOptions& options) {
    const double limit = first_moment_limit(model);
    if (t_grid.empty()) throw ParameterError("verify_first_moment_mean: empty t grid");
    const std::int64_t t_max = *std::max_element(t_grid.begin(), t_grid.end());
    const auto count_missing = kernels::active().count_missing;
    const Moments init{std::vector<double>(t_grid.size(), 0.0), std::vector<double>(t_grid.size(), 0.0)};
    auto blocks = run_blocks(options, init, [&](Rng& rng, std::size_t count, Moments& acc) {
        for (std::size_t trial = 0; trial < count; ++trial) {
            const auto delays = sample_delays(model, std::max<std::int64_t>(t_max - 1, 1), rng);
            for (std::size_t i = 0; i < t_grid.size(); ++i) {
                const auto v = static_cast<double>(count_missing(delays, t_grid[i]));
                acc.sum[i] += v;
                acc.sum_sq[i] += v * v;
            }
        }
    });
    std::vector<MeanCheck> out;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const Moments& block : blocks) {
            sum += block.sum[i];
            sum_sq += block.sum_sq[i];
        }
        out.push_back(make_mean_check(t_grid[i], sum, sum_sq, options.trials, limit));
    }
    return out;
}

Matrix context_second_moment(const EnvSpec& env) {
    const int d = env.glm.d;
    if (env.context_law == ContextLaw::fixed_pool) {
        return env.pool.transpose() * env.pool / static_cast<double>(env.pool.rows());
    }
    static std::mutex cache_mutex;
    static std::map<std::pair<int, int>, Matrix> cache;
    const std::pair<int, int> key{static_cast<int>(env.context_law), d};
    std::lock_guard<std::mutex> lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    constexpr int kDraws = 1'000'000;
    EnvSpec single = env;
    single.k = 1;
    Rng rng = substream(fnv1a64(std::string(context_law_name(env.context_law))), "second-moment");
    Matrix sigma = Matrix::Zero(d, d);
    for (int i = 0; i < kDraws; ++i) {
        const Vector x = draw_context(single, rng).row(0).transpose();
        sigma.selfadjointView<Eigen::Lower>().rankUpdate(x);
    }
    sigma = Matrix(sigma.selfadjointView<Eigen::Lower>()) / static_cast<double>(kDraws);
    cache.emplace(key, sigma);
    return sigma;
}

double lambda_min_round(const EnvSpec& env, double b_thresh, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("verify_lambda_min: delta must lie in (0, 1)");
    const Matrix sigma = context_second_moment(env);
    const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(sigma, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (!(lam > 0.0)) throw ParameterError("verify_lambda_min: the context second moment is singular");
    const double d = env.glm.d;
    const double lead = std::pow((std::sqrt(d) + std::sqrt(std::log(1.0 / delta))) / lam, 2.0) + 2.0 * b_thresh / lam;
    return lead + per_round_bound(env.delay, static_cast<std::int64_t>(std::ceil(lead)), delta);
}

TailReport verify_lambda_min(const EnvSpec& env, double b_thresh, double delta, const TailOptions& options,
                             double t_scale) {
    const auto t = static_cast<std::int64_t>(std::ceil(t_scale * lambda_min_round(env, b_thresh, delta)));
    const int d = env.glm.d;
    auto blocks = run_blocks(options, std::size_t{0}, [&](Rng& rng, std::size_t count, std::size_t& below) {
        std::uniform_int_distribution<int> arm(0, env.k - 1);
        for (std::size_t trial = 0; trial < count; ++trial) {
            const auto delays = sample_delays(env.delay, t, rng);
            Matrix w = Matrix::Zero(d, d);
            for (std::int64_t s = 1; s <= t - 1; ++s) {
                const Matrix context = draw_context(env, rng);
                const Vector x = context.row(arm(rng)).transpose();
                if (s + delays[static_cast<std::size_t>(s - 1)] <= t - 1) {
                    w.selfadjointView<Eigen::Lower>().rankUpdate(x);
                }
            }
            w = Matrix(w.selfadjointView<Eigen::Lower>());
            const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(w, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
            if (lam < b_thresh) ++below;
        }
    });
    std::size_t below = 0;
    for (const std::size_t b : blocks) below += b;

    TailReport report;
    report.model = env.delay.describe() + " / " + std::string(context_law_name(env.context_law)) +
                   " d=" + std::to_string(d);
    report.statistic = "lambda_min";
    report.trials = options.trials;
    report.informational = true;
    TailCell cell = make_cell(t, delta, b_thresh, options.trials, below);
    cell.limit = 5.0 * delta;
    cell.pass = cell.p_hat <= cell.limit;
    report.cells.push_back(cell);
    report.pass = cell.pass;
    return report;
}

// ---------------------------------------------------------------- regret bounds

namespace {

const std::vector<std::string> kCommon = {"d", "T", "delta", "L_g", "sigma_hat", "kappa", "tau"};

double log_pos(double x) { return x > 1.0 ? std::log(x) : 0.0; }

double get(const BoundParams& params, const std::string& key) {
    const auto it = params.find(key);
    if (it == params.end()) throw MissingParameterError("regret_bound_rhs: missing parameter '" + key + "'");
    return it->second;
}

}  // namespace

const std::vector<std::string>& theorem_ids() {
    static const std::vector<std::string> ids = {"thm1",        "prop2-bounded", "prop2-iid",
                                                 "thm3-markov", "thm5-random",   "first-moment"};
    return ids;
}

std::vector<std::string> theorem_parameters(const std::string& theorem) {
    if (theorem == "thm1") return {"mu", "M", "sigma_G", "C3"};
    if (theorem == "prop2-bounded") return {"D_max"};
    if (theorem == "prop2-iid") return {"mu_I", "sigma_G", "C3"};
    if (theorem == "thm3-markov") return {"mu_M", "A1", "A2"};
    if (theorem == "thm5-random") return {"mu_R", "sigma_G", "C3"};
    if (theorem == "first-moment") return {"M", "B"};
    throw std::invalid_argument("unknown theorem id '" + theorem + "'");
}

RegretBoundEval regret_bound_rhs(const std::string& theorem, const BoundParams& params) {
    const std::vector<std::string> own = theorem_parameters(theorem);
    for (const auto& key : kCommon) get(params, key);
    for (const auto& key : own) get(params, key);

    RegretBoundEval eval;
    eval.theorem = theorem;
    for (const auto& key : kCommon) eval.params[key] = params.at(key);
    for (const auto& key : own) eval.params[key] = params.at(key);

    const double d = get(params, "d");
    const double horizon = get(params, "T");
    const double delta = get(params, "delta");
    const double l_g = get(params, "L_g");
    const double tau = get(params, "tau");
    const double log_td = log_pos(horizon / d);
    const double root = std::sqrt(2.0 * horizon * d * log_td);  // sqrt(2 T d log(T/d))
    const double confidence =
        2.0 * d * get(params, "sigma_hat") / get(params, "kappa") * log_pos(horizon / (d * delta)) * std::sqrt(horizon);
    const double log_tdelta = log_pos(horizon / delta);

    auto& terms = eval.terms;
    terms.emplace_back("tau", tau);
    if (theorem == "thm1" || theorem == "prop2-iid") {
        const double location = theorem == "thm1" ? get(params, "mu") + get(params, "M") : get(params, "mu_I");
        const double sg = get(params, "sigma_G");
        const double log_c3 = std::log(get(params, "C3"));
        const double log_t = log_pos(horizon);
        terms.emplace_back("delay-mean", l_g * 4.0 * std::sqrt(location) * std::sqrt(horizon * d * log_td));
        terms.emplace_back("delay-log-T",
                           l_g * std::pow(2.0, 1.75) * std::sqrt(sg) * std::pow(log_t, 0.25) * std::sqrt(d * log_td * horizon));
        const double nested = 2.0 * log_pos(1.0 / delta) + 2.0 * log_c3 * sg * std::sqrt(2.0 * log_t) + 2.0 * log_c3;
        terms.emplace_back("delay-deviation", l_g * 2.0 * root * std::sqrt(sg) * std::pow(std::max(0.0, nested), 0.25));
        terms.emplace_back("delay-constant",
                           l_g * 2.0 * root * std::sqrt(std::max(0.0, 1.0 + 2.0 * sg * sg * log_c3)));
    } else if (theorem == "prop2-bounded") {
        terms.emplace_back("delay-max", l_g * 2.0 * std::sqrt(get(params, "D_max")) * root);
    } else if (theorem == "thm3-markov") {
        const double mu_m = get(params, "mu_M");
        terms.emplace_back("delay-mean", l_g * 2.0 * std::sqrt(mu_m) * root);
        terms.emplace_back("delay-bernstein-linear", l_g * 2.0 * std::sqrt(get(params, "A2") * log_tdelta) * root);
        terms.emplace_back("delay-bernstein-root",
                           l_g * 2.0 * std::pow(2.0 * get(params, "A1") * mu_m * log_tdelta, 0.25) * root);
    } else if (theorem == "thm5-random") {
        const double sg = get(params, "sigma_G");
        terms.emplace_back("delay-mean", l_g * 2.0 * std::sqrt(get(params, "mu_R")) * root);
        terms.emplace_back("delay-log-T", l_g * 2.0 * std::sqrt(sg) * std::pow(2.0 * log_pos(horizon), 0.25) * root);
        terms.emplace_back("delay-deviation",
                           l_g * 2.0 * std::sqrt(sg) * std::pow(2.0 * log_pos(get(params, "C3") / delta), 0.25) * root);
    } else if (theorem == "first-moment") {
        const double mb = get(params, "M") + get(params, "B");
        terms.emplace_back("delay-mean", l_g * 2.0 * std::sqrt(mb) * root);
        terms.emplace_back("delay-log", l_g * 2.0 * std::sqrt(log_tdelta) * root);
        terms.emplace_back("delay-cross", l_g * 2.0 * std::pow(2.0 * mb * log_tdelta, 0.25) * root);
    }
    terms.emplace_back("confidence", l_g * confidence);
    for (const auto& [name, value] : terms) eval.total += value;
    return eval;
}

std::optional<BoundParams> bound_params_for(const std::string& theorem, const DelayModel& model,
                                            const BoundParams& base) {
    theorem_parameters(theorem);
    BoundParams p = base;
    const auto* bounded = model.as<delay::Bounded>();
    const auto* envelope = model.as<delay::IidEnvelope>();
    const auto* exponential = model.as<delay::IidExponential>();
    const auto* markov = model.as<delay::Markov>();
    const auto* copula = model.as<delay::DependentCopula>();
    const auto* first = model.as<delay::FirstMoment>();
    // Bounded delays sit below every envelope: location d_max, empty tail beyond it.
    const double d_max = bounded != nullptr ? static_cast<double>(bounded->d_max) : 0.0;

    if (theorem == "prop2-bounded") {
        if (bounded == nullptr) return std::nullopt;
        p["D_max"] = d_max;
        return p;
    }
    if (theorem == "thm1" || theorem == "prop2-iid") {
        double location = 0.0;
        double big_m = 0.0;
        double sigma = 1.0;
        double q = 0.0;
        if (bounded != nullptr) {
            location = d_max;
        } else if (envelope != nullptr) {
            location = envelope->mu;
            big_m = envelope->big_m;
            sigma = envelope->sigma;
            q = envelope->q;
        } else if (exponential != nullptr) {
            location = exponential->mu_i;
            sigma = exponential->sigma_i;
        } else {
            return std::nullopt;
        }
        if (theorem == "prop2-iid") {
            if (envelope != nullptr) return std::nullopt;
            // The iid statement is in terms of the mean; the shifted generator's
            // mean sits above its shift, so the tail condition still holds there.
            p["mu_I"] = bounded != nullptr ? d_max : mean_delay(model);
        } else {
            p["mu"] = location;
            p["M"] = big_m;
        }
        p["sigma_G"] = sigma * std::sqrt(2.0 + q);
        p["C3"] = 2.0 * sigma * sigma + 1.0;
        return p;
    }
    if (theorem == "thm3-markov") {
        if (markov != nullptr) {
            p["mu_M"] = markov->mu_m;
            p["A1"] = markov_a1(markov->lambda);
            p["A2"] = markov_a2(markov->lambda);
            return p;
        }
        // Independent delays form a chain with lambda = 0 when the tail condition (q > 0) holds.
        if (bounded != nullptr || (envelope != nullptr && envelope->q > 0.0)) {
            p["mu_M"] = mean_delay(model);
            p["A1"] = markov_a1(0.0);
            p["A2"] = markov_a2(0.0);
            return p;
        }
        return std::nullopt;
    }
    if (theorem == "thm5-random") {
        if (copula != nullptr) {
            p["mu_R"] = copula->mu_r;
            p["sigma_G"] = sigma_g(model);
            p["C3"] = 2.0 * copula->sigma_r * copula->sigma_r + 1.0;
            return p;
        }
        if (bounded != nullptr) {
            p["mu_R"] = d_max;
            p["sigma_G"] = std::riemann_zeta(2.0);
            p["C3"] = 3.0;
            return p;
        }
        return std::nullopt;
    }
    // first-moment: any independent delays with a finite mean.
    if (first != nullptr) {
        p["M"] = first->big_m;
        p["B"] = first->b;
        return p;
    }
    if (markov != nullptr || copula != nullptr) return std::nullopt;
    p["M"] = 0.0;
    p["B"] = mean_delay(model);
    return p;
}

// ---------------------------------------------------------------- Prop-1 vs Prop-5

std::vector<BoundComparisonRow> compare_prop1_prop5(double sigma, double q, double mu, double big_m,
                                                    std::span<const double> delta_grid) {
    if (!(q > 0.0)) throw ParameterError("compare_prop1_prop5: q must be > 0");
    const DelayModel model = DelayModel::iid_envelope(mu, big_m, sigma, q);
    std::vector<BoundComparisonRow> rows;
    for (const double delta : delta_grid) {
        BoundComparisonRow row;
        row.q = q;
        row.delta = delta;
        row.prop1 = gt_bound(model, delta);
        row.prop5 = gt_bound_hoeffding(mu, big_m, sigma, q, delta);
        row.prop5_weaker = row.prop5 >= row.prop1;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------- output

nlohmann::json to_json(const TailReport& report) {
    nlohmann::json j;
    j["model"] = report.model;
    j["statistic"] = report.statistic;
    j["trials"] = report.trials;
    j["informational"] = report.informational;
    j["pass"] = report.pass;
    j["cells"] = nlohmann::json::array();
    for (const TailCell& c : report.cells) {
        j["cells"].push_back({{"t", c.t},
                              {"delta", c.delta},
                              {"bound", c.bound},
                              {"trials", c.trials},
                              {"exceed", c.exceed},
                              {"p_hat", c.p_hat},
                              {"se", c.se},
                              {"wilson_lo", c.wilson_lo},
                              {"wilson_hi", c.wilson_hi},
                              {"limit", c.limit},
                              {"pass", c.pass}});
    }
    j["mean_checks"] = nlohmann::json::array();
    for (const MeanCheck& m : report.mean_checks) {
        j["mean_checks"].push_back(
            {{"t", m.t}, {"mean", m.mean}, {"se", m.se}, {"limit", m.limit}, {"pass", m.pass}});
    }
    return j;
}

nlohmann::json to_json(const RegretBoundEval& eval) {
    nlohmann::json j;
    j["theorem"] = eval.theorem;
    j["params"] = eval.params;
    j["total"] = eval.total;
    j["terms"] = nlohmann::json::array();
    for (const auto& [name, value] : eval.terms) j["terms"].push_back({{"name", name}, {"value", value}});
    return j;
}

nlohmann::json to_json(const std::vector<BoundComparisonRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"q", r.q}, {"delta", r.delta}, {"prop1", r.prop1}, {"prop5", r.prop5},
                     {"prop5_weaker", r.prop5_weaker}});
    }
    return j;
}

std::string format_table(const TailReport& report) {
    std::ostringstream os;
    os << report.statistic << " tail  " << report.model << "  trials=" << report.trials
       << (report.informational ? "  (informational)" : "") << '\n';
    os << std::setw(8) << "t" << std::setw(8) << "delta" << std::setw(12) << "bound" << std::setw(10) << "p_hat"
       << std::setw(10) << "limit" << std::setw(22) << "wilson95" << std::setw(6) << "ok" << '\n';
    os << std::fixed;
    for (const TailCell& c : report.cells) {
        std::ostringstream ci;
        ci << std::fixed << std::setprecision(5) << '[' << c.wilson_lo << ',' << c.wilson_hi << ']';
        os << std::setw(8) << c.t << std::setw(8) << std::setprecision(3) << c.delta << std::setw(12)
           << std::setprecision(3) << c.bound << std::setw(10) << std::setprecision(5) << c.p_hat << std::setw(10)
           << c.limit << std::setw(22) << ci.str() << std::setw(6) << (c.pass ? "yes" : "NO") << '\n';
    }
    for (const MeanCheck& m : report.mean_checks) {
        os << "  E[G_t] at t=" << m.t << ": " << std::setprecision(4) << m.mean << " (se " << m.se << ") vs "
           << m.limit << "  " << (m.pass ? "yes" : "NO") << '\n';
    }
    os << (report.pass ? "PASS" : "FAIL") << '\n';
    return os.str();
}

std::string format_table(const std::vector<BoundComparisonRow>& rows) {
    std::ostringstream os;
    os << std::setw(6) << "q" << std::setw(8) << "delta" << std::setw(12) << "prop1" << std::setw(12) << "prop5"
       << std::setw(14) << "prop5>=prop1" << '\n';
    os << std::fixed;
    for (const auto& r : rows) {
        os << std::setw(6) << std::setprecision(2) << r.q << std::setw(8) << std::setprecision(3) << r.delta
           << std::setw(12) << std::setprecision(4) << r.prop1 << std::setw(12) << r.prop5 << std::setw(14)
           << (r.prop5_weaker ? "yes" : "no") << '\n';
    }
    return os.str();
}

}  // namespace dglcb
