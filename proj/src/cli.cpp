#include "dglcb/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dglcb/bounds.hpp"
#include "dglcb/config.hpp"

namespace dglcb {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_decimal(double value) {
    if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    if (value == 0.0) return "0";
    const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
    const int decimals = std::max(0, 11 - exponent);
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
    return buffer;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

json mean_se_json(const MeanSe& m) { return json{{"mean", m.mean}, {"se", m.se}, {"n", m.n}}; }

std::string run_id(std::uint64_t cell, int rep) { return "c" + std::to_string(cell) + "-r" + std::to_string(rep); }

void write_trace(const fs::path& path, const SweepCell& cell, int rep, const RunTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << kTraceHeader << '\n';
    const std::string id = run_id(cell.index, rep);
    const std::string seed = std::to_string(trace.summary.seed);
    for (const RoundRecord& r : trace.rounds) {
        out << id << ',' << seed << ',' << r.t << ',' << r.arm << ',' << format_decimal(r.instant_regret) << ','
            << format_decimal(r.cum_regret) << ',' << r.g_t << ',' << format_decimal(r.beta) << ',' << r.mle_flag
            << '\n';
    }
}

}  // namespace

int cmd_run(const fs::path& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
            std::ostream& out, std::ostream& err) {
    ExperimentConfig config;
    try {
        json tree = load_json_file(config_path);
        apply_seed_env(tree);
        for (const auto& [key, value] : overrides) apply_override(tree, key, value);
        config = parse_config(tree);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }

    const fs::path dir = config.outputs.dir;
    const fs::path trace_dir = dir / "traces";
    try {
        fs::create_directories(dir);
        if (config.outputs.emit_trace) fs::create_directories(trace_dir);
        write_file(dir / "config.resolved.json", config.resolved.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << '\n';
        return kExitConfigError;
    }

    const std::vector<SweepCell> cells = build_cells(config);
    SweepOptions options;
    options.master_seed = config.master_seed;
    options.seeds = config.seed_count;
    options.parallelism = config.parallelism;
    options.run.checkpoints = config.outputs.checkpoints;
    options.run.keep_rounds = config.outputs.emit_trace;
    std::string write_error;
    if (config.outputs.emit_trace) {
        options.on_trace = [&](const SweepCell& cell, int rep, const RunTrace& trace) {
            try {
                write_trace(trace_dir / ("run_" + run_id(cell.index, rep) + ".csv"), cell, rep, trace);
            } catch (const std::exception& e) {
                if (write_error.empty()) write_error = e.what();
            }
        };
    }

    const auto start = std::chrono::steady_clock::now();
    const std::vector<CellResult> results = sweep(cells, options);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json summary;
    summary["master_seed"] = config.master_seed;
    summary["seed_count"] = config.seed_count;
    summary["cells"] = json::array();
    json timing;
    timing["total_seconds"] = elapsed;
    timing["cells"] = json::array();
    std::size_t failures = 0;
    for (std::size_t c = 0; c < results.size(); ++c) {
        const CellResult& r = results[c];
        json cell;
        cell["index"] = r.index;
        cell["name"] = r.name;
        cell["policy"] = policy_kind_name(cells[c].policy.kind);
        cell["delay"] = cells[c].env.delay.describe();
        cell["runs"] = r.runs.size();
        cell["failures"] = r.failures;
        cell["final_regret"] = mean_se_json(r.final_regret);
        cell["g_star"] = {{"mean", r.g_star.mean}, {"se", r.g_star.se}, {"max", r.g_star_max}};
        cell["checkpoints"] = json::array();
        for (std::size_t i = 0; i < options.run.checkpoints.size(); ++i) {
            json cp = mean_se_json(r.checkpoint_regret[i]);
            cp["t"] = options.run.checkpoints[i];
            cell["checkpoints"].push_back(cp);
        }
        cell["per_run"] = json::array();
        double wall = 0.0;
        for (const RunSummary& run : r.runs) {
            json item{{"seed", run.seed}, {"final_regret", run.final_regret}, {"g_star", run.g_star},
                      {"rounds", run.rounds_completed}};
            if (run.failed()) item["error"] = run.error;
            cell["per_run"].push_back(item);
            wall += run.wall_seconds;
        }
        summary["cells"].push_back(cell);
        timing["cells"].push_back({{"index", r.index}, {"name", r.name}, {"episode_seconds", wall}});
        failures += r.failures;
        out << r.name << ": final regret " << r.final_regret.mean << " (se " << r.final_regret.se << "), G_T* mean "
            << r.g_star.mean << ", failures " << r.failures << '\n';
    }

    try {
        if (config.outputs.emit_summary) write_file(dir / "summary.json", summary.dump(2) + "\n");
        write_file(dir / "timing.json", timing.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << '\n';
        return kExitConfigError;
    }
    if (!write_error.empty()) {
        err << "trace output error: " << write_error << '\n';
        return kExitPartialFailure;
    }
    if (failures > 0) {
        err << failures << " run(s) failed; see summary.json\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}

int cmd_verify(const VerifyRequest& request, std::ostream& out, std::ostream& err) {
    try {
        TailOptions options;
        options.trials = request.trials;
        options.seed = request.seed;
        options.parallelism = request.parallelism;
        json report_json;
        bool pass = true;
        if (request.family == "gt" || request.family == "gtmax" || request.family == "first-moment-mean") {
            const DelayModel model = parse_model_spec(request.model);
            if (request.family == "gt") {
                const TailReport report = verify_gt_tail(model, request.t_grid, request.delta_grid, options);
                out << format_table(report);
                report_json = to_json(report);
                pass = report.pass;
            } else if (request.family == "gtmax") {
                const TailReport report = verify_gtmax_tail(model, request.horizon, request.delta_grid, options);
                out << format_table(report);
                report_json = to_json(report);
                pass = report.pass;
            } else {
                const auto checks = verify_first_moment_mean(model, request.t_grid, options);
                report_json = json::array();
                for (const MeanCheck& m : checks) {
                    out << "E[G_t] at t=" << m.t << ": " << m.mean << " (se " << m.se << ") vs M+B=" << m.limit
                        << "  " << (m.pass ? "yes" : "NO") << '\n';
                    report_json.push_back({{"t", m.t}, {"mean", m.mean}, {"se", m.se}, {"limit", m.limit},
                                           {"pass", m.pass}});
                    pass = pass && m.pass;
                }
            }
        } else if (request.family == "lambda-min") {
            EnvSpec env;
            env.glm.d = request.d;
            env.k = request.k;
            env.context_law = parse_context_law(request.context_law);
            env.delay = parse_model_spec(request.model);
            const TailReport report = verify_lambda_min(env, request.b_thresh, request.delta_grid.front(), options,
                                                        request.t_scale);
            out << format_table(report);
            report_json = to_json(report);
        } else if (request.family == "compare-prop5") {
            const auto rows = compare_prop1_prop5(request.sigma, request.q, request.mu, request.big_m,
                                                  request.delta_grid);
            out << format_table(rows);
            report_json = to_json(rows);
        } else {
            err << "unknown verify family '" << request.family
                << "' (expected gt, gtmax, first-moment-mean, lambda-min or compare-prop5)\n";
            return kExitConfigError;
        }
        if (request.json_out) write_file(*request.json_out, report_json.dump(2) + "\n");
        return pass ? kExitOk : kExitPartialFailure;
    } catch (const std::exception& e) {
        err << "verify error: " << e.what() << '\n';
        return kExitConfigError;
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    return fields;
}

}  // namespace

int cmd_plotdata(const PlotRequest& request, std::ostream& out, std::ostream& err) {
    try {
        fs::path trace_dir = request.dir;
        fs::path run_dir = request.dir;
        if (fs::is_directory(request.dir / "traces")) {
            trace_dir = request.dir / "traces";
        } else {
            run_dir = request.dir.parent_path();
        }
        std::vector<fs::path> files;
        if (fs::is_directory(trace_dir)) {
            for (const auto& entry : fs::directory_iterator(trace_dir)) {
                if (entry.path().extension() != ".csv") continue;
                if (request.cell) {
                    const std::string prefix = "run_c" + std::to_string(*request.cell) + "-";
                    if (entry.path().filename().string().rfind(prefix, 0) != 0) continue;
                }
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            err << "plot-data: no trace CSVs found under '" << trace_dir.string() << "'\n";
            return kExitConfigError;
        }

        std::map<std::int64_t, std::vector<double>> by_t;
        for (const fs::path& file : files) {
            std::ifstream in(file);
            std::string line;
            std::getline(in, line);
            const auto header = split_csv_line(line);
            const auto t_col = std::find(header.begin(), header.end(), "t") - header.begin();
            const auto y_col = std::find(header.begin(), header.end(), request.y) - header.begin();
            if (y_col == static_cast<std::ptrdiff_t>(header.size())) {
                err << "plot-data: column '" << request.y << "' not in " << file.string() << '\n';
                return kExitConfigError;
            }
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto fields = split_csv_line(line);
                by_t[std::stoll(fields[static_cast<std::size_t>(t_col)])].push_back(
                    std::stod(fields[static_cast<std::size_t>(y_col)]));
            }
        }

        std::optional<ExperimentConfig> config;
        std::size_t env_index = 0;
        std::size_t policy_index = 0;
        if (request.overlay) {
            config = parse_config(load_json_file(run_dir / "config.resolved.json"));
            const std::uint64_t cell = request.cell.value_or(0);
            env_index = cell / config->policies.size();
            policy_index = cell % config->policies.size();
            if (env_index >= config->envs.size()) throw std::runtime_error("plot-data: cell index out of range");
        }

        std::ostringstream csv;
        csv << "t,mean,lo,hi" << (request.overlay ? ",bound_rhs" : "") << '\n';
        for (const auto& [t, values] : by_t) {
            const MeanSe m = mean_se(values);
            csv << t << ',' << format_decimal(m.mean) << ',' << format_decimal(m.mean - 1.96 * m.se) << ','
                << format_decimal(m.mean + 1.96 * m.se);
            if (request.overlay) {
                const EnvSpec& env = config->envs[env_index];
                const PolicyConfig& policy = config->policies[policy_index];
                const BoundParams base{{"d", env.glm.d},         {"T", static_cast<double>(t)},
                                       {"delta", policy.delta},  {"L_g", env.glm.l_g},
                                       {"sigma_hat", env.glm.sigma_hat}, {"kappa", env.glm.kappa},
                                       {"tau", static_cast<double>(policy.tau)}};
                const auto params = bound_params_for(*request.overlay, env.delay, base);
                if (!params) {
                    throw std::runtime_error("theorem '" + *request.overlay + "' does not apply to delay model " +
                                             env.delay.describe());
                }
                csv << ',' << format_decimal(regret_bound_rhs(*request.overlay, *params).total);
            }
            csv << '\n';
        }
        if (request.out_path) {
            write_file(*request.out_path, csv.str());
        } else {
            out << csv.str();
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "plot-data error: " << e.what() << '\n';
        return kExitConfigError;
    }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Delay-adaptive generalized linear contextual bandits"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the experiment sweep described by a config file");
    std::string config_path;
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->allow_extras();
    run->footer("Any other --dotted.key VALUE pair overrides the matching config key, e.g. --seeds.count 50.");

    auto* verify = app.add_subcommand("verify", "Monte-Carlo check of a delay bound");
    VerifyRequest vr;
    std::string json_out;
    verify->add_option("family", vr.family, "gt | gtmax | first-moment-mean | lambda-min | compare-prop5")->required();
    verify->add_option("--model", vr.model, "Delay model, e.g. bounded:3 or first-moment:M=5,B=10");
    verify->add_option("--t", vr.t_grid, "Rounds t")->delimiter(',');
    verify->add_option("--delta", vr.delta_grid, "Confidence levels")->delimiter(',');
    verify->add_option("--T", vr.horizon, "Horizon for gtmax");
    verify->add_option("--trials", vr.trials, "Monte-Carlo trials");
    verify->add_option("--seed", vr.seed, "Seed");
    verify->add_option("--parallelism", vr.parallelism, "Worker threads");
    verify->add_option("--q", vr.q, "Tail exponent q (compare-prop5)");
    verify->add_option("--sigma", vr.sigma, "Envelope sigma (compare-prop5)");
    verify->add_option("--mu", vr.mu, "Envelope mu (compare-prop5)");
    verify->add_option("--M", vr.big_m, "Envelope threshold M (compare-prop5)");
    verify->add_option("--d", vr.d, "Dimension (lambda-min)");
    verify->add_option("--k", vr.k, "Arms (lambda-min)");
    verify->add_option("--law", vr.context_law, "Context law (lambda-min)");
    verify->add_option("--B", vr.b_thresh, "Eigenvalue threshold (lambda-min)");
    verify->add_option("--t-scale", vr.t_scale, "Multiple of the threshold round (lambda-min)");
    verify->add_option("--json", json_out, "Also write the report as JSON");

    auto* plot = app.add_subcommand("plot-data", "Aggregate trace CSVs into plot-ready data");
    PlotRequest pr;
    std::string overlay;
    std::uint64_t cell = 0;
    std::string plot_out;
    plot->add_option("dir", pr.dir, "Run output directory (or its traces/ directory)")->required();
    plot->add_option("--y", pr.y, "Trace column to aggregate");
    auto* overlay_opt = plot->add_option("--overlay", overlay, "Theorem id whose bound is appended");
    auto* cell_opt = plot->add_option("--cell", cell, "Restrict to one sweep cell");
    plot->add_option("--out", plot_out, "Write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfigError;
    }

    if (run->parsed()) {
        std::vector<std::pair<std::string, std::string>> overrides;
        const std::vector<std::string> extras = run->remaining();
        for (std::size_t i = 0; i < extras.size(); ++i) {
            const std::string& arg = extras[i];
            if (arg.rfind("--", 0) != 0 || arg.size() < 3) {
                err << "config error: unexpected argument '" << arg << "'\n";
                return kExitConfigError;
            }
            const std::string body = arg.substr(2);
            const auto eq = body.find('=');
            if (eq != std::string::npos) {
                overrides.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            } else if (i + 1 < extras.size()) {
                overrides.emplace_back(body, extras[++i]);
            } else {
                err << "config error: override '" << arg << "' has no value\n";
                return kExitConfigError;
            }
        }
        return cmd_run(config_path, overrides, out, err);
    }
    if (verify->parsed()) {
        if (!json_out.empty()) vr.json_out = json_out;
        return cmd_verify(vr, out, err);
    }
    if (plot->parsed()) {
        if (overlay_opt->count() > 0) pr.overlay = overlay;
        if (cell_opt->count() > 0) pr.cell = cell;
        if (!plot_out.empty()) pr.out_path = plot_out;
        return cmd_plotdata(pr, out, err);
    }
    return kExitConfigError;
}

}  // namespace dglcb
