#pragma once

// Command implementations behind the `dglcb` executable: run, verify, plot-data.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dglcb {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitPartialFailure = 2;

/// The trace CSV header, in column order.
inline constexpr const char* kTraceHeader = "run_id,seed,t,arm,instant_regret,cum_regret,g_t,beta_t,mle_flag";

/// Plain decimal notation (no exponent) with at least 12 significant digits.
std::string format_decimal(double value);

/// Runs the sweep described by the config file with dotted-key overrides
/// applied (after $DBL_SEED). Writes config.resolved.json, summary.json,
/// timing.json and optionally traces/*.csv under outputs.dir.
int cmd_run(const std::filesystem::path& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
            std::ostream& out, std::ostream& err);

struct VerifyRequest {
    /// gt, gtmax, lambda-min, compare-prop5 or first-moment-mean.
    std::string family;
    std::string model = "bounded:0";
    std::vector<std::int64_t> t_grid = {100, 1000};
    std::vector<double> delta_grid = {0.05, 0.1};
    std::int64_t horizon = 1000;
    std::size_t trials = 100'000;
    std::uint64_t seed = 0;
    int parallelism = 1;
    // compare-prop5
    double q = 1.0;
    double sigma = 1.0;
    double mu = 1.0;
    double big_m = 1.0;
    // lambda-min
    int d = 2;
    int k = 10;
    std::string context_law = "uniform-ball";
    double b_thresh = 1.0;
    double t_scale = 1.0;
    std::optional<std::filesystem::path> json_out;
};

/// Prints a report table; exit 0 iff every hard check passes.
int cmd_verify(const VerifyRequest& request, std::ostream& out, std::ostream& err);

struct PlotRequest {
    std::filesystem::path dir;
    std::string y = "cum_regret";
    std::optional<std::string> overlay;
    std::optional<std::uint64_t> cell;
    std::optional<std::filesystem::path> out_path;
};

/// Aggregates trace CSVs into `t,mean,lo,hi[,bound_rhs]` (lo/hi = mean -/+ 1.96 SE).
int cmd_plotdata(const PlotRequest& request, std::ostream& out, std::ostream& err);

/// Full command-line entry point.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dglcb
