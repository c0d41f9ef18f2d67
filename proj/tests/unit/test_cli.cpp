#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "dglcb/cli.hpp"

using namespace dglcb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("dglcb_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);) lines.push_back(line);
    return lines;
}

std::vector<double> column(const std::string& csv, std::size_t col) {
    std::vector<double> values;
    const auto lines = lines_of(csv);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::stringstream ss(lines[i]);
        std::string field;
        for (std::size_t c = 0; c <= col; ++c) std::getline(ss, field, ',');
        values.push_back(std::stod(field));
    }
    return values;
}

fs::path write_config(const fs::path& dir, json tree) {
    tree["outputs"]["dir"] = (dir / "out").string();
    const fs::path path = dir / "config.json";
    std::ofstream(path) << tree.dump(2);
    return path;
}

json small_config() {
    return json::parse(R"({
        "env": {"link": "logistic", "d": 2, "k": 4, "horizon": 100, "theta_max": 2,
                 "theta_star": [0.6, -0.3],
                 "delay": {"kind": "iid-exponential", "mu_i": 3}},
        "policy": {"kind": "ducb", "tau": 3},
        "seeds": {"master": 11, "count": 1},
        "outputs": {"emit_trace": true, "checkpoints": [50, 100]}
    })");
}

int run(const fs::path& config, std::vector<std::pair<std::string, std::string>> overrides = {}) {
    std::ostringstream out, err;
    return cmd_run(config, overrides, out, err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("format_decimal") {
    CHECK(format_decimal(0.0) == "0");
    CHECK(format_decimal(1.5) == "1.50000000000");
    CHECK(format_decimal(1e-7).find('e') == std::string::npos);
    CHECK(format_decimal(3e9).find('e') == std::string::npos);
    CHECK(std::stod(format_decimal(0.1 + 0.2)) == doctest::Approx(0.3).epsilon(1e-11));
}

TEST_CASE("run writes a trace with one row per round") {
    const fs::path dir = scratch("trace");
    REQUIRE(run(write_config(dir, small_config())) == kExitOk);
    const fs::path trace = dir / "out" / "traces" / "run_c0-r0.csv";
    REQUIRE(fs::exists(trace));
    const auto lines = lines_of(slurp(trace));
    REQUIRE(lines.size() == 101);
    CHECK(lines[0] == kTraceHeader);
    CHECK(fs::exists(dir / "out" / "summary.json"));
    CHECK(fs::exists(dir / "out" / "timing.json"));
    const json resolved = json::parse(slurp(dir / "out" / "config.resolved.json"));
    CHECK(resolved["policy"]["tau"] == 3);
}

TEST_CASE("summaries are byte-identical across reruns and parallelism") {
    const fs::path dir = scratch("repeat");
    json tree = small_config();
    tree["outputs"]["emit_trace"] = false;
    tree["env"]["delay"] = json::array({{{"kind", "bounded"}, {"d_max", 0}}, {{"kind", "bounded"}, {"d_max", 5}}});
    const fs::path config = write_config(dir, tree);
    REQUIRE(run(config, {{"seeds.count", "50"}}) == kExitOk);
    const std::string first = slurp(dir / "out" / "summary.json");
    REQUIRE(run(config, {{"seeds.count", "50"}}) == kExitOk);
    CHECK(slurp(dir / "out" / "summary.json") == first);
    REQUIRE(run(config, {{"seeds.count", "50"}, {"parallelism", "8"}}) == kExitOk);
    CHECK(slurp(dir / "out" / "summary.json") == first);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    std::ostringstream out, err;
    CHECK(cmd_run(dir / "missing.json", {}, out, err) == kExitConfigError);

    json bad = small_config();
    bad["env"]["bogus"] = 1;
    CHECK(run(write_config(dir, bad)) == kExitConfigError);

    json failing = small_config();
    failing["policy"] = json{{"kind", "dts-lin"}, {"a", 0.0}, {"tau", 3}};
    failing["outputs"]["emit_trace"] = false;
    CHECK(run(write_config(dir, failing)) == kExitPartialFailure);
    const json summary = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(summary["cells"][0]["failures"] == 1);
    CHECK(summary["cells"][0]["per_run"][0].contains("error"));
}

TEST_CASE("command line parsing") {
    const fs::path dir = scratch("argv");
    const std::string config = write_config(dir, small_config()).string();
    std::vector<std::string> args = {"dglcb", "run", config, "--seeds.count", "2", "--outputs.emit_trace=false"};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    CHECK(run_cli(static_cast<int>(argv.size()), argv.data(), out, err) == kExitOk);
    const json resolved = json::parse(slurp(dir / "out" / "config.resolved.json"));
    CHECK(resolved["seeds"]["count"] == 2);
    CHECK(resolved["outputs"]["emit_trace"] == false);

    std::vector<std::string> dangling = {"dglcb", "run", config, "--seeds.count"};
    argv.clear();
    for (auto& a : dangling) argv.push_back(a.data());
    CHECK(run_cli(static_cast<int>(argv.size()), argv.data(), out, err) == kExitConfigError);
}

TEST_CASE("verify") {
    std::ostringstream out, err;
    VerifyRequest gt;
    gt.family = "gt";
    gt.model = "bounded:3";
    gt.trials = 10'000;
    CHECK(cmd_verify(gt, out, err) == kExitOk);

    VerifyRequest cmp;
    cmp.family = "compare-prop5";
    cmp.q = 0.5;
    cmp.delta_grid = {0.01, 0.1};
    std::ostringstream table;
    cmd_verify(cmp, table, err);
    CHECK(table.str().find("prop5") != std::string::npos);
    CHECK(lines_of(table.str()).size() >= 3);

    VerifyRequest unknown;
    unknown.family = "nope";
    CHECK(cmd_verify(unknown, out, err) == kExitConfigError);
}

TEST_CASE("plot-data") {
    SUBCASE("one trace gives a degenerate band") {
        const fs::path dir = scratch("plot1");
        REQUIRE(run(write_config(dir, small_config())) == kExitOk);
        PlotRequest req;
        req.dir = dir / "out";
        std::ostringstream out, err;
        REQUIRE(cmd_plotdata(req, out, err) == kExitOk);
        const auto mean = column(out.str(), 1);
        const auto lo = column(out.str(), 2);
        const auto hi = column(out.str(), 3);
        REQUIRE(mean.size() == 100);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            CHECK(lo[i] == mean[i]);
            CHECK(hi[i] == mean[i]);
        }
    }
    SUBCASE("several traces with an overlay") {
        const fs::path dir = scratch("plotn");
        json tree = small_config();
        tree["env"]["delay"] = json{{"kind", "bounded"}, {"d_max", 4}};
        REQUIRE(run(write_config(dir, tree), {{"seeds.count", "5"}}) == kExitOk);
        PlotRequest req;
        req.dir = dir / "out";
        req.overlay = "prop2-bounded";
        req.cell = 0;
        std::ostringstream out, err;
        REQUIRE(cmd_plotdata(req, out, err) == kExitOk);
        CHECK(lines_of(out.str())[0] == "t,mean,lo,hi,bound_rhs");
        const auto mean = column(out.str(), 1);
        const auto lo = column(out.str(), 2);
        const auto hi = column(out.str(), 3);
        const auto rhs = column(out.str(), 4);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            CHECK(lo[i] <= mean[i]);
            CHECK(mean[i] <= hi[i]);
            if (i > 0) CHECK(rhs[i] >= rhs[i - 1]);
        }
    }
    SUBCASE("missing traces") {
        const fs::path dir = scratch("plot0");
        PlotRequest req;
        req.dir = dir;
        std::ostringstream out, err;
        CHECK(cmd_plotdata(req, out, err) == kExitConfigError);
    }
}

}
