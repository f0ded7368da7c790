#include "cwdsim/calibration.hpp"
#include "cwdsim/cli.hpp"
#include "cwdsim/run.hpp"
#include "oracle.hpp"
#include "tempdir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace cwdsim;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = CWDSIM_SOURCE_DIR;
const std::string kQuick = (kSource / "scenarios" / "quick.cfg").string();

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

// Runs the installed binary through the shell and returns its exit status.
int binary(const std::string& args) {
    const std::string cmd = std::string("\"") + CWDSIM_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string trajectory_sha(const fs::path& run) {
    return nlohmann::json::parse(slurp(run / "manifest.json"))["files"]["trajectory.csv"]["sha256"];
}

std::size_t data_lines(const fs::path& csv) {
    std::istringstream in(slurp(csv));
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] != '#') ++n;
    }
    return n - 1;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors exit 2, help exits 0") {
        CHECK(cli({}).code == kExitUsage);
        CHECK(cli({"--help"}).code == kExitOk);
        CHECK(cli({"fly"}).code == kExitUsage);
        CHECK(cli({"run", "--scenario", kQuick}).code == kExitUsage);
        TempDir tmp("usage");
        CHECK(cli({"run", "--scenario", (tmp / "missing.cfg").string(), "--out", (tmp / "r").string()}).code ==
              kExitUsage);
        std::ofstream(tmp / "bad.cfg") << "policy = X9\n";
        CHECK(cli({"run", "--scenario", (tmp / "bad.cfg").string(), "--out", (tmp / "r").string()}).code == kExitUsage);
        std::ofstream(tmp / "typo.cfg") << "polcy = F3\n";
        CHECK(cli({"run", "--scenario", (tmp / "typo.cfg").string(), "--out", (tmp / "r").string()}).code ==
              kExitUsage);
        CHECK(cli({"sweep", "--policies", "", "--out", (tmp / "s").string()}).code == kExitUsage);
        CHECK(cli({"sweep", "--policies", "F3", "--cases", "VI", "--out", (tmp / "s").string()}).code == kExitUsage);
        CHECK(cli({"analyze", "--run", (tmp / "r").string(), "--grid", "abc"}).code == kExitUsage);
    }

    TEST_CASE("repeated runs give identical trajectories") {
        TempDir tmp("repeat");
        REQUIRE(cli({"run", "--scenario", kQuick, "--out", (tmp / "a").string()}).code == kExitOk);
        REQUIRE(cli({"run", "--scenario", kQuick, "--out", (tmp / "b").string()}).code == kExitOk);
        REQUIRE(cli({"run", "--scenario", kQuick, "--seed", "8", "--out", (tmp / "c").string()}).code == kExitOk);
        CHECK(trajectory_sha(tmp / "a") == trajectory_sha(tmp / "b"));
        CHECK(slurp(tmp / "a" / "trajectory.csv") == slurp(tmp / "b" / "trajectory.csv"));
        CHECK(slurp(tmp / "a" / "metrics.json") == slurp(tmp / "b" / "metrics.json"));
        CHECK(trajectory_sha(tmp / "a") != trajectory_sha(tmp / "c"));
    }

    TEST_CASE("analyze writes its products and is idempotent") {
        TempDir tmp("analyze");
        const auto run = tmp / "r";
        REQUIRE(cli({"run", "--scenario", kQuick, "--out", run.string()}).code == kExitOk);
        REQUIRE(cli({"analyze", "--run", run.string()}).code == kExitOk);
        std::map<std::string, std::string> first;
        for (const char* f : {"edie_grid.csv", "heatmap.csv", "lane_speeds.csv", "totals.csv"}) {
            REQUIRE(fs::exists(run / f));
            first[f] = slurp(run / f);
        }
        REQUIRE(cli({"analyze", "--run", run.string()}).code == kExitOk);
        for (const auto& [f, text] : first) CHECK(slurp(run / f) == text);
        CHECK(first["edie_grid.csv"].rfind("# grid_dx_m=100,grid_dt_s=10\n", 0) == 0);

        const auto coarse = tmp / "coarse";
        REQUIRE(cli({"analyze", "--run", run.string(), "--grid", "200x10", "--out", coarse.string()}).code == kExitOk);
        const auto text = slurp(coarse / "edie_grid.csv");
        CHECK(text.rfind("# grid_dx_m=200,grid_dt_s=10\n", 0) == 0);
        // 5000 m in 200 m cells, 4 lanes with the ramp, 90 s after warm-up in 10 s cells
        CHECK(data_lines(coarse / "edie_grid.csv") == 25 * 4 * 9);
        CHECK(data_lines(run / "edie_grid.csv") == 50 * 4 * 9);
        // totals only differ in the grid-dependent rows
        auto grid_free = [](const std::string& t) {
            std::istringstream in(t);
            std::string kept;
            for (std::string line; std::getline(in, line);) {
                if (line.rfind("max_cell_flow", 0) != 0 && line.rfind("flow_scatter", 0) != 0) kept += line + '\n';
            }
            return kept;
        };
        CHECK(grid_free(slurp(coarse / "totals.csv")) == grid_free(first["totals.csv"]));
    }

    TEST_CASE("analyze refuses incomplete or altered runs") {
        TempDir tmp("refuse");
        const auto run = tmp / "r";
        REQUIRE(cli({"run", "--scenario", kQuick, "--out", run.string()}).code == kExitOk);
        std::ofstream(run / kIncompleteMarker) << "x\n";
        CHECK(cli({"analyze", "--run", run.string()}).code == kExitData);
        fs::remove(run / kIncompleteMarker);
        std::ofstream(run / "trajectory.csv", std::ios::app) << "\n";
        CHECK(cli({"analyze", "--run", run.string()}).code == kExitData);
        CHECK(cli({"analyze", "--run", (tmp / "none").string()}).code == kExitData);
    }

    TEST_CASE("a full policy by case sweep writes one summary row per run") {
        TempDir tmp("sweep");
        const auto r = cli({"sweep", "--policies", "all", "--cases", "I,II,III,IV,V", "--duration", "20",
                            "--decimation", "10", "--out", tmp.path().string()});
        REQUIRE(r.code == kExitOk);
        CHECK(data_lines(tmp / "summary.csv") == 15 * 5);
        CHECK_FALSE(fs::exists(tmp / "failures.csv"));
        CHECK(fs::exists(tmp / "C2.O" / "III" / "1" / "manifest.json"));
        std::ifstream in(tmp / "summary.csv");
        const auto rows = read_summary(in);
        CHECK(rows.front().policy == "F1");
        CHECK(rows.back().policy == "S3");
        CHECK(rows.back().mpr_case == "V");
    }

    TEST_CASE("calibrate writes driver distributions and per-pair estimates") {
        TempDir tmp("calibrate");
        const auto pairs = tmp / "pairs";
        fs::create_directories(pairs);
        oracle::SplitMix rng(4);
        for (int i = 0; i < 32; ++i) {
            oracle::Idm p;
            p.a = rng.uniform(0.8, 2.0);
            p.b = rng.uniform(1.2, 3.0);
            p.T = rng.uniform(0.9, 2.0);
            p.s0 = 2.0;
            p.v0 = 120.0 / 3.6;
            const double cruise = rng.uniform(14.0, 24.0);
            const auto tr = oracle::follow_profile(p, cruise, 5.0, p.s0 + p.T * cruise, 600);
            TrajectoryPair pair;
            pair.t = tr.t;
            pair.leader_pos = tr.leader_x;
            pair.leader_speed = tr.leader_v;
            pair.follower_pos = tr.follower_x;
            pair.follower_speed = tr.follower_v;
            std::ofstream f(pairs / ("p" + std::to_string(100 + i) + ".csv"));
            write_pair(f, pair);
        }
        const auto out = tmp / "drivers.txt";
        const auto r = cli({"calibrate", "--pairs", pairs.string(), "--out", out.string(), "--population", "20",
                            "--generations", "4", "--jobs", "2"});
        REQUIRE(r.code == kExitOk);
        CHECK(data_lines(fs::path(out.string() + ".estimates.csv")) == 32);
        const auto dists = DriverParamDistributions::from_text(KeyValueText::parse_string(slurp(out)));
        // every pair stops 2 m behind a car; episodes include the last creep below 0.5 m/s
        CHECK(dists.standstill.hv_hv >= 2.0);
        CHECK(dists.standstill.hv_hv < 2.2);
        fs::create_directories(tmp / "empty");
        CHECK(cli({"calibrate", "--pairs", (tmp / "empty").string(), "--out", out.string()}).code == kExitData);
    }

    TEST_CASE("the binary maps outcomes to exit codes") {
        TempDir tmp("binary");
        CHECK(binary("") == kExitUsage);
        CHECK(binary("--version") == kExitOk);
        CHECK(binary("run --scenario \"" + kQuick + "\" --out \"" + (tmp / "r").string() + "\"") == kExitOk);
        CHECK(binary("analyze --run \"" + (tmp / "r").string() + "\"") == kExitOk);
        CHECK(binary("analyze --run \"" + (tmp / "nothing").string() + "\"") == kExitData);
        CHECK(binary("run --scenario \"" + (tmp / "no.cfg").string() + "\" --out \"" + (tmp / "x").string() + "\"") ==
              kExitUsage);
    }
}
