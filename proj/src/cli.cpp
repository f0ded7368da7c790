#include "cwdsim/cli.hpp"

#include "cwdsim/analytics.hpp"
#include "cwdsim/calibration.hpp"
#include "cwdsim/errors.hpp"
#include "cwdsim/kvtext.hpp"
#include "cwdsim/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace cwdsim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
    }
    return out;
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> decimation;
    std::string out;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
    if (!fs::is_regular_file(a.scenario)) throw ConfigError("scenario file not found: " + a.scenario);
    auto config = ScenarioConfig::load(a.scenario);
    if (a.seed) config.seed = *a.seed;
    if (a.decimation) config.decimation = *a.decimation;
    config.finalize();
    const auto result = run_to_directory(config, a.out);
    out << "run " << config.policy.name() << ' ' << to_string(config.mpr_case) << " seed " << config.seed << ": "
        << result.counters.inserted << " inserted, " << result.counters.exited << " exited -> " << a.out << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::string policies;
    std::string cases = "all";
    std::uint64_t seeds = 1;
    std::uint64_t first_seed = 1;
    unsigned jobs = 0;
    std::optional<double> duration;
    std::optional<int> decimation;
    std::string out;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    SweepOptions options;
    if (a.policies == "all") {
        for (const auto& p : all_policies()) options.policies.push_back(p.name());
    } else {
        options.policies = split_list(a.policies);
    }
    if (a.cases == "all") {
        options.cases = all_cases();
    } else {
        for (const auto& c : split_list(a.cases)) options.cases.push_back(parse_case(c));
    }
    if (options.policies.empty()) throw ConfigError("empty policy list");
    if (options.cases.empty()) throw ConfigError("empty case list");
    if (a.seeds == 0) throw ConfigError("--seeds must be at least 1");
    options.seeds = a.seeds;
    options.first_seed = a.first_seed;
    options.jobs = a.jobs;
    const auto duration = a.duration;
    const auto decimation = a.decimation;
    options.adjust = [duration, decimation](ScenarioConfig& c) {
        if (duration) {
            c.duration = *duration;
            c.warmup = std::min(c.warmup, c.duration);
        }
        if (decimation) c.decimation = *decimation;
    };
    const auto report = run_sweep(options, a.out);
    out << "sweep: " << report.rows.size() << " runs completed, " << report.failures.size() << " failed -> "
        << a.out << '\n';
    bool invariant = false;
    for (const auto& f : report.failures) {
        err << "failed " << f.policy << '/' << f.mpr_case << '/' << f.seed << ": " << f.message << '\n';
        invariant = invariant || f.invariant;
    }
    if (invariant) return kExitInvariant;
    return report.failures.empty() ? kExitOk : kExitData;
}

struct AnalyzeArgs {
    std::string run;
    std::string grid = "100x10";
    double window = 30.0;
    std::string out;
};

void write_totals(std::ostream& out, const RunStatistics& stats, const Json& metrics) {
    out << "quantity,value,unit\n";
    auto row = [&](const std::string& name, const std::optional<double>& v, const char* unit) {
        out << name << ',' << (v ? format_double(*v) : std::string()) << ',' << unit << '\n';
    };
    row("mean_speed", stats.mean_speed, "m/s");
    for (std::size_t lane = 0; lane < stats.lane_mean_speed.size(); ++lane) {
        row("lane" + std::to_string(lane) + "_mean_speed", stats.lane_mean_speed[lane], "m/s");
    }
    row("lane_speed_spread", stats.lane_speed_spread, "m/s");
    row("total_travel_distance", stats.ttd, "veh*m");
    row("total_travel_time", stats.ttt, "veh*s");
    const double km = stats.ttd / 1000.0;
    row("vehicle_km", km, "veh*km");
    row("max_cell_flow", stats.max_cell_flow, "veh/s");
    row("flow_scatter", stats.flow_scatter, "(veh/s)^2");
    row("energy_supplied", metrics.at("energy").at("supplied_kwh").get<double>(), "kWh");
    row("energy_consumed", metrics.at("energy").at("consumed_kwh").get<double>(), "kWh");
    const auto& total = metrics.at("emissions").at("total");
    for (auto p : kAllPollutants) {
        const auto name = std::string(to_string(p));
        const double g = total.at(name).get<double>();
        row(name, g, "g");
        row(name + "_per_vehicle_km", km > 0.0 ? std::optional<double>(g / km) : std::nullopt, "g/veh-km");
    }
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
    const fs::path run = a.run;
    const auto grid = parse_grid_spec(a.grid);
    if (!(a.window > 0.0)) throw ConfigError("--window must be positive");
    require_complete_run(run);
    const auto manifest = read_json(run / "manifest.json");
    const auto metrics = read_json(run / "metrics.json");
    const auto expected = manifest.at("files").at("trajectory.csv").at("sha256").get<std::string>();
    if (sha256_file(run / "trajectory.csv") != expected) {
        throw DataError((run / "trajectory.csv").string() + " does not match its manifest checksum");
    }
    const auto config = ScenarioConfig::from_text(KeyValueText::parse_string(slurp(run / "scenario.txt")));

    StatisticsAccumulator check(statistics_options(config));
    StatisticsAccumulator products(statistics_options(config, grid));
    {
        std::ifstream in(run / "trajectory.csv", std::ios::binary);
        read_trajectory(
            in,
            [&](const TrajectoryRow& row) {
                check.on_row(row);
                products.on_row(row);
            },
            (run / "trajectory.csv").string());
    }
    if (Json::parse(statistics_json(check.result())) != metrics.at("statistics")) {
        throw DataError("statistics recomputed from the trajectory differ from metrics.json");
    }

    const fs::path dest = a.out.empty() ? run : fs::path(a.out);
    fs::create_directories(dest);
    std::ostringstream edie;
    write_edie_grid(edie, products.grid());
    write_file_atomic(dest / "edie_grid.csv", edie.str());
    std::ostringstream heat;
    write_heatmap(heat, products.grid());
    write_file_atomic(dest / "heatmap.csv", heat.str());
    std::ostringstream speeds;
    write_lane_speeds(speeds, products.lane_speeds(), a.window);
    write_file_atomic(dest / "lane_speeds.csv", speeds.str());
    std::ostringstream totals;
    write_totals(totals, products.result(), metrics);
    write_file_atomic(dest / "totals.csv", totals.str());
    out << "analyzed " << run.string() << " -> " << dest.string() << '\n';
    return kExitOk;
}

struct CalibrateArgs {
    std::string pairs;
    std::string out;
    std::string estimates;
    std::uint64_t seed = 1;
    std::size_t population = 80;
    std::size_t generations = 40;
    bool fix_standstill = false;
    unsigned jobs = 0;
};

std::optional<double> table_entry(const StandstillGapTable& t, VehicleClass follower, VehicleClass leader) {
    using enum VehicleClass;
    if (follower == HV && leader == HV) return t.hv_hv;
    if (follower == DT && leader == DT) return t.dt_dt;
    if (follower == HV && leader == DT) return t.hv_dt;
    if (follower == DT && leader == HV) return t.dt_hv;
    return std::nullopt;
}

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
    const auto pairs = load_pairs(a.pairs);
    if (pairs.empty()) throw DataError("no pair files (*.csv) in " + a.pairs);

    DriverParamDistributions dists;
    const auto standstill = standstill_gap_table(pairs);
    if (standstill.hv_hv) dists.standstill.hv_hv = *standstill.hv_hv;
    if (standstill.dt_dt) dists.standstill.dt_dt = *standstill.dt_dt;
    if (standstill.hv_dt) dists.standstill.hv_dt = *standstill.hv_dt;
    if (standstill.dt_hv) dists.standstill.dt_hv = *standstill.dt_hv;
    for (const auto& name : standstill.missing()) {
        err << "note: no standstill episodes for " << name << "; default kept\n";
    }

    std::vector<GaResult> results(pairs.size());
    std::vector<std::exception_ptr> errors(pairs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < pairs.size();) {
            try {
                GaConfig ga;
                ga.population = a.population;
                ga.generations = a.generations;
                ga.seed = a.seed * 1000003ULL + i;
                if (a.fix_standstill) {
                    ga.fixed_standstill = table_entry(dists.standstill, pairs[i].follower_class, pairs[i].leader_class);
                }
                results[i] = ga_calibrate(pairs[i], ga);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned n = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, pairs.size()));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::ostringstream est;
    est << "pair,follower_class,leader_class,accel,decel,headway,standstill,fitness\n";
    std::map<VehicleClass, std::vector<Chromosome>> by_class;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& b = results[i].best;
        est << pairs[i].name << ',' << to_string(pairs[i].follower_class) << ',' << to_string(pairs[i].leader_class)
            << ',' << format_double(b.accel) << ',' << format_double(b.decel) << ',' << format_double(b.headway) << ','
            << format_double(b.standstill) << ',' << format_double(results[i].best_fitness) << '\n';
        by_class[pairs[i].follower_class].push_back(b);
    }
    for (auto cls : {VehicleClass::HV, VehicleClass::DT}) {
        const auto it = by_class.find(cls);
        const std::size_t count = it == by_class.end() ? 0 : it->second.size();
        if (count < 30) {
            err << "note: " << count << " calibrated " << to_string(cls)
                << " followers (fewer than 30); default distributions kept\n";
            continue;
        }
        const auto fit = fit_distributions(it->second);
        (cls == VehicleClass::HV ? dists.hv : dists.dt) = fit.dists;
        out << to_string(cls) << ": " << count << " vehicles, KS accel " << fit.ks_accel << ", decel "
            << fit.ks_decel << ", headway " << fit.ks_headway << '\n';
    }
    for (const auto& [cls, list] : by_class) {
        if (cls != VehicleClass::HV && cls != VehicleClass::DT) {
            err << "note: " << list.size() << " " << to_string(cls) << " followers are not fitted\n";
        }
    }

    const fs::path out_path = a.out;
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_file_atomic(out_path, dists.to_text());
    fs::path est_path = a.estimates.empty() ? fs::path(out_path.string() + ".estimates.csv") : fs::path(a.estimates);
    write_file_atomic(est_path, est.str());
    out << "calibrated " << pairs.size() << " pairs -> " << out_path.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Microscopic highway simulator for charging-while-driving lanes", "cwdsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("--scenario", run_args.scenario, "Scenario file")->required();
    run->add_option("--seed", run_args.seed, "Seed (overrides the scenario)");
    run->add_option("--decimation", run_args.decimation, "Record every k-th step");
    run->add_option("--out", run_args.out, "Output directory")->required();

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "Run the policy x case x seed matrix");
    sweep->add_option("--policies", sweep_args.policies, "Comma list of policies or `all`")->required();
    sweep->add_option("--cases", sweep_args.cases, "Comma list of MPR cases or `all`")->capture_default_str();
    sweep->add_option("--seeds", sweep_args.seeds, "Seeds per cell")->capture_default_str();
    sweep->add_option("--first-seed", sweep_args.first_seed, "First seed")->capture_default_str();
    sweep->add_option("--jobs", sweep_args.jobs, "Parallel runs (0: all cores)")->capture_default_str();
    sweep->add_option("--duration", sweep_args.duration, "Simulated seconds per run");
    sweep->add_option("--decimation", sweep_args.decimation, "Record every k-th step");
    sweep->add_option("--out", sweep_args.out, "Output directory")->required();

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "Derive grids, lane speeds and totals from a finished run");
    analyze->add_option("--run", analyze_args.run, "Run directory")->required();
    analyze->add_option("--grid", analyze_args.grid, "Cell size, meters x seconds")->capture_default_str();
    analyze->add_option("--window", analyze_args.window, "Lane speed smoothing window, s")->capture_default_str();
    analyze->add_option("--out", analyze_args.out, "Output directory (default: the run directory)");

    CalibrateArgs cal_args;
    auto* calibrate = app.add_subcommand("calibrate", "Fit driver parameter distributions from trajectory pairs");
    calibrate->add_option("--pairs", cal_args.pairs, "Directory of pair files")->required();
    calibrate->add_option("--out", cal_args.out, "Driver parameter file to write")->required();
    calibrate->add_option("--estimates", cal_args.estimates, "Per-pair estimates (default: <out>.estimates.csv)");
    calibrate->add_option("--seed", cal_args.seed, "GA seed")->capture_default_str();
    calibrate->add_option("--population", cal_args.population, "GA population")->capture_default_str();
    calibrate->add_option("--generations", cal_args.generations, "GA generations")->capture_default_str();
    calibrate->add_flag("--fix-standstill", cal_args.fix_standstill, "Freeze s0 at the measured standstill gap");
    calibrate->add_option("--jobs", cal_args.jobs, "Parallel pairs (0: all cores)")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(run_args, out);
        if (*sweep) return cmd_sweep(sweep_args, out, err);
        if (*analyze) return cmd_analyze(analyze_args, out);
        if (*calibrate) return cmd_calibrate(cal_args, out, err);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvariantViolation& e) {
        err << "invariant violation: " << e.what() << '\n';
        return kExitInvariant;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace cwdsim
