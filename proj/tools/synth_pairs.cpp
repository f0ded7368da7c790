// Writes synthetic leader/follower pair files for trying out `calibrate`.
// Followers drive IDM with parameters drawn from the default distributions;
// their true parameters go to truth.txt next to the pairs.

#include "cwdsim/calibration.hpp"
#include "cwdsim/engine.hpp"
#include "cwdsim/errors.hpp"
#include "cwdsim/kvtext.hpp"
#include "cwdsim/random.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace cwdsim;

namespace {

// Leader speed schedule: cruise, brake to a stop, wait, recover, slow down
// again and recover.
double leader_accel(double t, double v, double cruise) {
    if (t < 15.0) return 0.0;
    if (t < 40.0) return v > 0.0 ? -1.8 : 0.0;
    if (t < 55.0) return v < cruise ? 1.2 : 0.0;
    if (t < 70.0) return 0.0;
    if (t < 80.0) return v > 0.45 * cruise ? -1.0 : 0.0;
    if (t < 95.0) return v < 0.9 * cruise ? 0.8 : 0.0;
    return 0.0;
}

TrajectoryPair make_pair(VehicleClass follower, VehicleClass leader, const Chromosome& theta, double cruise,
                         double duration, double dt) {
    TrajectoryPair p;
    p.follower_class = follower;
    p.leader_class = leader;
    p.leader_length = vehicle_length(leader);
    p.follower_length = vehicle_length(follower);
    p.dt = dt;
    const auto n = static_cast<std::size_t>(duration / dt + 0.5) + 1;
    double x = 100.0;
    double v = cruise;
    for (std::size_t j = 0; j < n; ++j) {
        p.t.push_back(quantize_micro(static_cast<double>(j) * dt));
        p.leader_pos.push_back(x);
        p.leader_speed.push_back(v);
        v = std::max(0.0, v + leader_accel(static_cast<double>(j) * dt, v, cruise) * dt);
        x += v * dt;
    }
    const double gap = theta.standstill + theta.headway * cruise;
    p.follower_pos.assign(n, p.leader_pos[0] - p.leader_length - gap);
    p.follower_speed.assign(n, cruise);
    const auto trace = simulate_follower(p, theta);
    p.follower_pos = trace.pos;
    p.follower_speed = trace.speed;
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic trajectory pairs", "synth_pairs"};
    std::string out;
    std::size_t count = 40;
    std::uint64_t seed = 1;
    std::string follower = "HV";
    std::string leader = "HV";
    double duration = 120.0;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--count", count, "Number of pairs")->capture_default_str();
    app.add_option("--seed", seed, "Seed")->capture_default_str();
    app.add_option("--follower", follower, "Follower class (HV or DT)")->capture_default_str();
    app.add_option("--leader", leader, "Leader class")->capture_default_str();
    app.add_option("--duration", duration, "Seconds per pair")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        const auto fcls = parse_vehicle_class(follower);
        const auto lcls = parse_vehicle_class(leader);
        if (fcls != VehicleClass::HV && fcls != VehicleClass::DT) throw cwdsim::Error("follower must be HV or DT");
        fs::create_directories(out);
        RandomStream rng(seed, stream::kDrivers);
        const DriverParamDistributions dists;
        std::ofstream truth(fs::path(out) / "truth.txt");
        truth << "pair,accel,decel,headway,standstill\n";
        for (std::size_t i = 0; i < count; ++i) {
            const auto idm = std::get<IdmParams>(sample_driver_params(fcls, rng, dists));
            Chromosome theta{idm.accel, idm.decel, idm.headway, standstill_gap(fcls, lcls, dists.standstill)};
            const double cruise = rng.uniform(14.0, 24.0);
            auto pair = make_pair(fcls, lcls, theta, cruise, duration, 0.1);
            char name[32];
            std::snprintf(name, sizeof name, "pair_%04zu.csv", i);
            pair.name = name;
            pair.validate();
            std::ofstream file(fs::path(out) / name);
            write_pair(file, pair);
            truth << name << ',' << format_double(theta.accel) << ',' << format_double(theta.decel) << ','
                  << format_double(theta.headway) << ',' << format_double(theta.standstill) << '\n';
        }
        std::cout << "wrote " << count << " pairs to " << out << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
