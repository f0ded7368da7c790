#pragma once

#include "cwdsim/dynamics.hpp"
#include "cwdsim/emissions.hpp"
#include "cwdsim/energy.hpp"
#include "cwdsim/lane_change.hpp"
#include "cwdsim/random.hpp"
#include "cwdsim/scenario.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace cwdsim {

using VehicleId = std::uint64_t;

inline constexpr int kRampLane = 0;

struct Vehicle {
    VehicleId id = 0;
    VehicleClass cls = VehicleClass::HV;
    double length = 5.0;
    int lane = 1;
    double pos = 0.0;    // front bumper, m
    double speed = 0.0;  // m/s
    double accel = 0.0;  // realized over the last step, m/s^2
    DriverModel driver;
    double desired_speed = 0.0;
    double cooldown = 0.0;  // s until the next lane change is allowed
    std::optional<Battery> battery;
    double initial_soc = 0.0;
    double consumed = 0.0;  // kWh over the vehicle's life
    double supplied = 0.0;
    bool stopped_at_ramp_end = false;

    double rear() const { return pos - length; }
};

// One recorded vehicle state. Values are rounded to 1e-6 so the text file
// reproduces them exactly.
struct TrajectoryRow {
    double t = 0.0;
    VehicleId veh_id = 0;
    VehicleClass cls = VehicleClass::HV;
    int lane = 0;
    double pos = 0.0;
    double speed = 0.0;
    double accel = 0.0;
    std::optional<double> soc;
};

double quantize_micro(double value);

class TrajectorySink {
public:
    virtual ~TrajectorySink() = default;
    virtual void on_row(const TrajectoryRow& row) = 0;
};

struct EngineCounters {
    std::uint64_t inserted = 0;
    std::uint64_t exited = 0;
    std::uint64_t lane_changes = 0;
    std::uint64_t ramp_merges = 0;
    std::uint64_t stopped_merges = 0;
    std::uint64_t clamp_events = 0;
    std::uint64_t guard_events = 0;  // steps limited by the collision guard
    std::uint64_t conflicts = 0;
    std::uint64_t recorded_rows = 0;
    std::vector<std::uint64_t> max_queue;     // per lane, index 0 = ramp
    std::vector<std::uint64_t> queued_final;  // per lane at the last step
};

// Vehicle waiting at an entry point because the insertion gap is too small.
struct PendingArrival {
    VehicleClass cls;
    DriverModel driver;
    double entry_fraction;  // U in 60 km/h + U * (desired - 60 km/h)
    double soc_fraction;
};

class Simulation {
public:
    explicit Simulation(ScenarioConfig config, const EmissionFactorTable& table = EmissionFactorTable::builtin(),
                        DriverParamDistributions distributions = {});

    void add_sink(TrajectorySink& sink) { sinks_.push_back(&sink); }

    // One timestep: lane changes, accelerations, integration, batteries and
    // emissions, recording, removal, arrivals.
    void step();
    // Steps until the configured duration.
    void run();

    // Places a vehicle directly (tests and scripted scenarios). Throws
    // RangeError when it would overlap a vehicle in that lane.
    const Vehicle& insert_vehicle(VehicleClass cls, int lane, double pos, double speed, DriverModel driver,
                                  std::optional<double> soc_fraction = std::nullopt);

    const std::vector<Vehicle>& vehicles() const { return vehicles_; }
    const Vehicle* find(VehicleId id) const;
    double clock() const { return clock_; }
    std::uint64_t step_index() const { return step_index_; }
    std::uint64_t total_steps() const;
    const ScenarioConfig& config() const { return config_; }
    const EngineCounters& counters() const { return counters_; }
    const EnergyLedger& energy() const { return energy_; }
    const EmissionLedger& emissions() const { return emissions_; }
    std::size_t queue_length(int lane) const { return queues_[static_cast<std::size_t>(lane)].size(); }
    // Largest |soc - (initial - consumed + supplied)| seen over all vehicles.
    double max_conservation_error() const { return max_conservation_error_; }
    // Highest speed ever reached, m/s.
    double max_speed_seen() const { return max_speed_seen_; }

    // Acceleration `v` would have in `lane` behind `leader` (nullptr: free
    // road, or the ramp end on lane 0) using the current frozen state.
    // `clamped` reports the emergency-deceleration floor, `guarded` the
    // collision guard.
    double acceleration_for(const Vehicle& v, int lane, const Vehicle* leader, bool* clamped = nullptr,
                            bool* guarded = nullptr) const;
    double speed_cap(const Vehicle& v, int lane) const;

    std::string dump_state() const;

private:
    struct Obstacle {
        double rear = 0.0;
        double speed = 0.0;
        double accel = 0.0;
        VehicleClass cls = VehicleClass::HV;
        bool connected = false;
    };

    struct Neighbors {
        const Vehicle* leader = nullptr;
        const Vehicle* follower = nullptr;
    };

    struct LaneChangeRequest {
        std::size_t index;
        int target;
    };

    void rebuild_lanes();
    Neighbors neighbors_at(int lane, double pos, std::size_t exclude) const;
    std::optional<Obstacle> obstacle_for(const Vehicle& v, int lane, const Vehicle* leader) const;
    double accel_against(const Vehicle& v, int lane, const std::optional<Obstacle>& obstacle, bool* clamped,
                         bool* guarded) const;
    std::optional<CandidateLane> evaluate_candidate(std::size_t index, int target, const Neighbors& around) const;
    void decide_lane_changes(const std::vector<double>& current_accel);
    void apply_lane_changes(std::vector<LaneChangeRequest>& requests);
    void integrate(const std::vector<double>& accel);
    void check_invariants() const;
    void record();
    void remove_exited();
    void generate_arrivals(double t_end);
    bool try_insert(int lane, const PendingArrival& arrival);
    PendingArrival draw_arrival(bool ramp);
    double entry_position(int lane) const;
    bool in_statistics_window() const;

    ScenarioConfig config_;
    const EmissionFactorTable* table_;
    DriverParamDistributions distributions_;
    RandomStream arrival_rng_;
    RandomStream fleet_rng_;
    RandomStream driver_rng_;
    RandomStream soc_rng_;
    RandomStream entry_rng_;

    std::vector<Vehicle> vehicles_;
    std::vector<std::vector<std::size_t>> lanes_;  // per lane, indices by position descending
    std::vector<std::deque<PendingArrival>> queues_;
    std::vector<double> next_arrival_;
    std::vector<TrajectorySink*> sinks_;

    double clock_ = 0.0;
    std::uint64_t step_index_ = 0;
    VehicleId next_id_ = 1;
    EngineCounters counters_;
    EnergyLedger energy_;
    EmissionLedger emissions_;
    double max_conservation_error_ = 0.0;
    double max_speed_seen_ = 0.0;

    // Per-step scratch, kept to avoid reallocating.
    std::vector<double> current_accel_;
    std::vector<bool> current_clamped_;
    std::vector<bool> current_guarded_;
    std::vector<std::ptrdiff_t> leader_before_;
    std::vector<int> lane_before_;
    std::vector<double> next_accel_;
    std::vector<LaneChangeRequest> requests_;
};

}  // namespace cwdsim
