#pragma once

#include "cwdsim/kvtext.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cwdsim {

// Geometry independent of the charging-lane policy.
struct RoadGeometry {
    double length = 5000.0;  // m
    int lane_count = 3;
    double section_length = 200.0;         // m
    double ramp_position = 2500.0;         // m, ramp nose
    double ramp_accel_lane_length = 300.0;  // m
    double ramp_approach_length = 300.0;   // m of ramp upstream of the nose
    double ramp_speed_limit = 60.0;        // km/h
    double main_speed_limit = 120.0;       // km/h
    double cwd_speed_limit = 60.0;         // km/h
    double slope_grade = 0.03;             // grade applied by the S policies
};

// Lanes are numbered 1 (leftmost) .. lane_count (rightmost, next to the ramp);
// the ramp/acceleration lane is lane 0. Sections are numbered from 1.
struct RoadLayout {
    double length = 5000.0;
    int lane_count = 3;
    double section_length = 200.0;
    double ramp_position = 2500.0;
    double ramp_accel_lane_length = 300.0;
    double ramp_approach_length = 300.0;
    double ramp_speed_limit = 60.0;
    double main_speed_limit = 120.0;
    double cwd_speed_limit = 60.0;
    double grade = 0.0;
    // cwd[lane - 1][section - 1]
    std::vector<std::vector<bool>> cwd;

    int section_count() const;
    bool is_cwd(int lane, int section) const;
    // The charging lane at a section, or 0 when that section has none.
    int cwd_lane_at(int section) const;
    // True if any part of [rear, front] lies on a charging section of `lane`.
    bool overlaps_cwd(int lane, double rear, double front) const;

    double ramp_entry() const { return ramp_position - ramp_approach_length; }
    double ramp_end() const { return ramp_position + ramp_accel_lane_length; }
    int merge_section() const;

    void validate() const;

    bool operator==(const RoadLayout&) const = default;
};

enum class PolicyFamily { None, Full, Cut, Slope };
enum class CutPlacement { None, AtRamp, After, Before };

struct Policy {
    PolicyFamily family = PolicyFamily::None;
    int lane = 0;
    CutPlacement cut = CutPlacement::None;

    std::string name() const;
    bool operator==(const Policy&) const = default;
};

// Accepts F1..F3, C1.O..C3.B, S1..S3 (lane digit bounded by the geometry at
// layout time) and `none` for a road without charging sections.
Policy parse_policy(std::string_view text);
// The fifteen policies for a three-lane road, in table order.
std::vector<Policy> all_policies(int lane_count = 3);

RoadLayout plain_layout(const RoadGeometry& geometry);
RoadLayout build_road_layout(const Policy& policy, const RoadGeometry& geometry = {});
RoadLayout build_road_layout(std::string_view policy, const RoadGeometry& geometry = {});

// 1-based section containing `position`; the road end maps to the last section.
int section_of(double position, const RoadLayout& layout);

enum class MprCase { Base, I, II, III, IV, V };

std::string_view to_string(MprCase c);
MprCase parse_case(std::string_view text);
std::vector<MprCase> all_cases();

struct FleetMix {
    double share_hv = 1.0;
    double share_av = 0.0;
    double share_et = 0.0;
    double share_dt = 0.0;

    void validate() const;
};

FleetMix fleet_mix(MprCase c);
FleetMix fleet_mix(std::string_view c);

// Parameters below are owned by other modules but configured from the same
// scenario file.
struct MobilParams {
    double politeness = 0.2;
    double threshold = 0.1;    // m/s^2
    double safe_decel = 4.0;   // m/s^2
    double cwd_bias = 2.0;     // m/s^2
    double cooldown = 2.0;     // s

    void validate() const;
};

enum class SlopeForm { Exact, Approximate };

// Who the charging-section speed limit binds: only vehicles that charge
// there (AV, ET), or everyone in the lane.
enum class CwdCapScope { Electric, All };

struct EnergyParams {
    double av_capacity = 80.0;      // kWh
    double et_capacity = 1000.0;    // kWh
    double av_rate = 1.8e-4;        // kWh/m
    double et_rate = 1.0e-3;        // kWh/m
    double charge_per_minute = 1.8; // kWh/min on a charging section
    double low_soc_fraction = 0.2;
    double initial_soc_min = 0.1;
    double initial_soc_max = 0.9;

    void validate() const;
};

struct ScenarioConfig {
    RoadGeometry geometry;
    Policy policy;
    MprCase mpr_case = MprCase::Base;
    RoadLayout layout;  // derived from geometry + policy
    FleetMix mix;       // derived from mpr_case
    double main_flow = 2000.0;  // veh/h/lane
    double ramp_flow = 400.0;   // veh/h
    bool ramp_uses_fleet_mix = true;
    double duration = 900.0;  // s
    double warmup = 150.0;    // s
    std::uint64_t seed = 1;
    double timestep = 0.1;  // s
    int decimation = 1;
    MobilParams mobil;
    EnergyParams energy;
    SlopeForm slope_form = SlopeForm::Exact;
    CwdCapScope cwd_cap_scope = CwdCapScope::Electric;
    std::string emission_table;  // empty: built-in default
    std::string driver_params;   // empty: built-in distributions

    // Recomputes layout and mix from geometry/policy/case and validates.
    void finalize();
    void validate() const;

    static ScenarioConfig from_text(const KeyValueText& doc);
    static ScenarioConfig load(const std::string& path);
    // Canonical text; from_text(to_text()) reproduces the config.
    std::string to_text() const;
};

ScenarioConfig make_scenario(std::string_view policy, MprCase c, std::uint64_t seed);

}  // namespace cwdsim
