#pragma once

#include "cwdsim/energy.hpp"
#include "cwdsim/scenario.hpp"
#include "cwdsim/vehicle_class.hpp"

#include <optional>

namespace cwdsim {

enum class LaneChoice { Stay, Left, Right };

// Acceleration of a follower affected by the move, before and after it.
struct FollowerEffect {
    double before = 0.0;
    double after = 0.0;
};

struct CandidateLane {
    double own_accel_after = 0.0;                // subject in the candidate lane
    std::optional<FollowerEffect> new_follower;  // absent when nobody follows there
    double bias = 0.0;                           // charging-lane incentive
    bool toward_cwd = false;
};

// Everything the MOBIL criterion needs, evaluated on the frozen previous-step
// state. A missing candidate means the lane does not exist or the physical
// gap is not positive.
struct Neighborhood {
    double own_accel = 0.0;
    std::optional<FollowerEffect> old_follower;
    std::optional<CandidateLane> left;
    std::optional<CandidateLane> right;
};

bool mobil_safe(const CandidateLane& candidate, const MobilParams& params);

double mobil_incentive(const Neighborhood& hood, const CandidateLane& candidate, const MobilParams& params);

// `mandatory` waives the switching threshold (ramp merges); safety still applies.
LaneChoice mobil_decision(const Neighborhood& hood, const MobilParams& params, bool mandatory = false);

// +bias toward / -bias away from the charging lane for an electric vehicle
// below the low-SOC threshold; 0 otherwise, and 0 where `section` has no
// charging lane.
double cwd_incentive(VehicleClass cls, const Battery* battery, int current_lane, int candidate_lane, int section,
                     const RoadLayout& layout, const MobilParams& params, double low_soc_fraction = 0.2);

}  // namespace cwdsim
