#include "cwdsim/lane_change.hpp"

#include <cstdlib>

namespace cwdsim {

bool mobil_safe(const CandidateLane& c, const MobilParams& params) {
    if (c.own_accel_after < -params.safe_decel) return false;
    if (c.new_follower && c.new_follower->after < -params.safe_decel) return false;
    return true;
}

double mobil_incentive(const Neighborhood& hood, const CandidateLane& c, const MobilParams& params) {
    double others = 0.0;
    if (c.new_follower) others += c.new_follower->after - c.new_follower->before;
    if (hood.old_follower) others += hood.old_follower->after - hood.old_follower->before;
    return c.own_accel_after - hood.own_accel + params.politeness * others + c.bias;
}

LaneChoice mobil_decision(const Neighborhood& hood, const MobilParams& params, bool mandatory) {
    auto accepted = [&](const std::optional<CandidateLane>& c, double& incentive) {
        if (!c || !mobil_safe(*c, params)) return false;
        incentive = mobil_incentive(hood, *c, params);
        return mandatory || incentive > params.threshold;
    };
    double left_gain = 0.0;
    double right_gain = 0.0;
    const bool left_ok = accepted(hood.left, left_gain);
    const bool right_ok = accepted(hood.right, right_gain);
    if (left_ok && right_ok) {
        if (left_gain > right_gain) return LaneChoice::Left;
        if (right_gain > left_gain) return LaneChoice::Right;
        if (hood.left->toward_cwd && !hood.right->toward_cwd) return LaneChoice::Left;
        return LaneChoice::Right;
    }
    if (left_ok) return LaneChoice::Left;
    if (right_ok) return LaneChoice::Right;
    return LaneChoice::Stay;
}

double cwd_incentive(VehicleClass cls, const Battery* battery, int current_lane, int candidate_lane, int section,
                     const RoadLayout& layout, const MobilParams& params, double low_soc_fraction) {
    if (!is_electric(cls) || battery == nullptr) return 0.0;
    if (!needs_charge(*battery, low_soc_fraction)) return 0.0;
    const int cwd_lane = layout.cwd_lane_at(section);
    if (cwd_lane == 0) return 0.0;
    const int before = std::abs(current_lane - cwd_lane);
    const int after = std::abs(candidate_lane - cwd_lane);
    if (after < before) return params.cwd_bias;
    if (after > before) return -params.cwd_bias;
    return 0.0;
}

}  // namespace cwdsim
