#pragma once

#include "cwdsim/distributions.hpp"
#include "cwdsim/kvtext.hpp"
#include "cwdsim/random.hpp"
#include "cwdsim/scenario.hpp"
#include "cwdsim/vehicle_class.hpp"

#include <optional>
#include <string>
#include <variant>

namespace cwdsim {

inline constexpr double kGravity = 9.8;          // m/s^2
inline constexpr double kRoadFriction = 0.8;     // dry asphalt
inline constexpr double kEmergencyDecel = 8.0;   // IDM output floor, m/s^2

struct IdmParams {
    double accel = 1.3;          // a_n, m/s^2
    double decel = 2.0;          // b_n (magnitude), m/s^2
    double headway = 1.7;        // T_n, s
    double standstill = 2.0;     // s0_n, m
    double exponent = 4.0;       // delta
    double desired_speed = 80.0 / 3.6;  // v0, m/s

    void validate() const;
};

struct VanAremParams {
    double a_max = 4.0;     // m/s^2
    double b_max = -8.0;    // m/s^2 (signed)
    double r_iso = 90.0;    // m, own sensors
    double r_conn = 300.0;  // m, connected leader
    double k = 0.3;         // free-driving speed gain, 1/s
    double k_a = 1.0;
    double k_v = 0.58;      // 1/s
    double k_d = 0.1;       // 1/s^2
    double tau = 0.5;       // s, target time gap

    void validate() const;
};

// s* = s0 + T v + v dv / (2 sqrt(a b)); dv > 0 when closing in on the leader.
double desired_gap(double v, double dv, const IdmParams& p);

// Unclamped IDM acceleration. `gap` is bumper to bumper; infinity means free road.
double idm_acceleration_raw(double v, double gap, double dv, const IdmParams& p);
// IDM acceleration floored at -kEmergencyDecel. Throws CollisionError for gap <= 0.
double idm_acceleration(double v, double gap, double dv, const IdmParams& p);

// Calibrated standstill gaps by follower/leader class. Only the HV/DT pairs are
// measured; other pairs keep their class defaults.
struct StandstillGapTable {
    double hv_hv = 2.66;
    double dt_dt = 3.99;
    double hv_dt = 2.73;
    double dt_hv = 2.74;
    double et_default = 2.0;
};

double standstill_gap(VehicleClass follower, VehicleClass leader, const StandstillGapTable& table = {});

struct TargetObservation {
    double distance = 0.0;  // clearance to the target, m
    double speed = 0.0;
    double accel = 0.0;
};

// Reference clearance for the AV controller: max(2 m, tau * v).
double reference_clearance(double v, const VanAremParams& p);

double van_arem_acceleration(double v, double v_intended, const std::optional<TargetObservation>& target,
                             const VanAremParams& p);

// Grade resistance for trucks; identity for cars.
double slope_adjust(double accel, double grade, VehicleClass cls, SlopeForm form = SlopeForm::Exact);

struct ClassDistributions {
    Weibull accel;
    Rayleigh decel;
    ExpNorm headway;
};

struct DriverParamDistributions {
    ClassDistributions hv{{1.39, 0.97, 1.81}, {1.33}, {2341.40, 0.50, 5.0e-4}};
    ClassDistributions dt{{1.51, 0.59, 1.39}, {0.84}, {0.22, 1.90, 0.79}};
    double headway_min = 0.4;
    double headway_max = 3.0;
    double decel_floor = 0.3;
    StandstillGapTable standstill;
    IdmParams et;  // fixed electric-truck parameters
    VanAremParams av;

    static DriverParamDistributions from_text(const KeyValueText& doc);
    static DriverParamDistributions load(const std::string& path);
    std::string to_text() const;
};

using DriverModel = std::variant<IdmParams, VanAremParams>;

DriverModel sample_driver_params(VehicleClass cls, RandomStream& rng, const DriverParamDistributions& dists = {});

}  // namespace cwdsim
