#pragma once

#include "cwdsim/scenario.hpp"
#include "cwdsim/vehicle_class.hpp"

#include <array>
#include <optional>

namespace cwdsim {

struct Battery {
    double capacity = 0.0;  // kWh
    double soc = 0.0;       // kWh
    double rate = 0.0;      // kWh/m
};

// Battery for an electric class at the given initial charge fraction;
// nullopt for HV/DT.
std::optional<Battery> make_battery(VehicleClass cls, double soc_fraction, const EnergyParams& params = {});

struct BatteryDelta {
    double consumed = 0.0;  // kWh actually drawn
    double supplied = 0.0;  // kWh actually absorbed
};

// soc <- clamp(soc - rate*distance + [on_cwd] * power * dt, 0, capacity).
// The deltas are what the battery really absorbed/released, so
// soc_after == soc_before - consumed + supplied.
BatteryDelta step_battery(Battery& battery, double distance, bool on_cwd, double dt,
                          double charge_per_minute = 1.8);

bool needs_charge(const Battery& battery, double low_fraction = 0.2);

struct EnergyLedger {
    double supplied = 0.0;
    double consumed = 0.0;
    std::array<double, 4> supplied_by_class{};
    std::array<double, 4> consumed_by_class{};

    void add(VehicleClass cls, const BatteryDelta& delta);
};

}  // namespace cwdsim
