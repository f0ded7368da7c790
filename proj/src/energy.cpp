#include "cwdsim/energy.hpp"

#include "cwdsim/errors.hpp"

#include <algorithm>

namespace cwdsim {

std::optional<Battery> make_battery(VehicleClass cls, double soc_fraction, const EnergyParams& params) {
    switch (cls) {
        case VehicleClass::AV:
            return Battery{params.av_capacity, soc_fraction * params.av_capacity, params.av_rate};
        case VehicleClass::ET:
            return Battery{params.et_capacity, soc_fraction * params.et_capacity, params.et_rate};
        default:
            return std::nullopt;
    }
}

BatteryDelta step_battery(Battery& battery, double distance, bool on_cwd, double dt, double charge_per_minute) {
    if (distance < 0.0) throw RangeError("distance traveled must be non-negative");
    if (!(dt > 0.0)) throw RangeError("timestep must be positive");
    const double draw = battery.rate * distance;
    const double charge = on_cwd ? charge_per_minute / 60.0 * dt : 0.0;
    const double raw = battery.soc - draw + charge;
    BatteryDelta delta{draw, charge};
    if (raw < 0.0) {
        delta.consumed = battery.soc + charge;
        battery.soc = 0.0;
    } else if (raw > battery.capacity) {
        delta.supplied = std::max(0.0, battery.capacity - battery.soc + draw);
        battery.soc = battery.capacity;
    } else {
        battery.soc = raw;
    }
    return delta;
}

bool needs_charge(const Battery& battery, double low_fraction) { return battery.soc < low_fraction * battery.capacity; }

void EnergyLedger::add(VehicleClass cls, const BatteryDelta& delta) {
    supplied += delta.supplied;
    consumed += delta.consumed;
    supplied_by_class[class_index(cls)] += delta.supplied;
    consumed_by_class[class_index(cls)] += delta.consumed;
}

}  // namespace cwdsim
