#pragma once

#include <array>
#include <string_view>

namespace cwdsim {

// HV: human-driven car, AV: automated electric car,
// DT: diesel drayage truck, ET: electric drayage truck.
enum class VehicleClass { HV, AV, DT, ET };

inline constexpr std::array<VehicleClass, 4> kAllClasses{VehicleClass::HV, VehicleClass::AV, VehicleClass::DT,
                                                         VehicleClass::ET};

std::string_view to_string(VehicleClass cls);
VehicleClass parse_vehicle_class(std::string_view text);

constexpr bool is_electric(VehicleClass cls) { return cls == VehicleClass::AV || cls == VehicleClass::ET; }
constexpr bool is_truck(VehicleClass cls) { return cls == VehicleClass::DT || cls == VehicleClass::ET; }

constexpr double vehicle_length(VehicleClass cls) { return is_truck(cls) ? 20.0 : 5.0; }

// m/s; 120 km/h for cars, 80 km/h for trucks.
constexpr double class_desired_speed(VehicleClass cls) { return is_truck(cls) ? 80.0 / 3.6 : 120.0 / 3.6; }

constexpr std::size_t class_index(VehicleClass cls) { return static_cast<std::size_t>(cls); }

constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }
constexpr double mps_to_kmh(double mps) { return mps * 3.6; }

}  // namespace cwdsim
