#include "cwdsim/vehicle_class.hpp"

#include "cwdsim/errors.hpp"

#include <string>

namespace cwdsim {

std::string_view to_string(VehicleClass cls) {
    switch (cls) {
        case VehicleClass::HV:
            return "HV";
        case VehicleClass::AV:
            return "AV";
        case VehicleClass::DT:
            return "DT";
        case VehicleClass::ET:
            return "ET";
    }
    return "HV";
}

VehicleClass parse_vehicle_class(std::string_view text) {
    for (auto cls : kAllClasses) {
        if (text == to_string(cls)) return cls;
    }
    throw DataError("unknown vehicle class `" + std::string(text) + "`");
}

}  // namespace cwdsim
