#pragma once

#include "cwdsim/vehicle_class.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cwdsim {

enum class Pollutant { CO, NOx, VOC, PM25 };
inline constexpr std::array<Pollutant, 4> kAllPollutants{Pollutant::CO, Pollutant::NOx, Pollutant::VOC,
                                                         Pollutant::PM25};
using PollutantArray = std::array<double, 4>;

// MPC: medium passenger car (HV), HDT: heavy-duty truck (DT).
// ZeroEmission covers the electric classes.
enum class EmissionCategory { MPC, HDT, ZeroEmission };

std::string_view to_string(Pollutant p);
std::string_view to_string(EmissionCategory c);
Pollutant parse_pollutant(std::string_view text);
EmissionCategory parse_category(std::string_view text);
EmissionCategory category_for(VehicleClass cls);

struct FactorNode {
    double speed_kmh;
    double factor_g_per_km;
};

// Piecewise-linear speed-dependent emission factors, clamped to the end nodes.
class EmissionFactorTable {
public:
    // Columnar text with header `category,pollutant,speed_kmh,factor_g_per_km`.
    static EmissionFactorTable parse(std::istream& in, std::string_view source = "<table>");
    static EmissionFactorTable load(const std::string& path);
    static const EmissionFactorTable& builtin();
    static std::string builtin_csv();

    double factor(EmissionCategory category, Pollutant pollutant, double speed_kmh) const;
    const std::vector<FactorNode>& curve(EmissionCategory category, Pollutant pollutant) const;

private:
    std::map<std::pair<EmissionCategory, Pollutant>, std::vector<FactorNode>> curves_;
};

double emission_factor(EmissionCategory category, Pollutant pollutant, double speed_kmh,
                       const EmissionFactorTable& table = EmissionFactorTable::builtin());

// Per-lane grams; the total is always the sum of the lanes.
struct EmissionLedger {
    std::map<int, PollutantArray> by_lane;

    PollutantArray total() const;
    double get(Pollutant p) const { return total()[static_cast<std::size_t>(p)]; }
};

void accumulate_emissions(VehicleClass cls, double distance_m, double speed_kmh, int lane, EmissionLedger& ledger,
                          const EmissionFactorTable& table = EmissionFactorTable::builtin());

}  // namespace cwdsim
