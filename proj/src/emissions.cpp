#include "cwdsim/emissions.hpp"

#include "cwdsim/errors.hpp"
#include "builtin_emission_table.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace cwdsim {

std::string_view to_string(Pollutant p) {
    switch (p) {
        case Pollutant::CO:
            return "CO";
        case Pollutant::NOx:
            return "NOx";
        case Pollutant::VOC:
            return "VOC";
        case Pollutant::PM25:
            return "PM2.5";
    }
    return "CO";
}

std::string_view to_string(EmissionCategory c) {
    switch (c) {
        case EmissionCategory::MPC:
            return "MPC";
        case EmissionCategory::HDT:
            return "HDT";
        case EmissionCategory::ZeroEmission:
            return "EV";
    }
    return "EV";
}

Pollutant parse_pollutant(std::string_view text) {
    for (auto p : kAllPollutants) {
        if (text == to_string(p)) return p;
    }
    throw DataError("unknown pollutant `" + std::string(text) + "`");
}

EmissionCategory parse_category(std::string_view text) {
    for (auto c : {EmissionCategory::MPC, EmissionCategory::HDT, EmissionCategory::ZeroEmission}) {
        if (text == to_string(c)) return c;
    }
    throw DataError("unknown emission category `" + std::string(text) + "`");
}

EmissionCategory category_for(VehicleClass cls) {
    switch (cls) {
        case VehicleClass::HV:
            return EmissionCategory::MPC;
        case VehicleClass::DT:
            return EmissionCategory::HDT;
        default:
            return EmissionCategory::ZeroEmission;
    }
}

namespace {

double parse_number(std::string_view field, const std::string& where) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    if (ec != std::errc{} || ptr != field.data() + field.size()) throw DataError(where + ": bad number");
    return out;
}

}  // namespace

EmissionFactorTable EmissionFactorTable::parse(std::istream& in, std::string_view source) {
    const std::string src(source);
    std::string line;
    if (!std::getline(in, line)) throw DataError(src + ": empty emission table");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "category,pollutant,speed_kmh,factor_g_per_km") throw DataError(src + ": unexpected header");
    EmissionFactorTable table;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = src + ":" + std::to_string(lineno);
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
            fields.push_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        fields.push_back(rest);
        if (fields.size() != 4) throw DataError(where + ": expected 4 fields");
        const auto category = parse_category(fields[0]);
        if (category == EmissionCategory::ZeroEmission) throw DataError(where + ": EV rows are not allowed");
        const auto pollutant = parse_pollutant(fields[1]);
        const double speed = parse_number(fields[2], where);
        const double factor = parse_number(fields[3], where);
        if (factor < 0.0) throw DataError(where + ": negative emission factor");
        auto& curve = table.curves_[{category, pollutant}];
        if (!curve.empty() && !(speed > curve.back().speed_kmh)) {
            throw DataError(where + ": node speeds must be strictly increasing");
        }
        curve.push_back({speed, factor});
    }
    for (auto category : {EmissionCategory::MPC, EmissionCategory::HDT}) {
        for (auto pollutant : kAllPollutants) {
            if (!table.curves_.count({category, pollutant})) {
                throw DataError(src + ": missing curve " + std::string(to_string(category)) + "/" +
                                std::string(to_string(pollutant)));
            }
        }
    }
    return table;
}

EmissionFactorTable EmissionFactorTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open emission table " + path);
    return parse(in, path);
}

std::string EmissionFactorTable::builtin_csv() { return std::string(kBuiltinEmissionTable); }

const EmissionFactorTable& EmissionFactorTable::builtin() {
    static const EmissionFactorTable table = [] {
        std::istringstream in{builtin_csv()};
        return parse(in, "<builtin>");
    }();
    return table;
}

const std::vector<FactorNode>& EmissionFactorTable::curve(EmissionCategory category, Pollutant pollutant) const {
    auto it = curves_.find({category, pollutant});
    if (it == curves_.end()) throw DataError("no emission curve for requested category");
    return it->second;
}

double EmissionFactorTable::factor(EmissionCategory category, Pollutant pollutant, double speed_kmh) const {
    if (category == EmissionCategory::ZeroEmission) return 0.0;
    const auto& nodes = curve(category, pollutant);
    if (speed_kmh <= nodes.front().speed_kmh) return nodes.front().factor_g_per_km;
    if (speed_kmh >= nodes.back().speed_kmh) return nodes.back().factor_g_per_km;
    auto hi = std::upper_bound(nodes.begin(), nodes.end(), speed_kmh,
                               [](double s, const FactorNode& n) { return s < n.speed_kmh; });
    auto lo = hi - 1;
    if (speed_kmh == lo->speed_kmh) return lo->factor_g_per_km;
    const double w = (speed_kmh - lo->speed_kmh) / (hi->speed_kmh - lo->speed_kmh);
    return lo->factor_g_per_km + w * (hi->factor_g_per_km - lo->factor_g_per_km);
}

double emission_factor(EmissionCategory category, Pollutant pollutant, double speed_kmh,
                       const EmissionFactorTable& table) {
    return table.factor(category, pollutant, speed_kmh);
}

PollutantArray EmissionLedger::total() const {
    PollutantArray sum{};
    for (const auto& [lane, grams] : by_lane) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += grams[i];
    }
    return sum;
}

void accumulate_emissions(VehicleClass cls, double distance_m, double speed_kmh, int lane, EmissionLedger& ledger,
                          const EmissionFactorTable& table) {
    if (distance_m < 0.0) throw RangeError("distance must be non-negative");
    const auto category = category_for(cls);
    if (category == EmissionCategory::ZeroEmission) return;
    auto& lane_totals = ledger.by_lane[lane];
    for (auto p : kAllPollutants) {
        const double grams = table.factor(category, p, speed_kmh) * distance_m / 1000.0;
        lane_totals[static_cast<std::size_t>(p)] += grams;
    }
}

}  // namespace cwdsim
