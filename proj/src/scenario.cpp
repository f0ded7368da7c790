#include "cwdsim/scenario.hpp"

#include "cwdsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

namespace cwdsim {

int RoadLayout::section_count() const { return static_cast<int>(length / section_length + 0.5); }

bool RoadLayout::is_cwd(int lane, int section) const {
    if (lane < 1 || lane > lane_count || section < 1 || section > section_count()) return false;
    return cwd[lane - 1][section - 1];
}

int RoadLayout::cwd_lane_at(int section) const {
    for (int lane = 1; lane <= lane_count; ++lane) {
        if (is_cwd(lane, section)) return lane;
    }
    return 0;
}

bool RoadLayout::overlaps_cwd(int lane, double rear, double front) const {
    if (lane < 1 || lane > lane_count) return false;
    front = std::clamp(front, 0.0, length);
    rear = std::clamp(rear, 0.0, front);
    const int first = section_of(rear, *this);
    const int last = section_of(front, *this);
    for (int s = first; s <= last; ++s) {
        if (cwd[lane - 1][s - 1]) return true;
    }
    return false;
}

int RoadLayout::merge_section() const { return section_of(ramp_position, *this); }

void RoadLayout::validate() const {
    if (!(length > 0.0) || !(section_length > 0.0)) throw ConfigError("road length and section length must be positive");
    if (std::abs(section_count() * section_length - length) > 1e-9 * length) {
        throw ConfigError("road length must be a whole number of sections");
    }
    if (lane_count < 1) throw ConfigError("lane count must be at least 1");
    if (!(ramp_position > 0.0 && ramp_position < length)) throw ConfigError("ramp position must lie inside the road");
    if (ramp_accel_lane_length < 0.0 || ramp_approach_length < 0.0 || ramp_end() > length || ramp_entry() < 0.0) {
        throw ConfigError("ramp geometry must lie on the road");
    }
    if (!(ramp_speed_limit > 0.0 && main_speed_limit > 0.0 && cwd_speed_limit > 0.0)) {
        throw ConfigError("speed limits must be positive");
    }
    if (grade < 0.0) throw ConfigError("grade must be non-negative");
    if (static_cast<int>(cwd.size()) != lane_count) throw ConfigError("charging mask lane count mismatch");
    for (const auto& lane : cwd) {
        if (static_cast<int>(lane.size()) != section_count()) throw ConfigError("charging mask section count mismatch");
    }
    for (int s = 1; s <= section_count(); ++s) {
        int n = 0;
        for (int lane = 1; lane <= lane_count; ++lane) n += is_cwd(lane, s) ? 1 : 0;
        if (n > 1) throw ConfigError("more than one charging lane in section " + std::to_string(s));
    }
}

std::string Policy::name() const {
    switch (family) {
        case PolicyFamily::None:
            return "none";
        case PolicyFamily::Full:
            return "F" + std::to_string(lane);
        case PolicyFamily::Slope:
            return "S" + std::to_string(lane);
        case PolicyFamily::Cut: {
            const char suffix = cut == CutPlacement::AtRamp ? 'O' : cut == CutPlacement::After ? 'A' : 'B';
            return "C" + std::to_string(lane) + "." + suffix;
        }
    }
    return "none";
}

Policy parse_policy(std::string_view text) {
    if (text == "none") return {};
    auto bad = [&] { return ConfigError("unknown policy `" + std::string(text) + "`"); };
    if (text.size() < 2 || text[1] < '1' || text[1] > '9') throw bad();
    Policy p;
    p.lane = text[1] - '0';
    switch (text[0]) {
        case 'F':
            if (text.size() != 2) throw bad();
            p.family = PolicyFamily::Full;
            return p;
        case 'S':
            if (text.size() != 2) throw bad();
            p.family = PolicyFamily::Slope;
            return p;
        case 'C':
            if (text.size() != 4 || text[2] != '.') throw bad();
            p.family = PolicyFamily::Cut;
            switch (text[3]) {
                case 'O':
                    p.cut = CutPlacement::AtRamp;
                    break;
                case 'A':
                    p.cut = CutPlacement::After;
                    break;
                case 'B':
                    p.cut = CutPlacement::Before;
                    break;
                default:
                    throw bad();
            }
            return p;
        default:
            throw bad();
    }
}

std::vector<Policy> all_policies(int lane_count) {
    std::vector<Policy> out;
    for (int lane = 1; lane <= lane_count; ++lane) out.push_back({PolicyFamily::Full, lane, CutPlacement::None});
    for (int lane = 1; lane <= lane_count; ++lane) {
        for (auto cut : {CutPlacement::AtRamp, CutPlacement::After, CutPlacement::Before}) {
            out.push_back({PolicyFamily::Cut, lane, cut});
        }
    }
    for (int lane = 1; lane <= lane_count; ++lane) out.push_back({PolicyFamily::Slope, lane, CutPlacement::None});
    return out;
}

RoadLayout plain_layout(const RoadGeometry& g) {
    RoadLayout layout;
    layout.length = g.length;
    layout.lane_count = g.lane_count;
    layout.section_length = g.section_length;
    layout.ramp_position = g.ramp_position;
    layout.ramp_accel_lane_length = g.ramp_accel_lane_length;
    layout.ramp_approach_length = g.ramp_approach_length;
    layout.ramp_speed_limit = g.ramp_speed_limit;
    layout.main_speed_limit = g.main_speed_limit;
    layout.cwd_speed_limit = g.cwd_speed_limit;
    layout.grade = 0.0;
    if (g.lane_count < 1) throw ConfigError("lane count must be at least 1");
    if (!(g.section_length > 0.0)) throw ConfigError("section length must be positive");
    layout.cwd.assign(static_cast<std::size_t>(g.lane_count),
                      std::vector<bool>(static_cast<std::size_t>(std::max(0, layout.section_count())), false));
    layout.validate();
    return layout;
}

RoadLayout build_road_layout(const Policy& policy, const RoadGeometry& geometry) {
    RoadLayout layout = plain_layout(geometry);
    if (policy.family == PolicyFamily::None) return layout;
    if (policy.lane < 1 || policy.lane > layout.lane_count) {
        throw ConfigError("policy " + policy.name() + " names a lane outside the road");
    }
    auto& lane = layout.cwd[policy.lane - 1];
    std::fill(lane.begin(), lane.end(), true);
    const int merge = layout.merge_section();
    auto cut = [&](int section) {
        if (section >= 1 && section <= layout.section_count()) lane[section - 1] = false;
    };
    switch (policy.family) {
        case PolicyFamily::Cut:
            cut(merge);
            if (policy.cut == CutPlacement::After) cut(merge + 1);
            if (policy.cut == CutPlacement::Before) cut(merge - 1);
            break;
        case PolicyFamily::Slope:
            layout.grade = geometry.slope_grade;
            break;
        default:
            break;
    }
    layout.validate();
    return layout;
}

RoadLayout build_road_layout(std::string_view policy, const RoadGeometry& geometry) {
    return build_road_layout(parse_policy(policy), geometry);
}

int section_of(double position, const RoadLayout& layout) {
    if (!(position >= 0.0 && position <= layout.length)) {
        throw RangeError("position " + std::to_string(position) + " m is outside the road");
    }
    const int n = layout.section_count();
    const int s = static_cast<int>(std::floor(position / layout.section_length)) + 1;
    return std::min(s, n);
}

std::string_view to_string(MprCase c) {
    switch (c) {
        case MprCase::Base:
            return "Base";
        case MprCase::I:
            return "I";
        case MprCase::II:
            return "II";
        case MprCase::III:
            return "III";
        case MprCase::IV:
            return "IV";
        case MprCase::V:
            return "V";
    }
    return "Base";
}

MprCase parse_case(std::string_view text) {
    for (auto c : all_cases()) {
        if (text == to_string(c)) return c;
    }
    throw ConfigError("unknown market penetration case `" + std::string(text) + "`");
}

std::vector<MprCase> all_cases() {
    return {MprCase::Base, MprCase::I, MprCase::II, MprCase::III, MprCase::IV, MprCase::V};
}

void FleetMix::validate() const {
    for (double s : {share_hv, share_av, share_et, share_dt}) {
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("fleet shares must lie in [0, 1]");
    }
    if (std::abs(share_hv + share_av + share_et + share_dt - 1.0) > 1e-12) {
        throw ConfigError("fleet shares must sum to 1");
    }
}

FleetMix fleet_mix(MprCase c) {
    switch (c) {
        case MprCase::Base:
            return {1.00, 0.00, 0.00, 0.00};
        case MprCase::I:
            return {0.90, 0.05, 0.00, 0.05};
        case MprCase::II:
            return {0.80, 0.10, 0.05, 0.05};
        case MprCase::III:
            return {0.70, 0.20, 0.05, 0.05};
        case MprCase::IV:
            return {0.60, 0.25, 0.05, 0.10};
        case MprCase::V:
            return {0.50, 0.30, 0.10, 0.10};
    }
    throw ConfigError("unknown market penetration case");
}

FleetMix fleet_mix(std::string_view c) { return fleet_mix(parse_case(c)); }

void MobilParams::validate() const {
    if (!(politeness >= 0.0 && politeness <= 1.0)) throw ConfigError("politeness must lie in [0, 1]");
    if (!(threshold >= 0.0)) throw ConfigError("switching threshold must be non-negative");
    if (!(safe_decel > 0.0)) throw ConfigError("safe deceleration must be positive");
    if (!(cwd_bias >= 0.0)) throw ConfigError("charging-lane bias must be non-negative");
    if (!(cooldown >= 0.0)) throw ConfigError("lane-change cooldown must be non-negative");
}

void EnergyParams::validate() const {
    if (!(av_capacity > 0.0 && et_capacity > 0.0)) throw ConfigError("battery capacities must be positive");
    if (!(av_rate >= 0.0 && et_rate >= 0.0)) throw ConfigError("consumption rates must be non-negative");
    if (!(charge_per_minute >= 0.0)) throw ConfigError("charging power must be non-negative");
    if (!(low_soc_fraction >= 0.0 && low_soc_fraction <= 1.0)) throw ConfigError("low-SOC fraction must lie in [0, 1]");
    if (!(initial_soc_min >= 0.0 && initial_soc_min <= initial_soc_max && initial_soc_max <= 1.0)) {
        throw ConfigError("initial SOC range must satisfy 0 <= min <= max <= 1");
    }
}

void ScenarioConfig::finalize() {
    layout = build_road_layout(policy, geometry);
    mix = fleet_mix(mpr_case);
    validate();
}

void ScenarioConfig::validate() const {
    layout.validate();
    mix.validate();
    mobil.validate();
    energy.validate();
    if (!(timestep > 0.0)) throw ConfigError("timestep must be positive");
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (!(warmup >= 0.0 && warmup <= duration)) throw ConfigError("warmup must lie in [0, duration]");
    if (!(main_flow >= 0.0 && ramp_flow >= 0.0)) throw ConfigError("flows must be non-negative");
    if (decimation < 1) throw ConfigError("decimation must be at least 1");
}

ScenarioConfig ScenarioConfig::from_text(const KeyValueText& doc) {
    ScenarioConfig c;
    c.policy = parse_policy(doc.get_string("policy", "F3"));
    c.mpr_case = parse_case(doc.get_string("case", "Base"));
    c.main_flow = doc.get_double("main_flow_vph_per_lane", c.main_flow);
    c.ramp_flow = doc.get_double("ramp_flow_vph", c.ramp_flow);
    c.ramp_uses_fleet_mix = doc.get_bool("ramp_uses_fleet_mix", c.ramp_uses_fleet_mix);
    c.duration = doc.get_double("duration_s", c.duration);
    c.warmup = doc.get_double("warmup_s", c.warmup);
    c.seed = doc.get_uint64("seed", c.seed);
    c.timestep = doc.get_double("timestep_s", c.timestep);
    c.decimation = static_cast<int>(doc.get_int("record_decimation", c.decimation));
    c.emission_table = doc.get_string("emission_table", c.emission_table);
    c.driver_params = doc.get_string("driver_params", c.driver_params);

    auto& g = c.geometry;
    g.length = doc.get_double("layout.length_m", g.length);
    g.lane_count = static_cast<int>(doc.get_int("layout.lane_count", g.lane_count));
    g.section_length = doc.get_double("layout.section_length_m", g.section_length);
    g.ramp_position = doc.get_double("layout.ramp_position_m", g.ramp_position);
    g.ramp_accel_lane_length = doc.get_double("layout.ramp_accel_lane_m", g.ramp_accel_lane_length);
    g.ramp_approach_length = doc.get_double("layout.ramp_approach_m", g.ramp_approach_length);
    g.ramp_speed_limit = doc.get_double("layout.ramp_speed_limit_kmh", g.ramp_speed_limit);
    g.main_speed_limit = doc.get_double("layout.main_speed_limit_kmh", g.main_speed_limit);
    g.cwd_speed_limit = doc.get_double("layout.cwd_speed_limit_kmh", g.cwd_speed_limit);
    g.slope_grade = doc.get_double("layout.slope_grade", g.slope_grade);

    auto& m = c.mobil;
    m.politeness = doc.get_double("mobil.politeness", m.politeness);
    m.threshold = doc.get_double("mobil.threshold_mps2", m.threshold);
    m.safe_decel = doc.get_double("mobil.safe_decel_mps2", m.safe_decel);
    m.cwd_bias = doc.get_double("mobil.cwd_bias_mps2", m.cwd_bias);
    m.cooldown = doc.get_double("mobil.cooldown_s", m.cooldown);

    auto& e = c.energy;
    e.av_capacity = doc.get_double("energy.av_capacity_kwh", e.av_capacity);
    e.et_capacity = doc.get_double("energy.et_capacity_kwh", e.et_capacity);
    e.av_rate = doc.get_double("energy.av_rate_kwh_per_m", e.av_rate);
    e.et_rate = doc.get_double("energy.et_rate_kwh_per_m", e.et_rate);
    e.charge_per_minute = doc.get_double("energy.charge_kwh_per_min", e.charge_per_minute);
    e.low_soc_fraction = doc.get_double("energy.low_soc_fraction", e.low_soc_fraction);
    e.initial_soc_min = doc.get_double("energy.initial_soc_min", e.initial_soc_min);
    e.initial_soc_max = doc.get_double("energy.initial_soc_max", e.initial_soc_max);

    const auto form = doc.get_string("slope.form", "exact");
    if (form == "exact") {
        c.slope_form = SlopeForm::Exact;
    } else if (form == "approximate") {
        c.slope_form = SlopeForm::Approximate;
    } else {
        throw ConfigError("slope.form must be `exact` or `approximate`");
    }
    const auto scope = doc.get_string("layout.cwd_speed_limit_scope", "electric");
    if (scope == "electric") {
        c.cwd_cap_scope = CwdCapScope::Electric;
    } else if (scope == "all") {
        c.cwd_cap_scope = CwdCapScope::All;
    } else {
        throw ConfigError("layout.cwd_speed_limit_scope must be `electric` or `all`");
    }

    doc.reject_unconsumed();
    c.finalize();
    return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    auto c = from_text(KeyValueText::load(path));
    // Data files named in a scenario are relative to the scenario itself.
    const auto base = std::filesystem::path(path).parent_path();
    for (auto* file : {&c.emission_table, &c.driver_params}) {
        if (!file->empty() && std::filesystem::path(*file).is_relative()) *file = (base / *file).lexically_normal().string();
    }
    return c;
}

std::string ScenarioConfig::to_text() const {
    std::ostringstream out;
    auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
    auto num = [&](const char* key, double value) { kv(key, format_double(value)); };
    kv("policy", policy.name());
    kv("case", std::string(to_string(mpr_case)));
    num("main_flow_vph_per_lane", main_flow);
    num("ramp_flow_vph", ramp_flow);
    kv("ramp_uses_fleet_mix", ramp_uses_fleet_mix ? "true" : "false");
    num("duration_s", duration);
    num("warmup_s", warmup);
    kv("seed", std::to_string(seed));
    num("timestep_s", timestep);
    kv("record_decimation", std::to_string(decimation));
    if (!emission_table.empty()) kv("emission_table", emission_table);
    if (!driver_params.empty()) kv("driver_params", driver_params);
    num("layout.length_m", geometry.length);
    kv("layout.lane_count", std::to_string(geometry.lane_count));
    num("layout.section_length_m", geometry.section_length);
    num("layout.ramp_position_m", geometry.ramp_position);
    num("layout.ramp_accel_lane_m", geometry.ramp_accel_lane_length);
    num("layout.ramp_approach_m", geometry.ramp_approach_length);
    num("layout.ramp_speed_limit_kmh", geometry.ramp_speed_limit);
    num("layout.main_speed_limit_kmh", geometry.main_speed_limit);
    num("layout.cwd_speed_limit_kmh", geometry.cwd_speed_limit);
    num("layout.slope_grade", geometry.slope_grade);
    num("mobil.politeness", mobil.politeness);
    num("mobil.threshold_mps2", mobil.threshold);
    num("mobil.safe_decel_mps2", mobil.safe_decel);
    num("mobil.cwd_bias_mps2", mobil.cwd_bias);
    num("mobil.cooldown_s", mobil.cooldown);
    num("energy.av_capacity_kwh", energy.av_capacity);
    num("energy.et_capacity_kwh", energy.et_capacity);
    num("energy.av_rate_kwh_per_m", energy.av_rate);
    num("energy.et_rate_kwh_per_m", energy.et_rate);
    num("energy.charge_kwh_per_min", energy.charge_per_minute);
    num("energy.low_soc_fraction", energy.low_soc_fraction);
    num("energy.initial_soc_min", energy.initial_soc_min);
    num("energy.initial_soc_max", energy.initial_soc_max);
    kv("slope.form", slope_form == SlopeForm::Exact ? "exact" : "approximate");
    kv("layout.cwd_speed_limit_scope", cwd_cap_scope == CwdCapScope::Electric ? "electric" : "all");
    return out.str();
}

ScenarioConfig make_scenario(std::string_view policy, MprCase c, std::uint64_t seed) {
    ScenarioConfig config;
    config.policy = parse_policy(policy);
    config.mpr_case = c;
    config.seed = seed;
    config.finalize();
    return config;
}

}  // namespace cwdsim
