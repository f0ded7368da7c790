#include "cwdsim/dynamics.hpp"

#include "cwdsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cwdsim {

void IdmParams::validate() const {
    if (!(accel > 0.0 && decel > 0.0 && headway > 0.0 && standstill > 0.0 && desired_speed > 0.0 && exponent > 0.0)) {
        throw ConfigError("IDM parameters must be positive");
    }
}

void VanAremParams::validate() const {
    if (!(a_max > 0.0)) throw ConfigError("AV a_max must be positive");
    if (!(b_max < 0.0)) throw ConfigError("AV b_max must be negative");
    if (!(r_iso > 0.0 && r_conn >= r_iso)) throw ConfigError("AV sensor ranges must satisfy r_conn >= r_iso > 0");
}

double desired_gap(double v, double dv, const IdmParams& p) {
    return p.standstill + p.headway * v + v * dv / (2.0 * std::sqrt(p.accel * p.decel));
}

namespace {

double speed_ratio_term(double v, const IdmParams& p) {
    const double r = v / p.desired_speed;
    if (p.exponent == 4.0) {
        const double r2 = r * r;
        return r2 * r2;
    }
    return std::pow(r, p.exponent);
}

}  // namespace

double idm_acceleration_raw(double v, double gap, double dv, const IdmParams& p) {
    if (!(gap > 0.0)) {
        throw CollisionError("IDM evaluated with non-positive gap " + std::to_string(gap) + " m");
    }
    const double free = 1.0 - speed_ratio_term(v, p);
    if (std::isinf(gap)) return p.accel * free;
    const double ratio = desired_gap(v, dv, p) / gap;
    return p.accel * (free - ratio * ratio);
}

double idm_acceleration(double v, double gap, double dv, const IdmParams& p) {
    return std::max(idm_acceleration_raw(v, gap, dv, p), -kEmergencyDecel);
}

double standstill_gap(VehicleClass follower, VehicleClass leader, const StandstillGapTable& t) {
    switch (follower) {
        case VehicleClass::HV:
            return leader == VehicleClass::DT ? t.hv_dt : t.hv_hv;
        case VehicleClass::DT:
            return leader == VehicleClass::HV ? t.dt_hv : t.dt_dt;
        case VehicleClass::ET:
            return t.et_default;
        case VehicleClass::AV:
            // AV spacing is governed by the reference clearance; this value
            // only feeds insertion checks.
            return 2.0;
    }
    return t.hv_hv;
}

double reference_clearance(double v, const VanAremParams& p) { return std::max(2.0, p.tau * v); }

double van_arem_acceleration(double v, double v_intended, const std::optional<TargetObservation>& target,
                             const VanAremParams& p) {
    double a = p.k * (v_intended - v);
    if (target) {
        if (target->distance < 0.0) throw ObservationError("negative distance to target vehicle");
        const double following = p.k_a * target->accel + p.k_v * (target->speed - v) +
                                 p.k_d * (target->distance - reference_clearance(v, p));
        a = std::min(a, following);
    }
    return std::clamp(a, p.b_max, p.a_max);
}

double slope_adjust(double accel, double grade, VehicleClass cls, SlopeForm form) {
    if (!is_truck(cls)) return accel;
    const double theta = std::atan(grade);
    if (form == SlopeForm::Approximate) {
        return accel - kGravity * (theta + kRoadFriction * (1.0 - theta * theta / 2.0));
    }
    return accel - kGravity * std::sin(theta) - kRoadFriction * std::cos(theta);
}

DriverModel sample_driver_params(VehicleClass cls, RandomStream& rng, const DriverParamDistributions& d) {
    switch (cls) {
        case VehicleClass::AV:
            return d.av;
        case VehicleClass::ET: {
            IdmParams p = d.et;
            p.desired_speed = class_desired_speed(cls);
            return p;
        }
        case VehicleClass::HV:
        case VehicleClass::DT: {
            const auto& dist = cls == VehicleClass::HV ? d.hv : d.dt;
            IdmParams p;
            p.accel = dist.accel.sample(rng);
            p.decel = std::max(dist.decel.sample(rng), d.decel_floor);
            p.headway = std::clamp(dist.headway.sample(rng), d.headway_min, d.headway_max);
            p.standstill = standstill_gap(cls, cls, d.standstill);
            p.exponent = 4.0;
            p.desired_speed = class_desired_speed(cls);
            return p;
        }
    }
    return d.av;
}

DriverParamDistributions DriverParamDistributions::from_text(const KeyValueText& doc) {
    DriverParamDistributions d;
    auto read_class = [&](const std::string& prefix, ClassDistributions& c) {
        c.accel.shape = doc.get_double(prefix + ".accel.weibull_shape", c.accel.shape);
        c.accel.scale = doc.get_double(prefix + ".accel.weibull_scale", c.accel.scale);
        c.accel.location = doc.get_double(prefix + ".accel.weibull_location", c.accel.location);
        c.decel.scale = doc.get_double(prefix + ".decel.rayleigh_scale", c.decel.scale);
        c.headway.shape = doc.get_double(prefix + ".headway.exponnorm_shape", c.headway.shape);
        c.headway.location = doc.get_double(prefix + ".headway.exponnorm_location", c.headway.location);
        c.headway.scale = doc.get_double(prefix + ".headway.exponnorm_scale", c.headway.scale);
        if (!(c.accel.shape > 0.0 && c.accel.scale > 0.0 && c.decel.scale > 0.0 && c.headway.shape > 0.0 &&
              c.headway.scale > 0.0)) {
            throw ConfigError(prefix + ": distribution shape/scale parameters must be positive");
        }
    };
    read_class("hv", d.hv);
    read_class("dt", d.dt);
    d.headway_min = doc.get_double("headway.min_s", d.headway_min);
    d.headway_max = doc.get_double("headway.max_s", d.headway_max);
    d.decel_floor = doc.get_double("decel.floor_mps2", d.decel_floor);
    d.standstill.hv_hv = doc.get_double("standstill.hv_hv_m", d.standstill.hv_hv);
    d.standstill.dt_dt = doc.get_double("standstill.dt_dt_m", d.standstill.dt_dt);
    d.standstill.hv_dt = doc.get_double("standstill.hv_dt_m", d.standstill.hv_dt);
    d.standstill.dt_hv = doc.get_double("standstill.dt_hv_m", d.standstill.dt_hv);
    d.standstill.et_default = doc.get_double("standstill.et_m", d.standstill.et_default);
    d.et.accel = doc.get_double("et.accel_mps2", d.et.accel);
    d.et.decel = doc.get_double("et.decel_mps2", d.et.decel);
    d.et.headway = doc.get_double("et.headway_s", d.et.headway);
    d.et.standstill = d.standstill.et_default;
    d.et.exponent = doc.get_double("et.exponent", d.et.exponent);
    d.av.a_max = doc.get_double("av.a_max_mps2", d.av.a_max);
    d.av.b_max = doc.get_double("av.b_max_mps2", d.av.b_max);
    d.av.r_iso = doc.get_double("av.r_iso_m", d.av.r_iso);
    d.av.r_conn = doc.get_double("av.r_conn_m", d.av.r_conn);
    d.av.k = doc.get_double("av.k", d.av.k);
    d.av.k_a = doc.get_double("av.k_a", d.av.k_a);
    d.av.k_v = doc.get_double("av.k_v", d.av.k_v);
    d.av.k_d = doc.get_double("av.k_d", d.av.k_d);
    d.av.tau = doc.get_double("av.tau_s", d.av.tau);
    doc.reject_unconsumed();
    if (!(d.headway_min > 0.0 && d.headway_max >= d.headway_min)) throw ConfigError("invalid headway clamp range");
    if (!(d.decel_floor > 0.0)) throw ConfigError("deceleration floor must be positive");
    d.et.validate();
    d.av.validate();
    return d;
}

DriverParamDistributions DriverParamDistributions::load(const std::string& path) {
    return from_text(KeyValueText::load(path));
}

std::string DriverParamDistributions::to_text() const {
    std::ostringstream out;
    auto num = [&](const std::string& key, double value) { out << key << " = " << format_double(value) << '\n'; };
    auto write_class = [&](const std::string& prefix, const ClassDistributions& c) {
        num(prefix + ".accel.weibull_shape", c.accel.shape);
        num(prefix + ".accel.weibull_scale", c.accel.scale);
        num(prefix + ".accel.weibull_location", c.accel.location);
        num(prefix + ".decel.rayleigh_scale", c.decel.scale);
        num(prefix + ".headway.exponnorm_shape", c.headway.shape);
        num(prefix + ".headway.exponnorm_location", c.headway.location);
        num(prefix + ".headway.exponnorm_scale", c.headway.scale);
    };
    write_class("hv", hv);
    write_class("dt", dt);
    num("headway.min_s", headway_min);
    num("headway.max_s", headway_max);
    num("decel.floor_mps2", decel_floor);
    num("standstill.hv_hv_m", standstill.hv_hv);
    num("standstill.dt_dt_m", standstill.dt_dt);
    num("standstill.hv_dt_m", standstill.hv_dt);
    num("standstill.dt_hv_m", standstill.dt_hv);
    num("standstill.et_m", standstill.et_default);
    num("et.accel_mps2", et.accel);
    num("et.decel_mps2", et.decel);
    num("et.headway_s", et.headway);
    num("et.exponent", et.exponent);
    num("av.a_max_mps2", av.a_max);
    num("av.b_max_mps2", av.b_max);
    num("av.r_iso_m", av.r_iso);
    num("av.r_conn_m", av.r_conn);
    num("av.k", av.k);
    num("av.k_a", av.k_a);
    num("av.k_v", av.k_v);
    num("av.k_d", av.k_d);
    num("av.tau_s", av.tau);
    return out.str();
}

}  // namespace cwdsim
