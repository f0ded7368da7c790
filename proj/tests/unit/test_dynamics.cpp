#include "cwdsim/distributions.hpp"
#include "cwdsim/dynamics.hpp"
#include "cwdsim/errors.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace cwdsim;

namespace {

IdmParams et_params() {
    IdmParams p;
    p.accel = 1.3;
    p.decel = 2.0;
    p.headway = 1.7;
    p.standstill = 2.0;
    p.exponent = 4.0;
    p.desired_speed = 80.0 / 3.6;
    return p;
}

}  // namespace

TEST_SUITE("dynamics") {
    TEST_CASE("desired gap") {
        auto p = et_params();
        CHECK(desired_gap(0.0, 0.0, p) == 2.0);
        CHECK(desired_gap(20.0, 0.0, p) == doctest::Approx(36.0).epsilon(1e-12));
        // 36 + 20 * 2 / (2 sqrt(1.3 * 2)) = 48.4034734589...
        CHECK(desired_gap(20.0, 2.0, p) == doctest::Approx(48.4034734589).epsilon(1e-10));
        CHECK(desired_gap(20.0, 2.0, p) == doctest::Approx(48.40).epsilon(1e-3));
        // strongly negative approach rate takes s* below s0 without clamping
        CHECK(desired_gap(20.0, -10.0, p) < 0.0);
    }

    TEST_CASE("IDM spot values") {
        const auto p = et_params();
        CHECK(idm_acceleration(0.0, p.standstill, 0.0, p) == 0.0);
        // 1.3 * (1 - 0.9^4 - (36/50)^2) = -0.22685
        const double et = idm_acceleration(20.0, 50.0, 0.0, p);
        CHECK(et == doctest::Approx(-0.22685).epsilon(1e-9));
        CHECK(std::abs(et - (-0.227)) <= 1e-3);
        CHECK(idm_acceleration(p.desired_speed, std::numeric_limits<double>::infinity(), 0.0, p) == 0.0);
    }

    TEST_CASE("IDM floor and collision state") {
        const auto p = et_params();
        CHECK(idm_acceleration(30.0, 1.0, 10.0, p) == -kEmergencyDecel);
        CHECK(idm_acceleration_raw(30.0, 1.0, 10.0, p) < -kEmergencyDecel);
        CHECK_THROWS_AS(idm_acceleration(10.0, 0.0, 0.0, p), CollisionError);
        CHECK_THROWS_AS(idm_acceleration(10.0, -1.0, 0.0, p), CollisionError);
    }

    TEST_CASE("property: IDM matches the oracle and decreases as s*/gap grows") {
        oracle::SplitMix rng(11);
        for (int i = 0; i < 2000; ++i) {
            IdmParams p;
            p.accel = rng.uniform(0.3, 5.0);
            p.decel = rng.uniform(0.3, 5.0);
            p.headway = rng.uniform(0.3, 3.5);
            p.standstill = rng.uniform(0.5, 6.0);
            p.desired_speed = rng.uniform(10.0, 40.0);
            const double v = rng.uniform(0.0, 40.0);
            const double dv = rng.uniform(-5.0, 5.0);
            const double gap = rng.uniform(0.5, 200.0);
            const oracle::Idm o{p.accel, p.decel, p.headway, p.standstill, 4.0, p.desired_speed};
            CHECK(idm_acceleration(v, gap, dv, p) == doctest::Approx(oracle::idm(o, v, gap, dv)).epsilon(1e-12));
            if (desired_gap(v, dv, p) > 0.0) {
                CHECK(idm_acceleration_raw(v, gap * 1.1, dv, p) > idm_acceleration_raw(v, gap, dv, p));
            }
            if (v < p.desired_speed) {
                const double free = idm_acceleration(v, std::numeric_limits<double>::infinity(), 0.0, p);
                CHECK(free == doctest::Approx(p.accel * (1.0 - std::pow(v / p.desired_speed, 4.0))));
                CHECK(free > 0.0);
            }
        }
    }

    TEST_CASE("standstill gap table") {
        CHECK(standstill_gap(VehicleClass::HV, VehicleClass::HV) == 2.66);
        CHECK(standstill_gap(VehicleClass::DT, VehicleClass::DT) == 3.99);
        CHECK(standstill_gap(VehicleClass::HV, VehicleClass::DT) == 2.73);
        CHECK(standstill_gap(VehicleClass::DT, VehicleClass::HV) == 2.74);
        CHECK(standstill_gap(VehicleClass::ET, VehicleClass::HV) == 2.0);
        CHECK(standstill_gap(VehicleClass::ET, VehicleClass::DT) == 2.0);
    }

    TEST_CASE("Van Arem controller") {
        const VanAremParams p;
        CHECK(reference_clearance(25.0, p) == 12.5);
        CHECK(reference_clearance(1.0, p) == 2.0);
        // following term: 0.58 * 5 + 0.1 * (40 - 12.5) = 5.65; clamp to 4
        const TargetObservation target{40.0, 30.0, 0.0};
        const double following = p.k_a * target.accel + p.k_v * (target.speed - 25.0) +
                                 p.k_d * (target.distance - reference_clearance(25.0, p));
        CHECK(following == doctest::Approx(5.65).epsilon(1e-12));
        // intended speed high enough that the free-mode term does not bind
        CHECK(van_arem_acceleration(25.0, 50.0, target, p) == 4.0);
        CHECK(van_arem_acceleration(30.0, 30.0, std::nullopt, p) == 0.0);
        CHECK(van_arem_acceleration(30.0, 33.33, std::nullopt, p) == doctest::Approx(0.999).epsilon(1e-9));
        CHECK_THROWS_AS(van_arem_acceleration(30.0, 30.0, TargetObservation{-1.0, 0.0, 0.0}, p), ObservationError);
    }

    TEST_CASE("property: Van Arem output stays within its bounds") {
        const VanAremParams p;
        oracle::SplitMix rng(5);
        for (int i = 0; i < 5000; ++i) {
            std::optional<TargetObservation> target;
            if (rng.uniform() < 0.7) target = TargetObservation{rng.uniform(0.0, 300.0), rng.uniform(0.0, 40.0), rng.uniform(-8.0, 4.0)};
            const double a = van_arem_acceleration(rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0), target, p);
            CHECK(a >= p.b_max);
            CHECK(a <= p.a_max);
        }
    }

    TEST_CASE("grade adjustment") {
        CHECK(slope_adjust(1.0, 0.03, VehicleClass::HV) == 1.0);
        CHECK(slope_adjust(1.0, 0.03, VehicleClass::AV) == 1.0);
        CHECK(slope_adjust(1.0, 0.0, VehicleClass::DT) == doctest::Approx(0.2).epsilon(1e-12));
        // 1.3 - 9.8 sin(atan 0.03) - 0.8 cos(atan 0.03) = 0.2064917...
        CHECK(slope_adjust(1.3, 0.03, VehicleClass::ET) == doctest::Approx(0.2064917).epsilon(1e-6));
        CHECK(std::abs(slope_adjust(1.3, 0.03, VehicleClass::ET) - 0.206) <= 1e-3);
        for (double a : {-3.0, 0.0, 2.5}) {
            CHECK(slope_adjust(a, 0.0, VehicleClass::ET) - a == doctest::Approx(-kRoadFriction));
        }
        // the alternate form multiplies friction by g
        CHECK(slope_adjust(1.3, 0.0, VehicleClass::DT, SlopeForm::Approximate) ==
              doctest::Approx(1.3 - 9.8 * 0.8));
    }

    TEST_CASE("driver sampling") {
        RandomStream rng(1, stream::kDrivers);
        const auto et = std::get<IdmParams>(sample_driver_params(VehicleClass::ET, rng));
        CHECK(et.accel == 1.3);
        CHECK(et.decel == 2.0);
        CHECK(et.headway == 1.7);
        CHECK(et.standstill == 2.0);
        CHECK(et.exponent == 4.0);
        CHECK(std::holds_alternative<VanAremParams>(sample_driver_params(VehicleClass::AV, rng)));
        for (int i = 0; i < 10000; ++i) {
            const auto hv = std::get<IdmParams>(sample_driver_params(VehicleClass::HV, rng));
            CHECK(hv.accel >= 1.81);
            CHECK(hv.decel > 0.0);
            CHECK(hv.headway >= 0.4);
            CHECK(hv.headway <= 3.0);
        }
        RandomStream a(99, stream::kDrivers);
        RandomStream b(99, stream::kDrivers);
        for (int i = 0; i < 100; ++i) {
            const auto x = std::get<IdmParams>(sample_driver_params(VehicleClass::DT, a));
            const auto y = std::get<IdmParams>(sample_driver_params(VehicleClass::DT, b));
            CHECK(x.accel == y.accel);
            CHECK(x.decel == y.decel);
            CHECK(x.headway == y.headway);
        }
    }

    TEST_CASE("property: sampled means match closed forms within 2%") {
        const DriverParamDistributions d;
        RandomStream rng(3, stream::kDrivers);
        const int n = 100000;
        for (const auto* cls : {&d.hv, &d.dt}) {
            double sa = 0.0;
            double sb = 0.0;
            double st = 0.0;
            for (int i = 0; i < n; ++i) {
                sa += cls->accel.sample(rng);
                sb += cls->decel.sample(rng);
                st += cls->headway.sample(rng);
            }
            CHECK(sa / n == doctest::Approx(oracle::weibull_mean(cls->accel.shape, cls->accel.scale, cls->accel.location)).epsilon(0.02));
            CHECK(sb / n == doctest::Approx(oracle::rayleigh_mean(cls->decel.scale)).epsilon(0.02));
            CHECK(st / n == doctest::Approx(cls->headway.location + cls->headway.shape * cls->headway.scale).epsilon(0.02));
        }
    }

    TEST_CASE("distribution helpers agree with closed forms") {
        const Weibull w{1.39, 0.97, 1.81};
        CHECK(w.mean() == doctest::Approx(oracle::weibull_mean(1.39, 0.97, 1.81)));
        CHECK(w.cdf(1.81) == 0.0);
        CHECK(w.cdf(1.81 + 0.97) == doctest::Approx(1.0 - std::exp(-1.0)));
        const Rayleigh r{1.33};
        CHECK(r.mean() == doctest::Approx(oracle::rayleigh_mean(1.33)));
        CHECK(r.cdf(1.33) == doctest::Approx(1.0 - std::exp(-0.5)));
        const ExpNorm e{0.22, 1.90, 0.79};
        CHECK(e.mean() == doctest::Approx(1.90 + 0.22 * 0.79));
        CHECK(e.variance() == doctest::Approx(0.79 * 0.79 * (1.0 + 0.22 * 0.22)));
        CHECK(e.cdf(-100.0) == doctest::Approx(0.0));
        CHECK(e.cdf(100.0) == doctest::Approx(1.0));
    }

    TEST_CASE("driver parameter file round-trips") {
        DriverParamDistributions d;
        d.hv.headway.scale = 7e-4;
        d.standstill.hv_hv = 2.5;
        const auto text = d.to_text();
        const auto back = DriverParamDistributions::from_text(KeyValueText::parse_string(text));
        CHECK(back.to_text() == text);
        CHECK(back.hv.headway.scale == 7e-4);
        CHECK(back.standstill.hv_hv == 2.5);
    }
}
