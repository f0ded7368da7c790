#include "cwdsim/engine.hpp"
#include "cwdsim/errors.hpp"
#include "oracle.hpp"
#include "platoon.hpp"

#include <doctest.h>

#include <map>

using namespace cwdsim;

namespace {

ScenarioConfig quiet(int lanes = 3, const char* policy = "none", double duration = 100.0) {
    auto c = make_scenario(policy, MprCase::Base, 1);
    c.geometry.lane_count = lanes;
    c.main_flow = 0.0;
    c.ramp_flow = 0.0;
    c.duration = duration;
    c.warmup = 0.0;
    c.finalize();
    return c;
}

IdmParams idm(double a, double b, double T, double s0, double v0) {
    IdmParams p;
    p.accel = a;
    p.decel = b;
    p.headway = T;
    p.standstill = s0;
    p.desired_speed = v0;
    return p;
}

class Collect : public TrajectorySink {
public:
    void on_row(const TrajectoryRow& row) override { rows.push_back(row); }
    std::vector<TrajectoryRow> rows;
};

bool same_rows(const std::vector<TrajectoryRow>& a, const std::vector<TrajectoryRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.t != y.t || x.veh_id != y.veh_id || x.cls != y.cls || x.lane != y.lane || x.pos != y.pos ||
            x.speed != y.speed || x.accel != y.accel || x.soc != y.soc) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_SUITE("engine") {
    TEST_CASE("empty world only advances the clock") {
        Simulation sim(quiet());
        for (int i = 0; i < 10; ++i) sim.step();
        CHECK(sim.clock() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sim.vehicles().empty());
        CHECK(sim.counters().inserted == 0);
    }

    TEST_CASE("single vehicle at its desired speed cruises") {
        Simulation sim(quiet());
        const double v0 = 120.0 / 3.6;
        const auto id = sim.insert_vehicle(VehicleClass::HV, 2, 100.0, v0, idm(1.3, 2.0, 1.5, 2.0, v0)).id;
        for (int i = 0; i < 50; ++i) {
            const double before = sim.find(id)->pos;
            sim.step();
            CHECK(sim.find(id)->speed == v0);
            CHECK(sim.find(id)->pos - before == doctest::Approx(v0 * 0.1).epsilon(1e-12));
        }
    }

    TEST_CASE("two-vehicle platoon matches the oracle over 100 steps to 1e-9 m") {
        oracle::SplitMix rng(101);
        for (int trial = 0; trial < 20; ++trial) {
            const auto r = platoon::run(platoon::draw(rng), 100);
            CHECK(r.max_difference <= 1e-9);
            CHECK(r.guard_events == 0);
        }
    }

    TEST_CASE("property: random platoons track the oracle over 1000 steps to 1e-6 m") {
        oracle::SplitMix rng(202);
        for (int trial = 0; trial < 100; ++trial) {
            const auto r = platoon::run(platoon::draw(rng), 1000);
            CHECK(r.max_difference <= 1e-6);
            CHECK(r.guard_events == 0);
        }
    }

    TEST_CASE("zero flow never produces arrivals") {
        Simulation sim(quiet(3, "F1", 600.0));
        sim.run();
        CHECK(sim.counters().inserted == 0);
        for (int lane = 0; lane <= 3; ++lane) CHECK(sim.queue_length(lane) == 0);
    }

    TEST_CASE("arrival counts follow the configured Poisson rate") {
        auto c = make_scenario("none", MprCase::Base, 3);
        c.ramp_flow = 0.0;
        c.duration = 3600.0;
        c.warmup = 0.0;
        c.finalize();
        Simulation sim(c);
        sim.run();
        std::uint64_t arrivals = sim.counters().inserted;
        for (int lane = 0; lane <= 3; ++lane) arrivals += sim.queue_length(lane);
        // 3 lanes x 2000 veh/h for one hour: mean 6000, sd sqrt(6000)
        CHECK(std::abs(static_cast<double>(arrivals) - 6000.0) <= 3.0 * std::sqrt(6000.0));
    }

    TEST_CASE("identical seeds give identical trajectories") {
        auto c = make_scenario("C2.A", MprCase::V, 17);
        c.duration = 120.0;
        c.warmup = 0.0;
        c.finalize();
        Collect a;
        Collect b;
        Simulation s1(c);
        s1.add_sink(a);
        s1.run();
        Simulation s2(c);
        s2.add_sink(b);
        s2.run();
        CHECK(!a.rows.empty());
        CHECK(same_rows(a.rows, b.rows));
        c.seed = 18;
        Collect other;
        Simulation s3(c);
        s3.add_sink(other);
        s3.run();
        CHECK_FALSE(same_rows(a.rows, other.rows));
    }

    TEST_CASE("ramp vehicle merges into an empty right lane at once") {
        Simulation sim(quiet());
        const auto id = sim.insert_vehicle(VehicleClass::HV, kRampLane, 2550.0, 15.0, idm(1.3, 2.0, 1.5, 2.0, 33.0)).id;
        sim.step();
        CHECK(sim.find(id)->lane == 3);
        CHECK(sim.counters().ramp_merges == 1);
    }

    TEST_CASE("ramp vehicle holds when the right-lane follower would brake too hard") {
        Simulation sim(quiet());
        const auto id = sim.insert_vehicle(VehicleClass::HV, kRampLane, 2600.0, 16.0, idm(1.3, 2.0, 1.5, 2.0, 33.0)).id;
        const auto& rear = sim.insert_vehicle(VehicleClass::HV, 3, 2588.0, 33.0, idm(1.3, 2.0, 1.5, 2.0, 33.0));
        // what the follower would face with the ramp vehicle ahead of it
        const double forced = sim.acceleration_for(rear, 3, sim.find(id));
        CHECK(forced < -MobilParams{}.safe_decel);
        sim.step();
        CHECK(sim.find(id)->lane == kRampLane);
        CHECK(sim.counters().ramp_merges == 0);
    }

    TEST_CASE("unmerged ramp vehicle stops at the end of the acceleration lane") {
        auto c = quiet(3, "none", 60.0);
        c.mobil.safe_decel = 1e-9;
        Simulation sim(c);
        const auto id = sim.insert_vehicle(VehicleClass::HV, kRampLane, 2700.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 33.0)).id;
        // a crawling right-lane vehicle behind it makes every merge unsafe
        sim.insert_vehicle(VehicleClass::HV, 3, 2500.0, 1.0, idm(1.3, 2.0, 1.5, 2.0, 1.0));
        sim.run();
        const auto* v = sim.find(id);
        REQUIRE(v != nullptr);
        CHECK(v->lane == kRampLane);
        CHECK(v->speed < 0.1);
        CHECK(v->pos <= c.layout.ramp_end());
        CHECK(v->pos > c.layout.ramp_end() - 10.0);
        CHECK(sim.counters().stopped_merges >= 1);
    }

    TEST_CASE("speed caps") {
        auto c = quiet(3, "F3");
        Simulation sim(c);
        const auto av = sim.insert_vehicle(VehicleClass::AV, 3, 1000.0, 20.0, VanAremParams{}).id;
        const auto hv = sim.insert_vehicle(VehicleClass::HV, 3, 2000.0, 20.0, idm(1.3, 2.0, 1.5, 2.0, 33.3)).id;
        const auto ramp = sim.insert_vehicle(VehicleClass::HV, kRampLane, 2300.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 33.3)).id;
        CHECK(sim.speed_cap(*sim.find(av), 3) == doctest::Approx(60.0 / 3.6));
        CHECK(sim.speed_cap(*sim.find(av), 2) == doctest::Approx(120.0 / 3.6));
        CHECK(sim.speed_cap(*sim.find(hv), 3) == doctest::Approx(33.3));
        CHECK(sim.speed_cap(*sim.find(ramp), kRampLane) == doctest::Approx(60.0 / 3.6));
        c.cwd_cap_scope = CwdCapScope::All;
        Simulation all(c);
        const auto& hv2 = all.insert_vehicle(VehicleClass::HV, 3, 2000.0, 20.0, idm(1.3, 2.0, 1.5, 2.0, 33.3));
        CHECK(all.speed_cap(hv2, 3) == doctest::Approx(60.0 / 3.6));
    }

    TEST_CASE("electric vehicles charge on charging sections only") {
        // one lane so the vehicle cannot leave the charging lane
        Simulation charged(quiet(1, "F1", 60.0));
        charged.insert_vehicle(VehicleClass::AV, 1, 100.0, 15.0, VanAremParams{}, 0.15);
        charged.run();
        // 60 s at 1.8 kWh/min, no clamp at 15% SOC
        CHECK(charged.energy().supplied == doctest::Approx(1.8).epsilon(1e-9));
        CHECK(charged.energy().consumed > 0.0);
        CHECK(charged.max_conservation_error() <= 1e-9);
        Simulation dry(quiet(3, "F3", 60.0));
        dry.insert_vehicle(VehicleClass::AV, 1, 100.0, 15.0, VanAremParams{}, 0.9);
        dry.run();
        CHECK(dry.energy().supplied == 0.0);
        CHECK(dry.energy().consumed > 0.0);
    }

    TEST_CASE("vehicles leave at the road end") {
        Simulation sim(quiet());
        const double v0 = 120.0 / 3.6;
        sim.insert_vehicle(VehicleClass::HV, 1, 4990.0, v0, idm(1.3, 2.0, 1.5, 2.0, v0));
        for (int i = 0; i < 4; ++i) sim.step();
        CHECK(sim.vehicles().size() == 0);
        CHECK(sim.counters().exited == 1);
    }

    TEST_CASE("overlapping insertions are refused") {
        Simulation sim(quiet());
        sim.insert_vehicle(VehicleClass::HV, 1, 100.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 30.0));
        CHECK_THROWS_AS(sim.insert_vehicle(VehicleClass::HV, 1, 103.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 30.0)), RangeError);
        CHECK_THROWS_AS(sim.insert_vehicle(VehicleClass::DT, 1, 115.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 30.0)), RangeError);
        CHECK_NOTHROW(sim.insert_vehicle(VehicleClass::HV, 2, 100.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 30.0)));
        CHECK_THROWS_AS(sim.insert_vehicle(VehicleClass::HV, 4, 100.0, 10.0, idm(1.3, 2.0, 1.5, 2.0, 30.0)), RangeError);
    }

    TEST_CASE("property: busy runs keep order, bounds and vehicle counts") {
        for (auto [policy, mpr] : {std::pair{"F3", MprCase::V}, std::pair{"S1", MprCase::IV}, std::pair{"C2.B", MprCase::II}}) {
            auto c = make_scenario(policy, mpr, 5);
            c.duration = 240.0;
            c.warmup = 0.0;
            c.finalize();
            Simulation sim(c);
            std::map<VehicleId, double> last_pos;
            const double v_limit = 120.0 / 3.6 + 4.0 * 0.1 + 1e-9;
            while (sim.step_index() < sim.total_steps()) {
                sim.step();
                const auto& cnt = sim.counters();
                CHECK(cnt.inserted == sim.vehicles().size() + cnt.exited);
                std::map<int, std::vector<const Vehicle*>> lanes;
                for (const auto& v : sim.vehicles()) {
                    CHECK(v.speed >= 0.0);
                    CHECK(v.speed <= v_limit);
                    auto it = last_pos.find(v.id);
                    if (it != last_pos.end()) CHECK(v.pos >= it->second);
                    last_pos[v.id] = v.pos;
                    lanes[v.lane].push_back(&v);
                    if (v.battery) {
                        CHECK(v.battery->soc >= 0.0);
                        CHECK(v.battery->soc <= v.battery->capacity);
                    }
                }
                for (auto& [lane, list] : lanes) {
                    std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->pos > b->pos; });
                    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i - 1]->rear() - list[i]->pos > 0.0);
                }
            }
            CHECK(sim.max_conservation_error() <= 1e-9);
        }
    }
}
