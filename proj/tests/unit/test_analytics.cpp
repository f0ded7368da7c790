#include "cwdsim/analytics.hpp"
#include "cwdsim/errors.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <sstream>

using namespace cwdsim;

namespace {

StatisticsOptions options_200x10() {
    StatisticsOptions o;
    o.lane_count = 3;
    o.length = 1000.0;
    o.warmup = 0.0;
    o.interval = 0.1;
    o.grid = {200.0, 10.0};
    return o;
}

// One vehicle at constant speed from `x0`, rows every 0.1 s from t = 0.1.
void cruise(StatisticsAccumulator& acc, VehicleId id, int lane, double x0, double v, int steps) {
    for (int k = 1; k <= steps; ++k) {
        TrajectoryRow r;
        r.t = quantize_micro(k * 0.1);
        r.veh_id = id;
        r.lane = lane;
        r.speed = v;
        r.pos = x0 + v * k * 0.1;
        acc.on_row(r);
    }
}

}  // namespace

TEST_SUITE("analytics") {
    TEST_CASE("grid specs parse as meters by seconds") {
        const auto g = parse_grid_spec("200x10");
        CHECK(g.dx == 200.0);
        CHECK(g.dt == 10.0);
        CHECK_THROWS_AS(parse_grid_spec("200"), ConfigError);
        CHECK_THROWS_AS(parse_grid_spec("0x10"), ConfigError);
        CHECK_THROWS_AS(parse_grid_spec("ax10"), ConfigError);
    }

    TEST_CASE("one cell of a single cruising vehicle") {
        // 20 m/s for 10 s through a 200 m x 10 s cell
        SpaceTimeGrid grid({200.0, 10.0}, 3, 1000.0, 0.0);
        for (int k = 0; k < 100; ++k) grid.add(2, k * 2.0, k * 0.1, 2.0, 0.1);
        CHECK(grid.flow(2, 0, 0) == doctest::Approx(oracle::edie_flow(200.0, 200.0, 10.0)).epsilon(1e-12));
        CHECK(grid.flow(2, 0, 0) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(grid.density(2, 0, 0) == doctest::Approx(0.005).epsilon(1e-12));
        CHECK(*grid.speed(2, 0, 0) == doctest::Approx(20.0).epsilon(1e-12));
        CHECK_FALSE(grid.speed(1, 0, 0));
        CHECK(grid.flow(1, 0, 0) == 0.0);
    }

    TEST_CASE("steps are booked to the cell of their starting point") {
        SpaceTimeGrid grid({100.0, 10.0}, 1, 500.0, 0.0);
        grid.add(1, 99.0, 9.95, 2.0, 0.1);
        CHECK(grid.cell(1, 0, 0).ttd == 2.0);
        CHECK(grid.cell(1, 1, 0).ttd == 0.0);
        CHECK(grid.t_cells() == 1);
        // before the origin or outside the road: ignored
        grid.add(1, -5.0, 1.0, 2.0, 0.1);
        grid.add(1, 600.0, 1.0, 2.0, 0.1);
        CHECK(grid.cell(1, 0, 0).ttd == 2.0);
    }

    TEST_CASE("property: doubling the vehicles doubles flow and density, keeps speed") {
        oracle::SplitMix rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const double v = rng.uniform(1.0, 30.0);
            const double x0 = rng.uniform(0.0, 300.0);
            StatisticsAccumulator one(options_200x10());
            StatisticsAccumulator two(options_200x10());
            cruise(one, 1, 1, x0, v, 150);
            cruise(two, 1, 1, x0, v, 150);
            cruise(two, 2, 2, x0, v, 150);
            const auto& g1 = one.grid();
            const auto& g2 = two.grid();
            for (std::size_t ti = 0; ti < g1.t_cells(); ++ti) {
                for (std::size_t xi = 0; xi < g1.x_cells(); ++xi) {
                    const double pooled_q = g2.flow(1, xi, ti) + g2.flow(2, xi, ti);
                    const double pooled_k = g2.density(1, xi, ti) + g2.density(2, xi, ti);
                    CHECK(pooled_q == doctest::Approx(2.0 * g1.flow(1, xi, ti)).epsilon(1e-12));
                    CHECK(pooled_k == doctest::Approx(2.0 * g1.density(1, xi, ti)).epsilon(1e-12));
                    if (g1.speed(1, xi, ti)) CHECK(*g2.speed(2, xi, ti) == doctest::Approx(*g1.speed(1, xi, ti)));
                }
            }
        }
    }

    TEST_CASE("property: totals are additive over cells and lanes") {
        oracle::SplitMix rng(12);
        StatisticsAccumulator acc(options_200x10());
        for (VehicleId id = 1; id <= 12; ++id) {
            cruise(acc, id, 1 + static_cast<int>(id % 3), rng.uniform(0.0, 200.0), rng.uniform(5.0, 30.0), 200);
        }
        const auto r = acc.result();
        const auto& g = acc.grid();
        double ttd = 0.0;
        double ttt = 0.0;
        for (int lane = 0; lane <= 3; ++lane) {
            double lane_ttd = 0.0;
            for (std::size_t ti = 0; ti < g.t_cells(); ++ti) {
                for (std::size_t xi = 0; xi < g.x_cells(); ++xi) {
                    lane_ttd += g.cell(lane, xi, ti).ttd;
                    ttt += g.cell(lane, xi, ti).ttt;
                }
            }
            CHECK(lane_ttd == doctest::Approx(r.lane_ttd[static_cast<std::size_t>(lane)]).epsilon(1e-12));
            ttd += lane_ttd;
        }
        CHECK(ttd == doctest::Approx(r.ttd).epsilon(1e-12));
        CHECK(ttt == doctest::Approx(r.ttt).epsilon(1e-12));
        CHECK(r.rows == 12 * 200);
        CHECK(r.vehicles == 12);
        CHECK(*r.mean_speed == doctest::Approx(r.ttd / r.ttt));
    }

    TEST_CASE("rows before the warm-up are left out") {
        auto o = options_200x10();
        o.warmup = 5.0;
        StatisticsAccumulator acc(o);
        cruise(acc, 1, 1, 0.0, 10.0, 100);
        // rows whose step starts at or after 5 s: t = 5.1 .. 10.0
        CHECK(acc.result().rows == 50);
        CHECK(acc.result().ttd == doctest::Approx(50.0));
    }

    TEST_CASE("out-of-order rows are refused") {
        StatisticsAccumulator acc(options_200x10());
        TrajectoryRow r;
        r.t = 1.0;
        r.veh_id = 4;
        r.lane = 1;
        acc.on_row(r);
        CHECK_THROWS_AS(acc.on_row(r), DataError);
        r.t = 0.5;
        CHECK_THROWS_AS(acc.on_row(r), DataError);
        r.t = 2.0;
        r.lane = 7;
        CHECK_THROWS_AS(acc.on_row(r), DataError);
    }

    TEST_CASE("lane means average vehicles per time, then over time") {
        LaneSpeedSeries s(2);
        s.add(0.1, 1, 10.0);
        s.add(0.1, 1, 20.0);
        s.add(0.2, 1, 30.0);
        s.add(0.2, 2, 8.0);
        const auto m = s.means(1);
        REQUIRE(m.size() == 2);
        CHECK(*m[0] == 15.0);
        CHECK(*m[1] == 30.0);
        CHECK(*s.overall_mean(1) == 22.5);
        CHECK_FALSE(s.means(2)[0]);
        CHECK(*s.overall_mean(2) == 8.0);
        CHECK_FALSE(s.overall_mean(0));
    }

    TEST_CASE("moving average of a step") {
        std::vector<double> t;
        std::vector<std::optional<double>> v;
        for (int k = 0; k <= 100; ++k) {
            t.push_back(k * 1.0);
            v.push_back(k < 50 ? 0.0 : 10.0);
        }
        const auto m = moving_average(t, v, 10.0);
        CHECK(*m[20] == 0.0);
        CHECK(*m[80] == 10.0);
        // window [45, 55]: 6 samples at 10, 5 at 0
        CHECK(*m[50] == doctest::Approx(60.0 / 11.0));
        // the ends use the part of the window that exists
        CHECK(*m[100] == 10.0);
        v[60] = std::nullopt;
        const auto gap = moving_average(t, v, 10.0);
        CHECK(*gap[60] == 10.0);
        CHECK_THROWS_AS(moving_average(t, v, 0.0), ConfigError);
        t.pop_back();
        CHECK_THROWS_AS(moving_average(t, v, 10.0), DataError);
    }

    TEST_CASE("max flow and scatter") {
        SpaceTimeGrid grid({100.0, 10.0}, 2, 200.0, 0.0);
        // same density bin, flows 0.1 and 0.3 veh/s
        grid.add(1, 0.0, 0.0, 100.0, 5.0);
        grid.add(1, 100.0, 0.0, 300.0, 5.0);
        CHECK(max_cell_flow(grid) == doctest::Approx(0.3));
        // pooled variance with one degree of freedom: 2 * 0.1^2
        CHECK(flow_scatter(grid, 0.01) == doctest::Approx(0.02));
        SpaceTimeGrid lone({100.0, 10.0}, 1, 200.0, 0.0);
        lone.add(1, 0.0, 0.0, 100.0, 5.0);
        CHECK(flow_scatter(lone, 0.01) == 0.0);
    }

    TEST_CASE("trajectory text round trip") {
        std::ostringstream out;
        {
            TrajectoryWriter w(out);
            TrajectoryRow r;
            r.t = 0.1;
            r.veh_id = 3;
            r.cls = VehicleClass::AV;
            r.lane = 2;
            r.pos = 123.456789;
            r.speed = 20.5;
            r.accel = -0.25;
            r.soc = 40.0;
            w.on_row(r);
            r.cls = VehicleClass::HV;
            r.soc.reset();
            r.veh_id = 4;
            w.on_row(r);
        }
        std::istringstream in(out.str());
        std::vector<TrajectoryRow> rows;
        read_trajectory(in, [&](const TrajectoryRow& r) { rows.push_back(r); });
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].cls == VehicleClass::AV);
        CHECK(rows[0].pos == doctest::Approx(123.456789).epsilon(1e-9));
        CHECK(*rows[0].soc == 40.0);
        CHECK_FALSE(rows[1].soc);
        std::istringstream bad(std::string(kTrajectoryHeader) + "\n0.1,1,HV,1,abc,1,0,\n");
        CHECK_THROWS_AS(read_trajectory(bad, [](const TrajectoryRow&) {}), DataError);
        std::istringstream headless("0.1,1,HV,1,1,1,0,\n");
        CHECK_THROWS_AS(read_trajectory(headless, [](const TrajectoryRow&) {}), DataError);
    }
}
