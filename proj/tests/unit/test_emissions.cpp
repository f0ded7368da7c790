#include "cwdsim/emissions.hpp"
#include "cwdsim/errors.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <sstream>

using namespace cwdsim;

namespace {

constexpr const char* kHeader = "category,pollutant,speed_kmh,factor_g_per_km\n";

EmissionFactorTable parse(const std::string& text) {
    std::istringstream in(text);
    return EmissionFactorTable::parse(in, "<test>");
}

// A complete table whose MPC/CO curve is `co_rows`; every other curve is flat.
std::string table_with_co(const std::string& co_rows) {
    std::string out = std::string(kHeader) + co_rows;
    for (const char* cat : {"MPC", "HDT"}) {
        for (const char* p : {"CO", "NOx", "VOC", "PM2.5"}) {
            if (std::string(cat) == "MPC" && std::string(p) == "CO") continue;
            out += std::string(cat) + "," + p + ",5,1\n" + cat + "," + p + ",130,1\n";
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("emissions") {
    TEST_CASE("lookup at nodes, between nodes and outside the range") {
        const auto t = parse(table_with_co("MPC,CO,10,4.0\nMPC,CO,30,2.0\nMPC,CO,50,3.0\n"));
        CHECK(t.factor(EmissionCategory::MPC, Pollutant::CO, 30.0) == 2.0);
        CHECK(t.factor(EmissionCategory::MPC, Pollutant::CO, 20.0) == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(t.factor(EmissionCategory::MPC, Pollutant::CO, 40.0) == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(t.factor(EmissionCategory::MPC, Pollutant::CO, 0.0) == 4.0);
        CHECK(t.factor(EmissionCategory::MPC, Pollutant::CO, 200.0) == 3.0);
    }

    TEST_CASE("electric vehicles emit nothing") {
        for (auto p : kAllPollutants) {
            for (double s : {0.0, 30.0, 90.0, 130.0}) CHECK(emission_factor(EmissionCategory::ZeroEmission, p, s) == 0.0);
        }
        EmissionLedger ledger;
        accumulate_emissions(VehicleClass::AV, 1000.0, 60.0, 1, ledger);
        accumulate_emissions(VehicleClass::ET, 1000.0, 60.0, 1, ledger);
        for (auto p : kAllPollutants) CHECK(ledger.get(p) == 0.0);
    }

    TEST_CASE("grams follow factor times kilometres") {
        const auto& table = EmissionFactorTable::builtin();
        const auto node = table.curve(EmissionCategory::MPC, Pollutant::CO)[4];
        EmissionLedger ledger;
        accumulate_emissions(VehicleClass::HV, 1000.0, node.speed_kmh, 2, ledger);
        CHECK(ledger.get(Pollutant::CO) == node.factor_g_per_km);
        const auto hdt = table.curve(EmissionCategory::HDT, Pollutant::NOx)[3];
        EmissionLedger trucks;
        accumulate_emissions(VehicleClass::DT, 500.0, hdt.speed_kmh, 3, trucks);
        CHECK(trucks.get(Pollutant::NOx) == doctest::Approx(0.5 * hdt.factor_g_per_km).epsilon(1e-15));
        CHECK(category_for(VehicleClass::HV) == EmissionCategory::MPC);
        CHECK(category_for(VehicleClass::DT) == EmissionCategory::HDT);
    }

    TEST_CASE("malformed tables are rejected") {
        CHECK_THROWS_AS(parse(table_with_co("MPC,CO,30,2.0\nMPC,CO,20,3.0\n")), DataError);
        CHECK_THROWS_AS(parse(table_with_co("MPC,CO,30,2.0\nMPC,CO,30,3.0\n")), DataError);
        CHECK_THROWS_AS(parse(table_with_co("MPC,CO,30,-1.0\n")), DataError);
        CHECK_THROWS_AS(parse("speed,factor\n1,2\n"), DataError);
        CHECK_THROWS_AS(parse(std::string(kHeader) + "MPC,CO,5,1\n"), DataError);
        CHECK_THROWS_AS(parse(table_with_co("XYZ,CO,30,1.0\n")), DataError);
        CHECK_THROWS_AS(parse(table_with_co("MPC,CO,thirty,1.0\n")), DataError);
    }

    TEST_CASE("the default table covers every curve on 5 to 130 km/h") {
        const auto& table = EmissionFactorTable::builtin();
        for (auto cat : {EmissionCategory::MPC, EmissionCategory::HDT}) {
            for (auto p : kAllPollutants) {
                const auto& c = table.curve(cat, p);
                REQUIRE(c.size() >= 2);
                CHECK(c.front().speed_kmh == 5.0);
                CHECK(c.back().speed_kmh == 130.0);
                for (std::size_t i = 0; i < c.size(); ++i) {
                    CHECK(c[i].factor_g_per_km >= 0.0);
                    if (i > 0) CHECK(c[i].speed_kmh > c[i - 1].speed_kmh);
                }
            }
        }
        std::istringstream in(EmissionFactorTable::builtin_csv());
        const auto again = EmissionFactorTable::parse(in);
        CHECK(again.factor(EmissionCategory::HDT, Pollutant::PM25, 47.0) ==
              table.factor(EmissionCategory::HDT, Pollutant::PM25, 47.0));
    }

    TEST_CASE("property: splitting a constant-speed segment keeps the totals") {
        oracle::SplitMix rng(41);
        for (int trial = 0; trial < 200; ++trial) {
            const auto cls = rng.uniform() < 0.5 ? VehicleClass::HV : VehicleClass::DT;
            const double speed = rng.uniform(0.0, 140.0);
            const double distance = rng.uniform(0.0, 3000.0);
            const int pieces = 1 + static_cast<int>(rng.uniform() * 50);
            EmissionLedger whole;
            EmissionLedger split;
            accumulate_emissions(cls, distance, speed, 1, whole);
            for (int i = 0; i < pieces; ++i) accumulate_emissions(cls, distance / pieces, speed, 1, split);
            for (auto p : kAllPollutants) {
                CHECK(split.get(p) == doctest::Approx(whole.get(p)).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("property: lane ledgers sum to the total") {
        oracle::SplitMix rng(42);
        EmissionLedger ledger;
        PollutantArray sum{};
        for (int i = 0; i < 5000; ++i) {
            const auto cls = rng.uniform() < 0.8 ? VehicleClass::HV : VehicleClass::DT;
            accumulate_emissions(cls, rng.uniform(0.0, 4.0), rng.uniform(0.0, 130.0), static_cast<int>(rng.uniform() * 4), ledger);
        }
        for (const auto& [lane, grams] : ledger.by_lane) {
            for (std::size_t p = 0; p < 4; ++p) sum[p] += grams[p];
        }
        const auto total = ledger.total();
        for (std::size_t p = 0; p < 4; ++p) CHECK(std::abs(sum[p] - total[p]) <= 1e-9);
    }
}
