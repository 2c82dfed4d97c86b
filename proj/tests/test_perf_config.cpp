#include "approx.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "msiph/config.hpp"
#include "msiph/errors.hpp"
#include "msiph/perf_model.hpp"

using namespace msiph;

TEST_SUITE("perf") {
    TEST_CASE("throughput is M^2 MACs per cycle") {
        for (int M : {8, 16, 32, 64, 128, 256}) {
            PerfReport r = perf_report(M);
            CHECK(r.tmacs == rel(M * M * 2e9 / 1e12));
            CHECK(r.tops == rel(2 * r.tmacs));
            CHECK(r.density_tmacs_per_mm2 == rel(r.tmacs / r.area_mm2));
            REQUIRE(r.energy_fj_per_mac.has_value());
            CHECK(*r.energy_fj_per_mac == rel(r.soc_w / (r.tmacs * 1e12) * 1e15));
        }
    }

    TEST_CASE("power adds up") {
        BlockBudget b;
        PowerBreakdown p = total_power(32, b);
        CHECK(p.soc == rel(p.laser + p.heater + p.electronics));
        CHECK(p.heater == rel(heater_power(32, b)));
        CHECK(heater_power(32, b) == rel(0.156));
        CHECK(p.laser == rel(laser_total_power(32, b.dr_oe)));
        CHECK(total_area(32, b) == rel(total_area_um2(32, b) * 1e-6));
    }

    TEST_CASE("reference rows within tolerance") {
        for (const auto& ref : reference_table()) {
            PerfReport r = perf_report(ref.M);
            CAPTURE(ref.M);
            CHECK(r.soc_w * 1e3 == rel(ref.soc_mw, 0.01));
            CHECK(r.area_mm2 == rel(ref.area_mm2, 0.01));
            CHECK(r.laser_w * 1e3 == rel(ref.laser_mw, 0.01));
            CHECK(r.heater_w * 1e3 == rel(ref.heater_mw, 0.01));
        }
    }

    TEST_CASE("overhead fit recovers the default") {
        CHECK(fit_digital_overhead() == rel(BlockBudget{}.digital_overhead_per_row_w, 1e-3));
    }

    TEST_CASE("budget scaling") {
        BlockBudget b;
        b.clock_hz = 1e9;
        CHECK(perf_report(32, b).tmacs == rel(perf_report(32).tmacs / 2));
        BlockBudget c;
        c.r2r_dac_w *= 2;
        CHECK(total_power(32, c).electronics > total_power(32).electronics);
        CHECK(perf_report(64).area_mm2 > 3 * perf_report(32).area_mm2);
    }

    TEST_CASE("table export") {
        PerfTable t = perf_table({16, 32});
        std::string csv = perf_csv(t);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
        CHECK(csv.find("tpuv4") != std::string::npos);
        auto header_cols = std::count(csv.begin(), csv.begin() + csv.find('\n'), ',');
        size_t start = 0;
        for (int line = 0; line < 4; ++line) {
            size_t end = csv.find('\n', start);
            CHECK(std::count(csv.begin() + start, csv.begin() + end, ',') == header_cols);
            start = end + 1;
        }
    }
}

TEST_SUITE("config") {
    TEST_CASE("defaults resolve") {
        ExperimentConfig c;
        CHECK(c.seed() == 1);
        CHECK(c.planner().M == 32);
        CHECK(c.get_ints("mimo.k").size() == 8);
        CHECK(c.get("device.g_m_ind") == "auto");
        CHECK(c.devices(32, 4).analog.g_m_ind == 0.0);
        std::string r = c.resolved();
        CHECK(r.rfind("device.", 0) == 0);
        CHECK(std::is_sorted(ExperimentConfig::defaults().begin(), ExperimentConfig::defaults().end()));
    }

    TEST_CASE("unknown keys are rejected with a location") {
        ExperimentConfig c;
        try {
            c.load_text("seed = 3\n\nplanner.N = 4\n", "exp.cfg");
            FAIL("accepted an unknown key");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("exp.cfg:3") != std::string::npos);
            CHECK(std::string(e.what()).find("planner.N") != std::string::npos);
        }
        CHECK_THROWS_AS(c.set("nope", "1"), ConfigError);
        CHECK_THROWS_AS(c.load_text("seed 3\n"), ConfigError);
    }

    TEST_CASE("values and comments") {
        ExperimentConfig c;
        c.load_text("# comment\nseed = 9  # trailing\nplanner.delta_lambda = 1.0\ninvert.requantize = false\n"
                    "mimo.snr_db = 0, 5,10\n");
        CHECK(c.seed() == 9);
        CHECK(c.planner().delta_lambda_target == 1.0);
        CHECK_FALSE(c.neumann().requantize);
        CHECK(c.get_doubles("mimo.snr_db") == std::vector<double>{0, 5, 10});
        CHECK(c.mimo_sweep().seed == 9);
        c.set("planner.M", "many");
        CHECK_THROWS_AS(c.planner(), ConfigError);
        c.set("invert.requantize", "maybe");
        CHECK_THROWS_AS(c.get_bool("invert.requantize"), ConfigError);
    }

    TEST_CASE("typed sections") {
        ExperimentConfig c;
        c.set("invert.fidelity", "device");
        CHECK(c.neumann().fidelity == FidelityMode::DEVICE);
        c.set("mimo.fidelity", "float,full");
        auto s = c.mimo_sweep();
        REQUIRE(s.fidelities.size() == 2);
        CHECK_FALSE(s.fidelities[0].has_value());
        CHECK(s.fidelities[1] == FidelityMode::FULL);
        c.set("device.g_m_ind", "0.03");
        CHECK(c.devices(8, 4).analog.g_m_ind == 0.03);
        EngineConfig e = c.engine(8, 4);
        CHECK(e.plan.M() == 8);
        CHECK(e.mma_plan.has_value());
        c.set("perf.r2r_dac_w", "1e-6");
        CHECK(c.budget().r2r_dac_w == 1e-6);
    }

    TEST_CASE("file loading") {
        const char* path = "msiph_test_cfg.tmp";
        {
            std::ofstream f(path);
            f << "seed = 5\n";
        }
        ExperimentConfig c;
        c.load_file(path);
        CHECK(c.seed() == 5);
        std::remove(path);
        CHECK_THROWS_AS(c.load_file("/nonexistent/x.cfg"), IoError);
    }
}
