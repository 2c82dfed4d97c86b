#include "approx.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "msiph/errors.hpp"
#include "msiph/material.hpp"
#include "msiph/wdm_planner.hpp"

using namespace msiph;

namespace {

const MaterialModel& mat() {
    static const MaterialModel m = default_material();
    return m;
}

// central-difference group index from n_eff
double group_index_numeric(double lam) {
    const double h = 0.25;
    const double d = (mat().n_eff(lam + h) - mat().n_eff(lam - h)) / (2 * h);
    return mat().n_eff(lam) - lam * d;
}

}  // namespace

TEST_SUITE("material") {
    TEST_CASE("anchor values") {
        CHECK(mat().n_eff(1550.0) == rel(3.7312, 1e-12));
        CHECK(mat().n_g(1550.0) == rel(4.98, 1e-12));
        CHECK(mat().n_g(1519.0) == rel(5.06, 1e-9));
        CHECK(mat().domain_lo() <= 1180.0);
        CHECK(mat().domain_hi() >= 1600.0);
    }

    TEST_CASE("n_g matches the slope of n_eff") {
        CHECK(group_index_mismatch(mat()) < 1e-4);
        for (double lam = 1200.0; lam <= 1590.0; lam += 37.0)
            CHECK(group_index_numeric(lam) == rel(mat().n_g(lam), 1e-4));
    }

    TEST_CASE("n_eff decreases with wavelength, n_g > n_eff") {
        double prev = mat().n_eff(1180.0);
        for (double lam = 1190.0; lam <= 1600.0; lam += 10.0) {
            CHECK(mat().n_eff(lam) < prev);
            CHECK(mat().n_g(lam) > mat().n_eff(lam));
            prev = mat().n_eff(lam);
        }
    }

    TEST_CASE("outside the domain") {
        CHECK_THROWS_AS(mat().n_eff(1100.0), DomainExceeded);
        CHECK_THROWS_AS(mat().n_g(1700.0), DomainExceeded);
        PiecewiseLinear p({{0.0, 0.0}, {1.0, 2.0}});
        CHECK(p(0.25) == rel(0.5));
        CHECK(p.covers(0.0, 1.0));
        CHECK_FALSE(p.covers(-0.1, 1.0));
    }
}

TEST_SUITE("planner") {
    TEST_CASE("resonance fixed point") {
        const double L = 951.3;
        const long m = 2300;
        double lam = solve_resonance(mat(), L, m, 1540.0);
        CHECK(lam * m == rel(mat().n_eff(lam) * L * 1e3, 1e-10));
    }

    TEST_CASE("plan properties over M and spacing") {
        for (int M : {4, 8, 16, 32, 64}) {
            for (double dl : {0.4, 0.5, 0.8, 1.0}) {
                CAPTURE(M);
                CAPTURE(dl);
                PlannerConfig pc;
                pc.M = M;
                pc.delta_lambda_target = dl;
                WdmPlan p = plan_all(pc, mat());
                REQUIRE(p.M() == M);
                // top channel sits on lambda_max
                CHECK(p.lambdas.back() == rel(1550.0, 1e-9));
                for (int j = 0; j < M; ++j) {
                    // every channel resonates in the racetrack
                    double res = std::abs(p.lambdas[j] * p.rtr_modes[j] - mat().n_eff(p.lambdas[j]) * p.L_rtr * 1e3) /
                                 p.rtr_modes[j];
                    CHECK(res < 1e-6);
                    // and in its ring
                    double ring = 2 * std::numbers::pi * p.mrm_radii[j] * 1e3 * mat().n_eff(p.lambdas[j]) /
                                  p.mrm_modes[j];
                    CHECK(ring == rel(p.lambdas[j], 1e-9));
                    // ring FSR exceeds the comb span
                    double fsr = p.lambdas[j] * p.lambdas[j] /
                                 (mat().n_g(p.lambdas[j]) * 2 * std::numbers::pi * p.mrm_radii[j] * 1e3);
                    CHECK(fsr > (M - 1) * dl * 0.98);
                    CHECK(p.mrm_radii[j] <= p.fsr_bound_radius + 1e-12);
                    if (j > 0) {
                        CHECK(p.lambdas[j] > p.lambdas[j - 1]);
                        CHECK(p.rtr_modes[j] == p.rtr_modes[j - 1] - 1);
                    }
                }
                CHECK(p.span() / M == rel(dl, 0.01));
                for (double s : p.spacings) CHECK(s == rel(dl, 0.08));
                PlanReport r = validate_plan(p, mat());
                CHECK(r.ok());
                CHECK(r.max_fsr_spacing_dev < 0.01);
            }
        }
    }

    TEST_CASE("local FSR agrees with spacing") {
        PlannerConfig pc;
        WdmPlan p = plan_all(pc, mat());
        for (int j = 0; j + 1 < p.M(); ++j) {
            double lam = p.lambdas[j];
            double fsr = lam * lam / (mat().n_g(lam) * p.L_rtr * 1e3);
            CHECK(p.lambdas[j + 1] - lam == rel(fsr, 0.01));
        }
    }

    TEST_CASE("interleaved comb sits between base channels") {
        PlannerConfig pc;
        WdmPlan p = plan_all(pc, mat());
        WdmPlan q = plan_mma_spectrum(p, mat());
        CHECK(q.L_rtr == rel(2 * p.L_rtr));
        for (int j = 0; j < p.M(); ++j) {
            CHECK(q.rtr_modes[j] == 2 * p.rtr_modes[j] - 1);
            CHECK(q.lambdas[j] > p.lambdas[j]);
            if (j + 1 < p.M()) CHECK(q.lambdas[j] < p.lambdas[j + 1]);
            // base channels also resonate in the doubled cavity at mode 2m
            double base = std::abs(p.lambdas[j] * 2 * p.rtr_modes[j] - mat().n_eff(p.lambdas[j]) * q.L_rtr * 1e3);
            CHECK(base / (2 * p.rtr_modes[j]) < 1e-6);
        }
    }

    TEST_CASE("error scale ratio") {
        PlannerConfig a, b;
        b.delta_lambda_target = 1.0;
        WdmPlan pa = plan_all(a, mat()), pb = plan_all(b, mat());
        CHECK(error_scale(pa, pa) == rel(1.0));
        auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
        CHECK(error_scale(pb, pa) == rel(mean(pa.mrm_radii) / mean(pb.mrm_radii)));
        CHECK(error_scale(pb, pa) == rel(2.0, 0.03));
    }

    TEST_CASE("infeasible configurations") {
        PlannerConfig pc;
        pc.M = 0;
        CHECK_THROWS_AS(plan_all(pc, mat()), ConfigError);
        pc.M = 2048;  // span leaves the material domain
        CHECK_THROWS(plan_all(pc, mat()));
        pc = PlannerConfig{};
        pc.delta_lambda_target = -1;
        CHECK_THROWS_AS(plan_all(pc, mat()), ConfigError);
    }

    TEST_CASE("export has one line per channel") {
        PlannerConfig pc;
        pc.M = 4;
        std::string s = export_plan(plan_all(pc, mat()));
        CHECK(std::count(s.begin(), s.end(), '\n') == 4);
        CHECK(s.find("channel=3") != std::string::npos);
    }
}
