#include "approx.hpp"

#include <cmath>
#include <numeric>

#include "msiph/device_models.hpp"
#include "msiph/errors.hpp"

using namespace msiph;

namespace {

// Gauss-Seidel relaxation on the terminated ladder: node p has 2R to its bit
// driver, R to each neighbour, and node 0 an extra 2R to ground.
std::vector<double> ladder_relax(int L, double V, double R, unsigned code) {
    std::vector<double> v(L, 0.0);
    for (int it = 0; it < 20000; ++it) {
        double delta = 0.0;
        for (int p = 0; p < L; ++p) {
            double g = 0.5 / R, i = ((code >> p) & 1u) ? 0.5 / R * V : 0.0;
            if (p == 0) g += 0.5 / R;
            if (p > 0) g += 1.0 / R, i += v[p - 1] / R;
            if (p + 1 < L) g += 1.0 / R, i += v[p + 1] / R;
            double nv = i / g;
            delta = std::max(delta, std::abs(nv - v[p]));
            v[p] = nv;
        }
        if (delta < 1e-15) break;
    }
    return v;
}

double ladder_supply_power(int L, double V, double R, unsigned code) {
    auto v = ladder_relax(L, V, R, code);
    double p = 0.0;
    for (int k = 0; k < L; ++k)
        if ((code >> k) & 1u) p += V * (V - v[k]) / (2 * R);
    return p;
}

}  // namespace

TEST_SUITE("devices") {
    TEST_CASE("R-2R ladder against a relaxation solver") {
        for (int L : {2, 3, 4, 5}) {
            R2rDacModel d;
            d.L = L;
            double avg = 0.0;
            for (unsigned code = 0; code < (1u << L); ++code) {
                auto v = ladder_relax(L, d.V_ddh, d.R_u, code);
                CHECK(r2r_output_voltage(d, code) == rel(v[L - 1], 1e-9));
                // binary-weighted output
                CHECK(r2r_output_voltage(d, code) == rel(d.V_ddh * code / (1u << L), 1e-9));
                double p = ladder_supply_power(L, d.V_ddh, d.R_u, code);
                CHECK(r2r_code_power(d, code) == rel(p, 1e-9));
                avg += p;
            }
            avg /= (1u << L);
            CHECK(r2r_dac_static_power(d) == rel(avg, 1e-9));
            CHECK(r2r_closed_form_power(d) == rel(avg, 1e-9));
        }
    }

    TEST_CASE("HS-DAC divider power") {
        // tap at x = (k-1)/(n-1) of a string R_hs: V^2/R * x(1-x), averaged over n codes
        HsDacModel d;
        const int n = 16;
        double s = 0.0;
        for (int k = 1; k < n; ++k) {
            double x = (k - 1.0) / (n - 1.0);
            s += d.V_ddh * d.V_ddh / d.R_hs * x * (1 - x);
        }
        CHECK(hs_dac_static_power(d) == rel(s / n, 1e-12));
        CHECK(hs_dac_static_power(d) == rel(0.448e-3, 1e-9));
        CHECK(hs_dac_static_power_printed(d) == rel(0.896e-3, 1e-9));
        HsDacModel half = d;
        half.R_hs *= 2;
        CHECK(hs_dac_static_power(half) == rel(hs_dac_static_power(d) / 2));
    }

    TEST_CASE("HS-DAC settling at the default load") {
        HsDacModel d;
        CHECK(d.tau() == rel(60e-12));
        CHECK(d.settling_residual() == rel(std::exp(-200.0 / 60.0)));
        CHECK_FALSE(d.settles());
        d.R_hs = 1000;
        CHECK(d.settles());
    }

    TEST_CASE("ring notch shape") {
        MrmModel m;
        CHECK(mrm_transmission(m, 1550.0, 0.0) == rel(m.extinction_floor));
        CHECK(mrm_transmission(m, 1560.0, 0.0) > 0.99);
        // half depth at half the linewidth
        const double hw = 1550.0 / (2 * m.Q);
        CHECK(mrm_transmission(m, 1550.0 + hw, 0.0) == rel(0.5 + m.extinction_floor / 2));
        // drive red-shifts the notch
        CHECK(mrm_transmission(m, 1550.0 + m.shift_rate * 2.0, 2.0) == rel(m.extinction_floor));
        double prev = 0.0;
        for (double v = 0.0; v <= 2.4; v += 0.1) {
            double t = mrm_transmission(m, 1550.0, v);
            CHECK(t >= prev);
            prev = t;
        }
    }

    TEST_CASE("INL and DNL of simple curves") {
        auto [inl, dnl] = inl_dnl({0, 1, 2, 3});
        for (double x : inl) CHECK(x == rel(0.0));
        for (double x : dnl) CHECK(x == rel(0.0));
        auto [inl2, dnl2] = inl_dnl({0, 1.5, 2, 3});
        CHECK(inl2[1] == rel(0.5));
        CHECK(dnl2[0] == rel(0.5));
        CHECK(dnl2[1] == rel(-0.5));
        CHECK_THROWS_AS(inl_dnl({1, 1, 1}), CalibrationFailure);
    }

    TEST_CASE("level selection") {
        std::vector<double> lin(32);
        std::iota(lin.begin(), lin.end(), 0.0);
        EoCalibrationTable t = calibrate_levels(lin, 4);
        CHECK(t.code_map.size() == 16);
        CHECK(t.code_map[0] == 0);
        CHECK(t.max_inl() == rel(0.0));
        // ties go to the larger span: step 2 spans 30 of 31
        CHECK(t.code_map.back() == 30);
        // a curve with a cliff cannot be linearized
        std::vector<double> cliff{0, 0.9, 0.95, 1.0, 1.05, 1.1};
        CHECK_THROWS_AS(calibrate_levels(cliff, 2), CalibrationFailure);
        EoCalibrationTable loose = calibrate_levels(cliff, 2, false);
        CHECK(loose.max_inl() > 0.5);
    }

    TEST_CASE("E/O calibration properties across wavelengths") {
        MrmModel m;
        auto levels = uniform_levels(32, 2.4);
        for (double lam : {1534.5, 1540.0, 1545.0, 1550.0}) {
            m.lambda_res_at_zero = lam;
            EoCalibrationTable t = calibrate_eo(m, levels, lam);
            CHECK(t.max_inl() <= 0.5);
            CHECK(t.max_dnl() <= 0.5);
            CHECK(t.raw_max_inl() > 0.5);
            for (size_t k = 1; k < t.code_map.size(); ++k) {
                CHECK(t.code_map[k] > t.code_map[k - 1]);
                CHECK(t.gains[k] > t.gains[k - 1]);
            }
        }
    }

    TEST_CASE("racetrack weighting") {
        MaterialModel mat = default_material();
        RtrPdModel pd;
        std::vector<double> lams{1540.0, 1545.0, 1550.0};
        pd.weight_ref = rtr_weight_ref(lams, mat.n_g);
        CHECK(pd.absorption() == rel(std::pow(10.0, -0.25)));
        std::vector<std::pair<double, double>> ch;
        for (double l : lams) ch.push_back({l, 1e-3});
        // equal powers average to exactly the weight reference
        CHECK(rtr_absorbed_power(pd, ch, mat.n_g) == rel(3e-3 * pd.absorption()));
        CHECK(rtr_photocurrent(pd, 1e-3) == rel(0.5e-3));
        RtrPdModel unset;
        CHECK_THROWS_AS(rtr_absorbed_power(unset, ch, mat.n_g), ConfigError);
    }

    TEST_CASE("TIA and noise") {
        AnalogChainModel c;
        CHECK(c.R_tia() == rel(1.0 / (1.0 / 1650 + 1e-3), 1e-9));
        TiaResponse t = tia_response(c);
        CHECK(t.bandwidth_hz == rel(8.52e9, 0.001));
        CHECK(t.dc_transimpedance == rel(1e-3 * 1650 * c.R_tia()));
        CHECK(noise_power_at_adc(c, 335e-6) == rel(11e-6, 1e-6));
        NoiseTerms n = noise_terms_at_adc(c, 335e-6);
        CHECK(n.total() == rel(noise_power_at_adc(c, 335e-6)));
        CHECK(n.shot > 0);
        CHECK(n.tia > 0);
        CHECK(n.amp > 0);
        // shot noise grows with current
        CHECK(noise_terms_at_adc(c, 670e-6).shot == rel(2 * n.shot));
        CHECK(quantization_margin_db(c, AdcModel{}, 335e-6) == rel(15.3, 0.01));
        AnalogChainModel fixed = c;
        fixed.g_m_ind = 2 * c.resolved_g_m_ind();
        CHECK(noise_terms_at_adc(fixed, 335e-6).amp > n.amp);
        CHECK(noise_terms_at_adc(fixed, 335e-6).shot == rel(n.shot));
    }

    TEST_CASE("ADC") {
        AdcModel a;
        CHECK(a.max_code() == 15);
        CHECK(a.comparator_count() == 15);
        CHECK(a.quantization_noise() == rel(a.lsb() * a.lsb() / 12));
        CHECK(adc_quantize(a, -1.0) == 0);
        CHECK(adc_quantize(a, 5.0) == 15);
        CHECK(adc_quantize(a, 0.49 * a.lsb()) == 0);
        CHECK(adc_quantize(a, 0.51 * a.lsb()) == 1);
        int prev = 0;
        for (double v = 0.0; v <= 1.0; v += 0.001) {
            int c = adc_quantize(a, v);
            CHECK(c >= prev);
            CHECK(c <= prev + 1);
            prev = c;
        }
    }

    TEST_CASE("splitter and laser") {
        SplitterModel s = SplitterModel::for_rows(32);
        CHECK(s.stages == 5);
        CHECK(s.outputs() == 32);
        CHECK(s.excess() == rel(std::pow(10.0, -0.035)));
        CHECK(laser_power_per_wavelength(32, 670e-6) == rel(4.08e-3, 0.01));
        CHECK(laser_total_power(32, 670e-6) == rel(32 * laser_power_per_wavelength(32, 670e-6)));
        CHECK(laser_total_power(64, 670e-6) > 2 * laser_total_power(32, 670e-6));
    }
}
