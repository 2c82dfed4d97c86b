#include "msiph/acceptance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "msiph/config.hpp"
#include "msiph/device_models.hpp"
#include "msiph/errors.hpp"
#include "msiph/linalg_pipeline.hpp"
#include "msiph/mimo_bench.hpp"
#include "msiph/mvm_engine.hpp"
#include "msiph/perf_model.hpp"
#include "msiph/wdm_planner.hpp"

namespace msiph {

bool CriterionResult::checks_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const SubCheck& c) { return c.pass; });
}

bool CriterionResult::pass(bool enforce_runtime) const {
    if (!checks_pass()) return false;
    return !enforce_runtime || runtime_limit_s <= 0 || elapsed_s < runtime_limit_s;
}

namespace {

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

bool within_rel(double v, double ref, double tol) { return std::abs(v - ref) <= tol * std::abs(ref); }

SubCheck rel_check(const std::string& name, double v, double ref, double tol, const std::string& unit = "") {
    SubCheck c;
    c.name = name;
    c.pass = within_rel(v, ref, tol);
    c.detail = fmt(v) + unit + " vs " + fmt(ref) + unit + " (tol " + fmt(tol * 100, 3) + "%)";
    return c;
}

SubCheck bool_check(const std::string& name, bool ok, const std::string& detail) { return {name, ok, detail}; }

template <typename F>
CriterionResult timed(int id, const std::string& title, double limit, F&& body) {
    CriterionResult r;
    r.id = id;
    r.title = title;
    r.runtime_limit_s = limit;
    auto t0 = std::chrono::steady_clock::now();
    body(r.checks);
    r.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

struct PlanRow {
    int M;
    double dl;
    double L_rtr;
    double r_lo, r_hi;
    std::set<long> mrm_modes;
    long mode_lo, mode_hi;
};

void criterion_plan(std::vector<SubCheck>& out) {
    const MaterialModel mat = default_material();
    const PlanRow rows[] = {{32, 0.5, 951.32, 4.63, 4.76, {71, 72}, 2290, 2321},
                              {32, 1.0, 469.01, 2.25, 2.38, {35, 36}, 1129, 1160},
                              {16, 1.0, 475.66, 4.63, 4.76, {71, 72}, 1145, 1160}};
    for (const auto& t : rows) {
        PlannerConfig pc;
        pc.M = t.M;
        pc.delta_lambda_target = t.dl;
        WdmPlan p = plan_all(pc, mat);
        const std::string tag = "M=" + std::to_string(t.M) + " dl=" + fmt(t.dl) + " ";
        out.push_back(rel_check(tag + "L_rtr", p.L_rtr, t.L_rtr, 0.01, " um"));
        auto [rlo, rhi] = std::minmax_element(p.mrm_radii.begin(), p.mrm_radii.end());
        out.push_back(rel_check(tag + "min radius", *rlo, t.r_lo, 0.02, " um"));
        out.push_back(rel_check(tag + "max radius", *rhi, t.r_hi, 0.02, " um"));
        std::set<long> ms(p.mrm_modes.begin(), p.mrm_modes.end());
        bool in_set = std::all_of(ms.begin(), ms.end(), [&](long m) { return t.mrm_modes.count(m) > 0; });
        std::string got;
        for (long m : ms) got += std::to_string(m) + " ";
        out.push_back(bool_check(tag + "ring modes", in_set, "modes {" + got + "}"));
        bool consecutive = true;
        for (size_t j = 1; j < p.rtr_modes.size(); ++j) consecutive &= p.rtr_modes[j] == p.rtr_modes[j - 1] - 1;
        long hi = p.rtr_modes.front(), lo = p.rtr_modes.back();
        bool span_ok = consecutive && hi - lo == t.M - 1;
        bool ends_ok = std::abs(lo - t.mode_lo) <= 1 && std::abs(hi - t.mode_hi) <= 1;
        out.push_back(bool_check(tag + "racetrack modes", span_ok && ends_ok,
                                 std::to_string(hi) + ".." + std::to_string(lo) + " vs " +
                                     std::to_string(t.mode_hi) + ".." + std::to_string(t.mode_lo) +
                                     (consecutive ? ", consecutive" : ", gaps")));
    }
}

void criterion_projection(std::vector<SubCheck>& out) {
    const BlockBudget b;
    for (const auto& ref : reference_table()) {
        PerfReport r = perf_report(ref.M, b);
        const std::string tag = "M=" + std::to_string(ref.M) + " ";
        out.push_back(rel_check(tag + "laser", r.laser_w * 1e3, ref.laser_mw, 0.01, " mW"));
        out.push_back(rel_check(tag + "heater", r.heater_w * 1e3, ref.heater_mw, 0.01, " mW"));
        out.push_back(rel_check(tag + "SoC power", r.soc_w * 1e3, ref.soc_mw, 0.01, " mW"));
        out.push_back(rel_check(tag + "area", r.area_mm2, ref.area_mm2, 0.01, " mm2"));
        out.push_back(rel_check(tag + "TMAC/s", r.tmacs, ref.tmacs, 1e-12));
        out.push_back(rel_check(tag + "density", r.density_tmacs_per_mm2, ref.density, 0.015));
        out.push_back(rel_check(tag + "energy", r.energy_fj_per_mac.value_or(0.0), ref.energy_fj, 0.015, " fJ/MAC"));
    }
}

void criterion_blocks(std::vector<SubCheck>& out) {
    HsDacModel hs;
    out.push_back(rel_check("HS-DAC static power", hs_dac_static_power(hs) * 1e3, 0.448, 0.02, " mW"));

    R2rDacModel r2r;
    const double p_nodal = r2r_dac_static_power(r2r);
    out.push_back(rel_check("R2R-DAC static power", p_nodal * 1e6, 7.2, 0.10, " uW"));
    for (int L = 2; L <= 4; ++L) {
        R2rDacModel d;
        d.L = L;
        out.push_back(rel_check("R2R nodal vs closed form L=" + std::to_string(L), r2r_dac_static_power(d) * 1e6,
                                r2r_closed_form_power(d) * 1e6, 0.10, " uW"));
    }

    AnalogChainModel an;
    TiaResponse t = tia_response(an);
    out.push_back(rel_check("TIA output resistance", an.R_tia(), 622.6, 0.001, " ohm"));
    out.push_back(rel_check("TIA bandwidth", t.bandwidth_hz * 1e-9, 8.52, 0.01, " GHz"));
    const double noise = noise_power_at_adc(an, 335e-6);
    out.push_back(bool_check("ADC-input noise", noise >= 7e-6 && noise <= 17e-6,
                             fmt(noise * 1e6) + " uW in [7, 17] uW (g_m,ind " + fmt(an.resolved_g_m_ind() * 1e3, 4) +
                                 " mA/V)"));
    const double margin = quantization_margin_db(an, AdcModel{}, 335e-6);
    out.push_back(bool_check("quantization margin", std::abs(margin - 15.3) <= 1.5,
                             fmt(margin, 4) + " dB vs 15.3 dB (tol 1.5 dB)"));

    out.push_back(rel_check("laser power per wavelength M=32", laser_power_per_wavelength(32, 670e-6) * 1e3, 4.08,
                            0.01, " mW"));
    const double t32 = laser_total_power(32, 670e-6) * 1e3, t16 = laser_total_power(16, 670e-6) * 1e3;
    out.push_back(bool_check("laser total M=32", std::abs(t32 - 130.6) <= 0.2 && std::abs(t32 - 130.7) <= 0.2,
                             fmt(t32) + " mW vs 130.6 / 130.7 mW (tol 0.2 mW)"));
    out.push_back(bool_check("laser total M=16", std::abs(t16 - 64.3) <= 0.2, fmt(t16) + " mW vs 64.3 mW (tol 0.2 mW)"));
    const double h32 = heater_power(32) * 1e3;
    out.push_back(bool_check("heater M=32", std::abs(h32 - 156.0) < 1e-9, fmt(h32, 10) + " mW vs 156 mW"));
}

void criterion_eo(std::vector<SubCheck>& out) {
    EngineConfig cfg = make_engine_config(32);
    const int levels = 2 << cfg.L;
    std::vector<double> hs = uniform_levels(levels, cfg.devices.hs_dac.V_ddh);
    double raw_min = 1e9, cal_inl = 0.0, cal_dnl = 0.0;
    bool ok = true;
    std::string failure;
    for (double lam : cfg.plan.lambdas) {
        MrmModel m = cfg.devices.mrm;
        m.lambda_res_at_zero = lam;
        try {
            EoCalibrationTable t = calibrate_eo(m, hs, lam, false);
            raw_min = std::min(raw_min, t.raw_max_inl());
            cal_inl = std::max(cal_inl, t.max_inl());
            cal_dnl = std::max(cal_dnl, t.max_dnl());
        } catch (const std::exception& e) {
            ok = false;
            failure = e.what();
        }
    }
    out.push_back(bool_check("raw 16-level map nonlinear", ok && raw_min > 0.5,
                             "smallest raw max|INL| over 32 wavelengths " + fmt(raw_min, 4) + " LSB > 0.5" + failure));
    out.push_back(bool_check("calibrated max|INL|", ok && cal_inl <= 0.5, fmt(cal_inl, 4) + " LSB <= 0.5"));
    out.push_back(bool_check("calibrated max|DNL|", ok && cal_dnl <= 0.5, fmt(cal_dnl, 4) + " LSB <= 0.5"));
}

void criterion_engine(std::vector<SubCheck>& out, std::uint64_t seed) {
    {
        MvmEngine eng(make_engine_config(2, 2, seed));
        long mismatches = 0, cases = 0;
        QuantizedMatrix a(2, 2, 2);
        QuantizedVector y{std::vector<int>(2), 1.0, 2};
        for (int code = 0; code < 4096; ++code) {
            int c = code;
            for (int k = 0; k < 4; ++k, c >>= 2) a.codes[k] = c & 3;
            for (int k = 0; k < 2; ++k, c >>= 2) y.codes[k] = c & 3;
            QuantizedVector g = golden_mvm(a, y);
            MvmResult r = eng.run_mvm(FidelityMode::IDEAL, a, y);
            mismatches += r.out.codes != g.codes;
            ++cases;
        }
        out.push_back(bool_check("IDEAL vs golden, exhaustive M=2 L=2", mismatches == 0 && cases == 4096,
                                 std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches"));
    }
    {
        MvmEngine eng(make_engine_config(32, 4, seed));
        eng.calibrate();
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> pick(0, 15);
        QuantizedMatrix a(32, 32, 4);
        QuantizedVector y{std::vector<int>(32), 1.0, 4};
        const int trials = 10000;
        long good_trials = 0, good_outputs = 0, outputs = 0;
        int worst = 0;
        for (int t = 0; t < trials; ++t) {
            for (auto& c : a.codes) c = pick(rng);
            for (auto& c : y.codes) c = pick(rng);
            MvmResult r = eng.run_mvm(FidelityMode::DEVICE, a, y);
            bool ok = true;
            for (const auto& d : r.rows) {
                worst = std::max(worst, std::abs(d.error));
                ok &= std::abs(d.error) <= 1;
                good_outputs += std::abs(d.error) <= 1;
                ++outputs;
            }
            good_trials += ok;
        }
        const double frac = static_cast<double>(good_trials) / trials;
        out.push_back(bool_check("DEVICE within 1 LSB, 1e4 random M=32 trials", frac >= 0.99,
                                 fmt(frac * 100, 6) + "% of trials with every row within 1 LSB (" +
                                     fmt(100.0 * good_outputs / outputs, 6) + "% of outputs, worst " +
                                     std::to_string(worst) + " LSB)"));
    }
}

Eigen::MatrixXd random_dominant(int M, std::mt19937_64& rng) {
    // Real Gram matrix of a tall Gaussian matrix: nearly diagonal, rho(D^-1 E) < 1
    std::normal_distribution<double> nd;
    Eigen::MatrixXd H(8 * M, M);
    for (int i = 0; i < H.rows(); ++i)
        for (int j = 0; j < M; ++j) H(i, j) = nd(rng);
    return H.transpose() * H;
}

void criterion_neumann(std::vector<SubCheck>& out, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x6e65756du);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd z = random_dominant(8, rng);
        NeumannConfig nc;
        nc.k_max = 6;
        NeumannRun run = neumann_invert(nc, z);
        for (int k = 1; k <= 6; ++k) {
            Eigen::MatrixXd s = neumann_series(z, k);
            worst = std::max(worst, (run.iterates[k] - s).norm() / s.norm());
        }
    }
    out.push_back(bool_check("recurrence equals direct series, M=8, k<=6", worst <= 1e-12,
                             "max relative Frobenius difference " + fmt(worst, 3)));

    Eigen::Matrix2d z2;
    z2 << 2, 0.5, 0.5, 2;
    NeumannConfig nc2;
    nc2.k_max = 2;
    NeumannRun r2 = neumann_invert(nc2, Eigen::MatrixXd(z2));
    Eigen::Matrix2d expect;
    expect << 0.5, -0.125, -0.125, 0.5;
    out.push_back(bool_check("2x2 hand example Y[2]", r2.iterates[2] == Eigen::MatrixXd(expect),
                             "Y[2] = [[" + fmt(r2.iterates[2](0, 0)) + ", " + fmt(r2.iterates[2](0, 1)) + "], [" +
                                 fmt(r2.iterates[2](1, 0)) + ", " + fmt(r2.iterates[2](1, 1)) + "]]"));

    int geometric = 0;
    const int cases = 20;
    double worst_rate = 0.0;
    for (int trial = 0; trial < cases; ++trial) {
        Eigen::MatrixXd z = random_dominant(8, rng);
        Eigen::MatrixXd A = -(z.diagonal().cwiseInverse().asDiagonal() * (z - Eigen::MatrixXd(z.diagonal().asDiagonal())));
        double rho = A.eigenvalues().cwiseAbs().maxCoeff();
        if (rho >= 1.0) continue;
        NeumannConfig nc;
        nc.k_max = 10;
        NeumannRun run = neumann_invert(nc, z);
        // log-linear fit of residual over k = 1..k_max
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int n = nc.k_max;
        for (int k = 1; k <= n; ++k) {
            double ly = std::log(run.residuals[k]);
            sx += k;
            sy += ly;
            sxx += k * k;
            sxy += k * ly;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double icpt = (sy - slope * sx) / n;
        const double rate = std::exp(slope);
        bool bounded = true, decreasing = true;
        for (int k = 1; k <= n; ++k) {
            // residual within a constant factor of the fitted geometric envelope
            bounded &= run.residuals[k] <= 3.0 * std::exp(icpt) * std::pow(rate, k);
            if (k <= 5) decreasing &= run.residuals[k] < run.residuals[k - 1];
        }
        worst_rate = std::max(worst_rate, rate);
        geometric += rate < 1.0 && bounded && decreasing;
    }
    out.push_back(bool_check("residual decays geometrically when rho < 1", geometric == cases,
                             std::to_string(geometric) + "/" + std::to_string(cases) +
                                 " matrices, slowest fitted rate " + fmt(worst_rate, 4)));
}

void criterion_mimo(std::vector<SubCheck>& out, std::uint64_t seed) {
    {
        MimoConfig mc;
        mc.seed = seed;
        std::mt19937_64 rng(seed ^ 0x6d696d6fu);
        int below = 0;
        for (int t = 0; t < 1000; ++t) {
            for (;;) {
                ChannelRealization c = generate_instance(mc, rng);
                try {
                    below += spectral_radius(gram_decompose(c.H)) < 1.0;
                    break;
                } catch (const RankDeficient&) {
                }
            }
        }
        out.push_back(bool_check("rho(D^-1 E) < 1 in >= 99% of 1000 channels", below >= 990,
                                 std::to_string(below) + "/1000"));
    }

    SweepConfig sc;
    sc.seed = seed;
    sc.trials = 1250;  // 10^4 symbols at M = 8
    sc.ks.clear();
    for (int k = 1; k <= 16; ++k) sc.ks.push_back(k);
    sc.snrs_db = {5.0, 20.0};
    std::vector<SweepRow> rows = sweep(sc);
    std::vector<const SweepRow*> fl;
    for (const auto& r : rows)
        if (r.fidelity == "float" && r.snr_db == 20.0) fl.push_back(&r);
    std::sort(fl.begin(), fl.end(), [](auto* a, auto* b) { return a->k < b->k; });
    int k_conv = 0;
    for (auto* r : fl)
        if (r->inversion_rel_error < 1e-3) {
            k_conv = r->k;
            break;
        }
    for (double snr : sc.snrs_db) {
        const SweepRow *exact = nullptr, *conv = nullptr;
        for (const auto& r : rows) {
            if (r.snr_db != snr) continue;
            if (r.fidelity == "exact") exact = &r;
            if (r.fidelity == "float" && r.k == k_conv) conv = &r;
        }
        const std::string name = "float Neumann SER at convergent k within 2x exact (" + fmt(snr) + " dB)";
        if (!conv || !exact) {
            out.push_back(bool_check(name, false, "no k in 1..16 reached 1e-3 inversion error"));
            continue;
        }
        out.push_back(bool_check(name, conv->ser <= 2.0 * exact->ser,
                                 "k=" + std::to_string(conv->k) + " SER " + fmt(conv->ser, 4) + " vs exact " +
                                     fmt(exact->ser, 4) + " over " + std::to_string(conv->symbols) + " symbols"));
    }
    bool monotone = true;
    std::string trend;
    for (size_t i = 0; i < fl.size(); ++i) {
        if (i > 0) monotone &= fl[i]->inversion_rel_error <= fl[i - 1]->inversion_rel_error;
        if (i < 6) trend += fmt(fl[i]->inversion_rel_error, 3) + " ";
    }
    out.push_back(bool_check("mean inversion error non-increasing in k", monotone, "k=1..6: " + trend));

    EngineConfig ec = make_engine_config(8, 4, seed);
    MvmEngine eng(ec);
    eng.calibrate();
    SweepConfig fc;
    fc.seed = seed;
    fc.trials = 100;
    fc.ks = {1, 2, 3, 4};
    fc.snrs_db = {20.0};
    fc.fidelities = {std::nullopt, FidelityMode::FULL};
    fc.include_exact = false;
    std::vector<SweepRow> fr = sweep(fc, &eng);
    bool finite = !fr.empty();
    std::ostringstream gap;
    for (const auto& r : fr) finite &= std::isfinite(r.ser) && std::isfinite(r.inversion_rel_error);
    for (int k : fc.ks) {
        const SweepRow *f = nullptr, *q = nullptr;
        for (const auto& r : fr) {
            if (r.k != k) continue;
            (r.fidelity == "float" ? f : q) = &r;
        }
        if (f && q)
            gap << "k=" << k << " inv " << fmt(q->inversion_rel_error, 3) << " vs " << fmt(f->inversion_rel_error, 3)
                << ", SER " << fmt(q->ser, 3) << " vs " << fmt(f->ser, 3) << "; ";
    }
    out.push_back(bool_check("FULL-fidelity pipeline end to end (quantized vs float)", finite, gap.str()));
}

}  // namespace

std::vector<CriterionResult> run_criteria(std::uint64_t seed) {
    std::vector<CriterionResult> r;
    r.push_back(timed(1, "Channel plan reproduction", 1.0, criterion_plan));
    r.push_back(timed(2, "Projected performance table", 1.0, criterion_projection));
    r.push_back(timed(3, "Block-level numbers", 0.0, criterion_blocks));
    r.push_back(timed(4, "E/O linearization", 1.0, criterion_eo));
    r.push_back(timed(5, "Engine oracle equivalence", 60.0, [&](auto& c) { criterion_engine(c, seed); }));
    r.push_back(timed(6, "Neumann correctness", 10.0, [&](auto& c) { criterion_neumann(c, seed); }));
    r.push_back(timed(7, "MIMO property suite", 300.0, [&](auto& c) { criterion_mimo(c, seed); }));
    return r;
}

std::string model_notes() {
    std::ostringstream os;
    HsDacModel hs;
    os << "note hs_dac: averaged-code power " << fmt(hs_dac_static_power(hs) * 1e3) << " mW; printed 2^(L-1) "
       << "denominator gives " << fmt(hs_dac_static_power_printed(hs) * 1e3) << " mW\n";
    os << "note hs_dac: settling residual exp(-budget/tau) = " << fmt(hs.settling_residual(), 4) << " vs 2^-(L+1) = "
       << fmt(std::ldexp(1.0, -(hs.L + 1)), 4) << (hs.settles() ? " (settles)" : " (does not settle at R_hs=2k)")
       << '\n';
    R2rDacModel r2r;
    os << "note r2r_dac: nodal average " << fmt(r2r_dac_static_power(r2r) * 1e6) << " uW, closed form "
       << fmt(r2r_closed_form_power(r2r) * 1e6) << " uW, budget used by the power model "
       << fmt(BlockBudget{}.r2r_dac_w * 1e6) << " uW\n";
    AnalogChainModel an;
    NoiseTerms nt = noise_terms_at_adc(an, 335e-6);
    os << "note noise: shot " << fmt(nt.shot * 1e6) << " uW, tia " << fmt(nt.tia * 1e6) << " uW, amp "
       << fmt(nt.amp * 1e6) << " uW; input-referred TIA noise " << fmt(tia_input_noise_psd(an) * 1e12, 4)
       << " pA/rtHz\n";
    const MaterialModel mat = default_material();
    PlannerConfig pc;
    WdmPlan p = plan_all(pc, mat);
    PlanReport pr = validate_plan(p, mat);
    os << "note plan M=32: resonance residual " << fmt(pr.max_resonance_residual, 3) << " nm, local FSR deviation "
       << fmt(pr.max_fsr_spacing_dev * 100, 3) << "%, issues " << pr.issues.size() << '\n';
    WdmPlan q = plan_mma_spectrum(p, mat);
    os << "note interleaved comb: L' " << fmt(q.L_rtr) << " um, first offset " << fmt(q.lambdas[0] - p.lambdas[0], 4)
       << " nm\n";
    os << "note digital overhead fit: " << fmt(fit_digital_overhead() * 1e3, 5) << " mW/row\n";
    return os.str();
}

std::string render_report(const std::vector<CriterionResult>& results, std::uint64_t seed) {
    std::ostringstream os;
    os << "# " << kToolName << ' ' << kToolVersion << " validate seed=" << seed << '\n';
    for (const auto& r : results) {
        os << (r.checks_pass() ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.title << '\n';
        for (const auto& c : r.checks)
            os << "    " << (c.pass ? "ok  " : "BAD ") << c.name << ": " << c.detail << '\n';
    }
    os << model_notes();
    return os.str();
}

std::string validate_report(std::uint64_t seed, bool* all_pass) {
    std::vector<CriterionResult> r = run_criteria(seed);
    if (all_pass)
        *all_pass = std::all_of(r.begin(), r.end(), [](const CriterionResult& c) { return c.checks_pass(); });
    return render_report(r, seed);
}

CriterionResult run_determinism(std::uint64_t seed) {
    return timed(8, "Determinism", 0.0, [&](auto& out) {
        std::string a = validate_report(seed), b = validate_report(seed);
        out.push_back(bool_check("validate twice, same seed", a == b,
                                 std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")));
    });
}

}  // namespace msiph
