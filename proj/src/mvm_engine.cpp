#include "msiph/mvm_engine.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "msiph/errors.hpp"

namespace msiph {

namespace {

int round_half_up(long long num, long long den) { return static_cast<int>((2 * num + den) / (2 * den)); }

void check_codes(const std::vector<int>& codes, int L) {
    const int top = (1 << L) - 1;
    for (int c : codes)
        if (c < 0 || c > top) throw DomainExceeded("operand code out of range");
}

}  // namespace

void QuantizedVector::check() const {
    check_codes(codes, L);
    if (!(scale > 0)) throw DomainExceeded("vector scale must be positive");
}

QuantizedVector QuantizedMatrix::column(int j) const {
    QuantizedVector v;
    v.L = L;
    v.scale = scale;
    v.codes.resize(rows);
    for (int i = 0; i < rows; ++i) v.codes[i] = at(i, j);
    return v;
}

void QuantizedMatrix::set_column(int j, const QuantizedVector& v) {
    for (int i = 0; i < rows; ++i) at(i, j) = v.codes[i];
}

void QuantizedMatrix::check() const {
    if (codes.size() != static_cast<size_t>(rows) * cols) throw DimensionMismatch("matrix storage size");
    check_codes(codes, L);
    if (!(scale > 0)) throw DomainExceeded("matrix scale must be positive");
}

const char* to_string(FidelityMode m) {
    switch (m) {
        case FidelityMode::IDEAL: return "ideal";
        case FidelityMode::DEVICE: return "device";
        case FidelityMode::FULL: return "full";
    }
    return "?";
}

FidelityMode fidelity_from_string(const std::string& s) {
    if (s == "ideal") return FidelityMode::IDEAL;
    if (s == "device") return FidelityMode::DEVICE;
    if (s == "full") return FidelityMode::FULL;
    throw ConfigError("unknown fidelity '" + s + "'");
}

EngineConfig make_engine_config(int M, int L, std::uint64_t seed, double delta_lambda, bool with_mma) {
    EngineConfig cfg;
    cfg.M = M;
    cfg.L = L;
    cfg.seed = seed;
    cfg.material = default_material();
    PlannerConfig pc;
    pc.M = M;
    pc.delta_lambda_target = delta_lambda;
    cfg.plan = plan_all(pc, cfg.material);
    if (with_mma) cfg.mma_plan = plan_mma_spectrum(cfg.plan, cfg.material);
    cfg.devices.hs_dac.L = L;
    cfg.devices.r2r_dac.L = L;
    cfg.devices.adc.L = L;
    cfg.devices.rtr_pd.L_rtr = cfg.plan.L_rtr;
    cfg.devices.rtr_pd.weight_ref = rtr_weight_ref(cfg.plan.lambdas, cfg.material.n_g);
    return cfg;
}

QuantizedVector golden_mvm(const QuantizedMatrix& a, const QuantizedVector& y) {
    if (a.cols != y.size() || a.L != y.L) throw DimensionMismatch("matrix columns must match vector length");
    const long long top = (1 << a.L) - 1;
    const long long den = static_cast<long long>(a.cols) * top;
    QuantizedVector out;
    out.L = a.L;
    out.scale = a.cols * a.scale * y.scale;
    out.codes.resize(a.rows);
    for (int i = 0; i < a.rows; ++i) {
        long long s = 0;
        for (int j = 0; j < a.cols; ++j) s += static_cast<long long>(a.at(i, j)) * y.codes[j];
        out.codes[i] = std::clamp<int>(round_half_up(s, den), 0, static_cast<int>(top));
    }
    return out;
}

QuantizedVector golden_mvm_add(const QuantizedMatrix& a, const QuantizedVector& y, const QuantizedVector& b) {
    if (a.cols != y.size() || b.size() != a.rows || a.L != y.L || a.L != b.L)
        throw DimensionMismatch("fused add operand shapes disagree");
    const long long top = (1 << a.L) - 1;
    const long long M = a.cols;
    QuantizedVector out;
    out.L = a.L;
    out.scale = 2.0 * M * a.scale * y.scale;
    out.codes.resize(a.rows);
    for (int i = 0; i < a.rows; ++i) {
        long long s = M * top * b.codes[i];
        for (int j = 0; j < a.cols; ++j) s += static_cast<long long>(a.at(i, j)) * y.codes[j];
        out.codes[i] = std::clamp<int>(round_half_up(s, 2 * M * top), 0, static_cast<int>(top));
    }
    return out;
}

MvmEngine::MvmEngine(EngineConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.plan.M() != cfg_.M) throw DimensionMismatch("engine M does not match the plan");
    if (cfg_.devices.adc.L != cfg_.L || cfg_.devices.hs_dac.L != cfg_.L || cfg_.devices.r2r_dac.L != cfg_.L)
        throw ConfigError("converter widths must equal engine L");
    if (cfg_.mma_plan && cfg_.mma_plan->M() != cfg_.M) throw DimensionMismatch("b-comb plan size");
    auto& rs = cfg_.devices.row_responsivity_scale;
    if (rs.empty()) rs.assign(cfg_.M, 1.0);
    if (static_cast<int>(rs.size()) != cfg_.M) throw DimensionMismatch("row responsivity list");
    if (!(cfg_.devices.rtr_pd.weight_ref > 0))
        cfg_.devices.rtr_pd.weight_ref = rtr_weight_ref(cfg_.plan.lambdas, cfg_.material.n_g);
    check_clock();
}

double MvmEngine::latency_budget() const {
    const auto& an = cfg_.devices.analog;
    const double settle = std::log(std::ldexp(1.0, cfg_.L + 1));
    return cfg_.devices.hs_dac.settling_budget + settle * (an.R_tia() * an.C_tia + an.R_amp * an.C_amp);
}

void MvmEngine::check_clock() const {
    if (!(cfg_.clock_rate > 0)) throw ConfigError("engine.clock_rate must be positive");
    if (latency_budget() > 1.0 / cfg_.clock_rate) {
        std::ostringstream os;
        os << "settling " << latency_budget() * 1e12 << " ps exceeds the " << 1e12 / cfg_.clock_rate
           << " ps clock period";
        throw ConfigError(os.str());
    }
}

double MvmEngine::responsivity(int row) const {
    return cfg_.devices.rtr_pd.responsivity * cfg_.devices.row_responsivity_scale[row];
}

void MvmEngine::require_calibrated() const {
    if (!calibrated_) throw UncalibratedDevice("calibrate() has not run");
}

std::uint64_t MvmEngine::reserve_ops(std::uint64_t n) {
    std::uint64_t base = op_counter_;
    op_counter_ += n;
    return base;
}

void MvmEngine::calibrate() {
    const auto& dev = cfg_.devices;
    const int M = cfg_.M, L = cfg_.L;
    const int levels = 2 << L;
    std::vector<double> hs_levels = uniform_levels(levels, dev.hs_dac.V_ddh);
    R2rDacModel wide = dev.r2r_dac;
    wide.L = L + 1;
    std::vector<double> r2r_levels(levels);
    for (int k = 0; k < levels; ++k) r2r_levels[k] = r2r_output_voltage(wide, static_cast<unsigned>(k));

    const auto& ng = cfg_.material.n_g;
    const double ref = dev.rtr_pd.weight_ref;
    y_tab_.clear();
    a_tab_.clear();
    b_tab_.clear();
    w_.assign(M, 0.0);
    for (int j = 0; j < M; ++j) {
        MrmModel m = dev.mrm;
        double lam = cfg_.plan.lambdas[j];
        m.lambda_res_at_zero = lam;
        y_tab_.push_back(calibrate_eo(m, hs_levels, lam));
        a_tab_.push_back(calibrate_eo(m, r2r_levels, lam));
        w_[j] = lam / ng(lam) / ref;
    }
    excess_ = SplitterModel::for_rows(M).excess();
    const double eta = dev.rtr_pd.absorption();
    const int top = max_code();
    double s = 0.0;
    for (int j = 0; j < M; ++j) s += w_[j] * y_tab_[j].gains[top] * a_tab_[j].gains[top];
    p_lambda_ = dev.dr_oe * M / (eta * excess_ * s);

    w_b_.clear();
    p_b_.clear();
    if (cfg_.mma_plan) {
        for (int i = 0; i < M; ++i) {
            MrmModel m = dev.mrm;
            double lam = cfg_.mma_plan->lambdas[i];
            m.lambda_res_at_zero = lam;
            b_tab_.push_back(calibrate_eo(m, r2r_levels, lam));
            w_b_.push_back(lam / ng(lam) / ref);
            p_b_.push_back(0.5 * dev.dr_oe / (eta * w_b_.back() * b_tab_.back().gains[top]));
        }
    }
    z_chain_ = tia_response(dev.analog).dc_transimpedance * dev.analog.amp_gain();
    calibrated_ = true;
    try {
        end_to_end_gain_cal();
    } catch (...) {
        calibrated_ = false;
        throw;
    }
}

GainCalibration MvmEngine::end_to_end_gain_cal() {
    require_calibrated();
    mvm_trim_ = trim(Path::MVM);
    if (has_mma()) {
        add_trim_ = trim(Path::MVM_ADD);
        x_trim_ = trim(Path::ADD);
    }
    return mvm_trim_;
}

double MvmEngine::row_current(Path path, int i, const QuantizedMatrix* a, const QuantizedVector* y,
                              const QuantizedVector* x, const QuantizedVector* b) const {
    const double eta = cfg_.devices.rtr_pd.absorption();
    const double eps = cfg_.devices.crosstalk;
    const int M = cfg_.M;
    double absorbed = 0.0;
    if (path != Path::ADD) {
        double s = 0.0;
        for (int j = 0; j < M; ++j) {
            double ga = a_tab_[j].gains[a->at(i, j)];
            if (eps > 0) {
                if (j > 0) ga *= 1.0 - eps * (1.0 - a_tab_[j - 1].gains[a->at(i, j - 1)]);
                if (j + 1 < M) ga *= 1.0 - eps * (1.0 - a_tab_[j + 1].gains[a->at(i, j + 1)]);
            }
            s += w_[j] * y_tab_[j].gains[y->codes[j]] * ga;
        }
        double p = p_lambda_ * excess_ / M * s;
        absorbed += path == Path::MVM_ADD ? 0.5 * p : p;
    }
    if (path == Path::ADD) {
        // the ay row re-enters on its own wavelength at half the detector range
        const double top_gain = y_tab_[i].gains[max_code()];
        absorbed += 0.5 * cfg_.devices.dr_oe / eta * y_tab_[i].gains[x->codes[i]] / top_gain;
    }
    if (path != Path::MVM) absorbed += w_b_[i] * p_b_[i] * b_tab_[i].gains[b->codes[i]];
    return responsivity(i) * eta * absorbed;
}

GainCalibration MvmEngine::trim(Path path) {
    const int M = cfg_.M, top = max_code();
    QuantizedMatrix a0(M, M, cfg_.L), a1(M, M, cfg_.L);
    std::fill(a1.codes.begin(), a1.codes.end(), top);
    QuantizedVector v0{std::vector<int>(M, 0), 1.0, cfg_.L};
    QuantizedVector v1{std::vector<int>(M, top), 1.0, cfg_.L};

    GainCalibration g;
    for (int i = 0; i < M; ++i) {
        double lo = row_current(path, i, &a0, &v0, &v0, &v0) * z_chain_;
        double hi = row_current(path, i, &a1, &v1, &v1, &v1) * z_chain_;
        g.pedestal.push_back(lo);
        g.row_gain.push_back(hi - lo);
    }
    auto [mn, mx] = std::minmax_element(g.row_gain.begin(), g.row_gain.end());
    double sum = 0.0;
    for (double x : g.row_gain) sum += x;
    g.mean_gain = sum / M;
    g.spread = (*mx - *mn) / g.mean_gain;
    if (g.spread >= 0.01) {
        std::ostringstream os;
        os << "row gains disagree by " << g.spread * 100 << "%";
        throw GainSpreadExceeded(os.str());
    }
    g.volts_per_code_product = g.mean_gain / (static_cast<double>(M) * top * top);
    const auto& adc = cfg_.devices.adc;
    g.full_scale_code = adc_quantize(adc, (g.row_gain[0]) * adc.full_scale_diff / g.mean_gain);
    return g;
}

MvmResult MvmEngine::finish(Path path, FidelityMode mode, const std::vector<double>& currents,
                            const std::vector<int>& golden, std::uint64_t op) const {
    const GainCalibration& t = path == Path::MVM ? mvm_trim_ : path == Path::MVM_ADD ? add_trim_ : x_trim_;
    const auto& dev = cfg_.devices;
    const double fs = dev.adc.full_scale_diff;
    MvmResult r;
    r.out.L = cfg_.L;
    r.out.codes.resize(cfg_.M);
    r.rows.resize(cfg_.M);
    for (int i = 0; i < cfg_.M; ++i) {
        RowDiag& d = r.rows[i];
        d.row = i;
        d.photocurrent = currents[i];
        d.voltage = currents[i] * z_chain_;
        double var = noise_power_at_adc(dev.analog, currents[i]) * dev.noise_scale +
                     dev.adc_noise_rms * dev.adc_noise_rms;
        d.snr_db = var > 0 ? 10.0 * std::log10(d.voltage * d.voltage / var + 1e-300) : 0.0;
        if (mode == FidelityMode::FULL && var > 0) {
            std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                              static_cast<std::uint32_t>(op), static_cast<std::uint32_t>(op >> 32),
                              static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(path)};
            std::mt19937_64 gen(seq);
            std::normal_distribution<double> nd(0.0, std::sqrt(var));
            d.noise = nd(gen);
        }
        double v_adc = (d.voltage + d.noise - t.pedestal[i]) * fs / t.mean_gain;
        d.code = adc_quantize(dev.adc, v_adc);
        d.golden = golden[i];
        d.error = d.code - d.golden;
        r.out.codes[i] = d.code;
    }
    return r;
}

namespace {

MvmResult ideal_result(const QuantizedVector& g) {
    MvmResult r;
    r.out = g;
    r.rows.resize(g.size());
    for (int i = 0; i < g.size(); ++i) {
        r.rows[i].row = i;
        r.rows[i].code = r.rows[i].golden = g.codes[i];
    }
    return r;
}

}  // namespace

MvmResult MvmEngine::run_mvm(FidelityMode mode, const QuantizedMatrix& a, const QuantizedVector& y,
                             std::optional<std::uint64_t> op_id) {
    if (a.rows != cfg_.M || a.cols != cfg_.M || y.size() != cfg_.M)
        throw DimensionMismatch("operands must be M x M and M");
    if (a.L != cfg_.L || y.L != cfg_.L) throw DimensionMismatch("operand width differs from engine L");
    a.check();
    y.check();
    const std::uint64_t op = op_id ? *op_id : reserve_ops(1);
    QuantizedVector g = golden_mvm(a, y);
    if (mode == FidelityMode::IDEAL) return ideal_result(g);
    require_calibrated();
    std::vector<double> cur(cfg_.M);
    for (int i = 0; i < cfg_.M; ++i) cur[i] = row_current(Path::MVM, i, &a, &y, nullptr, nullptr);
    MvmResult r = finish(Path::MVM, mode, cur, g.codes, op);
    r.out.scale = g.scale;
    return r;
}

MvmResult MvmEngine::run_mvm_add(FidelityMode mode, const QuantizedMatrix& a, const QuantizedVector& y,
                                 const QuantizedVector& b, std::optional<std::uint64_t> op_id) {
    if (!has_mma()) throw PlanMissing("no b-comb plan for matrix addition");
    if (a.rows != cfg_.M || a.cols != cfg_.M || y.size() != cfg_.M || b.size() != cfg_.M)
        throw DimensionMismatch("operands must be M x M and M");
    a.check();
    y.check();
    b.check();
    const std::uint64_t op = op_id ? *op_id : reserve_ops(1);
    QuantizedVector g = golden_mvm_add(a, y, b);
    if (mode == FidelityMode::IDEAL) return ideal_result(g);
    require_calibrated();
    std::vector<double> cur(cfg_.M);
    for (int i = 0; i < cfg_.M; ++i) cur[i] = row_current(Path::MVM_ADD, i, &a, &y, nullptr, &b);
    MvmResult r = finish(Path::MVM_ADD, mode, cur, g.codes, op);
    r.out.scale = g.scale;
    return r;
}

MvmResult MvmEngine::run_add(FidelityMode mode, const QuantizedVector& x, const QuantizedVector& b,
                             std::optional<std::uint64_t> op_id) {
    if (!has_mma()) throw PlanMissing("no b-comb plan for matrix addition");
    if (x.size() != cfg_.M || b.size() != cfg_.M) throw DimensionMismatch("addends must have length M");
    x.check();
    b.check();
    const std::uint64_t op = op_id ? *op_id : reserve_ops(1);
    QuantizedVector g{std::vector<int>(cfg_.M), 2.0 * x.scale, cfg_.L};
    for (int i = 0; i < cfg_.M; ++i) g.codes[i] = round_half_up(x.codes[i] + b.codes[i], 2);
    if (mode == FidelityMode::IDEAL) return ideal_result(g);
    require_calibrated();
    std::vector<double> cur(cfg_.M);
    for (int i = 0; i < cfg_.M; ++i) cur[i] = row_current(Path::ADD, i, nullptr, nullptr, &x, &b);
    MvmResult r = finish(Path::ADD, mode, cur, g.codes, op);
    r.out.scale = g.scale;
    return r;
}

std::string export_diagnostics(const MvmResult& r, std::uint64_t op) {
    std::ostringstream os;
    os << std::setprecision(9);
    for (const auto& d : r.rows)
        os << op << ',' << d.row << ',' << d.photocurrent << ',' << d.voltage << ',' << d.noise << ','
           << d.code << ',' << d.golden << ',' << d.error << '\n';
    return os.str();
}

}  // namespace msiph
