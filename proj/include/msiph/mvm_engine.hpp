#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msiph/device_models.hpp"
#include "msiph/material.hpp"
#include "msiph/wdm_planner.hpp"

namespace msiph {

struct QuantizedVector {
    std::vector<int> codes;
    double scale = 1.0;
    int L = 4;

    int size() const { return static_cast<int>(codes.size()); }
    void check() const;
};

/// Row-major code matrix.
struct QuantizedMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> codes;
    double scale = 1.0;
    int L = 4;

    QuantizedMatrix() = default;
    QuantizedMatrix(int r, int c, int bits, double s = 1.0)
        : rows(r), cols(c), codes(static_cast<size_t>(r) * c, 0), scale(s), L(bits) {}

    int& at(int i, int j) { return codes[static_cast<size_t>(i) * cols + j]; }
    int at(int i, int j) const { return codes[static_cast<size_t>(i) * cols + j]; }
    QuantizedVector column(int j) const;
    void set_column(int j, const QuantizedVector& v);
    void check() const;
};

enum class FidelityMode { IDEAL, DEVICE, FULL };

const char* to_string(FidelityMode m);
FidelityMode fidelity_from_string(const std::string& s);

/// Everything that shapes the analog signal path.
struct DeviceChain {
    HsDacModel hs_dac;
    R2rDacModel r2r_dac;
    MrmModel mrm;                    // lambda_res_at_zero is overridden per channel
    RtrPdModel rtr_pd;
    AnalogChainModel analog;
    AdcModel adc;
    double dr_oe = 670e-6;           // W absorbed at full scale
    std::vector<double> row_responsivity_scale;  // empty = all 1
    double crosstalk = 0.0;          // adjacent-channel leakage factor
    double noise_scale = 1.0;        // multiplies the ADC-input noise variance in FULL mode
    double adc_noise_rms = 0.0;      // extra comparator noise, V
};

struct EngineConfig {
    int M = 32;
    int L = 4;
    WdmPlan plan;
    std::optional<WdmPlan> mma_plan;
    MaterialModel material;
    DeviceChain devices;
    double clock_rate = 2e9;
    std::uint64_t seed = 1;
};

/// Planner + default devices for an M-channel engine at L bits.
EngineConfig make_engine_config(int M, int L = 4, std::uint64_t seed = 1,
                                double delta_lambda = 0.5, bool with_mma = true);

/// Exact code-domain product: round-half-up of sum(a*y)/(M*(2^L-1)).
QuantizedVector golden_mvm(const QuantizedMatrix& a, const QuantizedVector& y);

/// Code-domain fused product and add: round-half-up of
/// (sum(a*y) + M*(2^L-1)*b) / (2*M*(2^L-1)).
QuantizedVector golden_mvm_add(const QuantizedMatrix& a, const QuantizedVector& y,
                               const QuantizedVector& b);

struct RowDiag {
    int row = 0;
    double photocurrent = 0.0;  // A
    double voltage = 0.0;       // V before the ADC
    double noise = 0.0;         // V
    double snr_db = 0.0;
    int code = 0;
    int golden = 0;
    int error = 0;              // code - golden, LSB
};

struct MvmResult {
    QuantizedVector out;
    std::vector<RowDiag> rows;
};

struct GainCalibration {
    std::vector<double> row_gain;   // V between zero and full-scale probes
    std::vector<double> pedestal;   // V at zero probe
    double mean_gain = 0.0;
    double spread = 0.0;            // (max - min) / mean
    double volts_per_code_product = 0.0;
    int full_scale_code = 0;
};

class MvmEngine {
public:
    explicit MvmEngine(EngineConfig cfg);

    const EngineConfig& config() const { return cfg_; }
    int M() const { return cfg_.M; }
    int L() const { return cfg_.L; }
    int max_code() const { return (1 << cfg_.L) - 1; }

    /// Builds the E/O tables for every wavelength, sets the comb power and
    /// trims the chain gain.
    void calibrate();
    bool calibrated() const { return calibrated_; }
    bool has_mma() const { return cfg_.mma_plan.has_value(); }

    GainCalibration end_to_end_gain_cal();
    const GainCalibration& gain() const { return mvm_trim_; }

    const EoCalibrationTable& y_table(int j) const { return y_tab_.at(j); }
    const EoCalibrationTable& a_table(int j) const { return a_tab_.at(j); }
    double comb_power() const { return p_lambda_; }

    /// Reserve a block of operation ids for noise streams.
    std::uint64_t reserve_ops(std::uint64_t n);

    MvmResult run_mvm(FidelityMode mode, const QuantizedMatrix& a, const QuantizedVector& y,
                      std::optional<std::uint64_t> op_id = std::nullopt);

    /// One pass of the product with a second comb adding b per row.
    MvmResult run_mvm_add(FidelityMode mode, const QuantizedMatrix& a, const QuantizedVector& y,
                          const QuantizedVector& b,
                          std::optional<std::uint64_t> op_id = std::nullopt);

    /// Element-wise add of two code vectors through the doubled-cavity PD.
    MvmResult run_add(FidelityMode mode, const QuantizedVector& x, const QuantizedVector& b,
                      std::optional<std::uint64_t> op_id = std::nullopt);

    /// Feasibility of the clock period; throws ConfigError on violation.
    void check_clock() const;
    double latency_budget() const;

private:
    enum class Path { MVM, MVM_ADD, ADD };

    double row_current(Path path, int row, const QuantizedMatrix* a, const QuantizedVector* y,
                       const QuantizedVector* x, const QuantizedVector* b) const;
    MvmResult finish(Path path, FidelityMode mode, const std::vector<double>& currents,
                     const std::vector<int>& golden, std::uint64_t op) const;
    GainCalibration trim(Path path);
    double responsivity(int row) const;
    void require_calibrated() const;

    EngineConfig cfg_;
    bool calibrated_ = false;
    std::vector<EoCalibrationTable> y_tab_, a_tab_, b_tab_;
    std::vector<double> w_;      // racetrack absorption weight per channel
    std::vector<double> w_b_;    // weight of the b wavelength per row
    double p_lambda_ = 0.0;      // comb power per wavelength
    std::vector<double> p_b_;    // b comb power per row
    double excess_ = 1.0;
    double z_chain_ = 0.0;       // V per A up to the ADC input
    GainCalibration mvm_trim_, add_trim_, x_trim_;
    std::uint64_t op_counter_ = 0;
};

std::string export_diagnostics(const MvmResult& r, std::uint64_t op);

}  // namespace msiph
