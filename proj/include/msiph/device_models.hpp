#pragma once

#include <random>
#include <utility>
#include <vector>

#include "msiph/material.hpp"

namespace msiph {

inline constexpr double kElectronCharge = 1.602e-19;
inline constexpr double kBoltzmann = 1.38e-23;

struct HsDacModel {
    int L = 4;
    double V_ddh = 2.4;
    double R_hs = 2000.0;
    double C_load = 30e-15;
    double settling_budget = 200e-12;

    double tau() const { return R_hs * C_load; }
    double settling_residual() const;
    bool settles() const;  // residual < 2^-(L+1)
};

struct R2rDacModel {
    int L = 4;
    double V_ddh = 2.4;
    double R_u = 5e6;
};

struct MrmModel {
    double lambda_res_at_zero = 1550.0;  // nm
    double shift_rate = 0.04;            // nm/V
    double Q = 8000.0;
    double extinction_floor = 1e-3;      // gain at the notch centre
    double insertion_loss_db = 0.0;

    double lambda_res(double v) const { return lambda_res_at_zero + shift_rate * v; }
};

struct RtrPdModel {
    double L_rtr = 951.32;         // um
    double Q_rtr = 8000.0;
    double responsivity = 0.5;     // A/W
    double dr_loss_db = 2.5;
    double weight_ref = 0.0;       // mean lambda/n_g over the plan, nm

    double absorption() const;     // 10^(-dr_loss_db/10)
};

struct SplitterModel {
    int stages = 5;
    double split_db_per_stage = 3.01;
    double excess_loss_db_per_stage = 0.07;

    static SplitterModel for_rows(int M);
    double excess() const;               // aggregate transmission of the tree
    double per_output(double p_in) const;
    int outputs() const { return 1 << stages; }
};

struct AnalogChainModel {
    double G_m_tia = 1e-3;
    double R_f = 1650.0;
    double C_tia = 30e-15;
    double G_m_amp = 5e-3;
    double R_amp = 600.0;
    double C_amp = 80e-15;
    double g_m_ind = 0.0;   // <= 0 selects the value that puts full-scale noise at 11 uW
    double gamma = 2.5;
    double T = 300.0;

    double R_tia() const;
    double amp_gain() const { return G_m_amp * R_amp; }
    double resolved_g_m_ind() const;
};

struct AdcModel {
    int L = 4;
    double full_scale_diff = 1.0;

    int max_code() const { return (1 << L) - 1; }
    int comparator_count() const { return max_code(); }
    double lsb() const { return full_scale_diff / max_code(); }
    double quantization_noise() const;  // V^2
};

struct EoCalibrationTable {
    std::vector<int> code_map;       // code -> drive level index
    std::vector<double> gains;       // realized gain per code
    std::vector<double> inl;         // per code, LSB
    std::vector<double> dnl;         // per step, LSB
    std::vector<double> raw_gains;   // uniform 2^L levels
    std::vector<double> raw_inl;
    std::vector<double> raw_dnl;

    double max_inl() const;
    double max_dnl() const;
    double raw_max_inl() const;
    double raw_max_dnl() const;
};

double mrm_transmission(const MrmModel& m, double lambda_nm, double v_drive);

/// Endpoint-fit INL (per code) and DNL (per step) of a transfer curve, LSB.
std::pair<std::vector<double>, std::vector<double>> inl_dnl(const std::vector<double>& g);

/// Choose 2^L of the candidate gains (index 0 pinned to code 0) minimizing
/// max(|INL|, |DNL|); ties go to the larger span. Throws CalibrationFailure
/// when the best subset still exceeds 0.5 LSB.
EoCalibrationTable calibrate_levels(const std::vector<double>& candidate_gains, int L,
                                    bool enforce = true);

EoCalibrationTable calibrate_eo(const MrmModel& m, const std::vector<double>& dac_levels,
                                double target_lambda, bool enforce = true);

/// 2^(L+1) drive levels spread evenly over [0, v_max].
std::vector<double> uniform_levels(int count, double v_max);

/// Mean of lambda/n_g over the given wavelengths.
double rtr_weight_ref(const std::vector<double>& lambdas, const PiecewiseLinear& n_g);

double rtr_absorbed_power(const RtrPdModel& pd,
                          const std::vector<std::pair<double, double>>& per_channel_powers,
                          const PiecewiseLinear& n_g);
double rtr_photocurrent(const RtrPdModel& pd, double absorbed_w);

struct TiaResponse {
    double dc_transimpedance;  // ohm
    double bandwidth_hz;
};
TiaResponse tia_response(const AnalogChainModel& c);
double tia_input_noise_psd(const AnalogChainModel& c);  // A/sqrt(Hz)

struct NoiseTerms {
    double shot;
    double tia;
    double amp;
    double total() const { return shot + tia + amp; }
};
NoiseTerms noise_terms_at_adc(const AnalogChainModel& c, double i_pd);
double noise_power_at_adc(const AnalogChainModel& c, double i_pd);
double quantization_margin_db(const AnalogChainModel& c, const AdcModel& a, double i_pd);

double hs_dac_static_power(const HsDacModel& d);
double hs_dac_static_power_printed(const HsDacModel& d);  // 2^(L-1) denominator

/// Uniform-code average power drawn from V_ddh by the R-2R ladder, by nodal
/// analysis of the terminated ladder for every code.
double r2r_dac_static_power(const R2rDacModel& d);
double r2r_code_power(const R2rDacModel& d, unsigned code);
double r2r_output_voltage(const R2rDacModel& d, unsigned code);
double r2r_closed_form_power(const R2rDacModel& d);

double laser_power_per_wavelength(int M, double dr_oe);
double laser_total_power(int M, double dr_oe);

int adc_quantize(const AdcModel& a, double v_diff);

}  // namespace msiph
