#pragma once

#include <optional>
#include <string>
#include <vector>

namespace msiph {

/// Powers in W, areas in um^2.
struct BlockBudget {
    double hs_dac_w = 0.65e-3;
    double hs_dac_area = 50.0 * 20.0;
    double r2r_dac_w = 7.2e-6;
    double r2r_dac_area = 20.0 * 10.0;
    double mrm_tile_area = 20.0 * 20.0;
    double rtr_pd_length = 480.0;       // um at the reference dimension
    double rtr_pd_width = 20.0;
    int rtr_reference_M = 32;
    double analog_chain_w = 0.1e-3 + 0.75e-3 + 1.2e-3;
    double analog_chain_area = 100.0 * 20.0;
    double digital_overhead_per_row_w = 0.6319e-3;
    double splitter_stage_length = 35.0;
    double splitter_row_pitch = 20.0;
    double heater_unit_w = 2.4e-3;
    double dr_oe = 670e-6;
    double clock_hz = 2e9;
    int bits = 4;
};

struct PowerBreakdown {
    double laser = 0.0;
    double heater = 0.0;
    double electronics = 0.0;
    double soc = 0.0;
};

struct PerfReport {
    int M = 0;
    double laser_w = 0.0;
    double heater_w = 0.0;
    double electronics_w = 0.0;
    double soc_w = 0.0;
    double area_mm2 = 0.0;
    double tops = 0.0;
    double tmacs = 0.0;
    double density_tmacs_per_mm2 = 0.0;
    std::optional<double> energy_fj_per_mac;
    double clock_hz = 0.0;
    int bits = 0;
};

struct ReferenceRow {
    int M;
    double laser_mw, heater_mw, soc_mw, area_mm2, tmacs, density, energy_fj;
};

/// Published projection rows for M = 16..256.
const std::vector<ReferenceRow>& reference_table();

struct TpuReference {
    double tmacs = 68.81;
    double area_mm2 = 400.0;
    double density = 0.17;
    double energy_fj_per_mac = 1141.9;
    double busy_power_w = 78.571;
};

double heater_power(int M, const BlockBudget& b = {});
PowerBreakdown total_power(int M, const BlockBudget& b = {});
double total_area_um2(int M, const BlockBudget& b = {});
double total_area(int M, const BlockBudget& b = {});  // mm^2
PerfReport perf_report(int M, const BlockBudget& b = {});

struct PerfTable {
    std::vector<PerfReport> rows;
    TpuReference tpu;
};

PerfTable perf_table(const std::vector<int>& Ms, const BlockBudget& b = {});

/// Least-squares per-row overhead against the reference SoC column.
double fit_digital_overhead(const BlockBudget& b = {});

/// CSV with a relative-difference column per value where a reference exists.
std::string perf_csv(const PerfTable& t);

}  // namespace msiph
